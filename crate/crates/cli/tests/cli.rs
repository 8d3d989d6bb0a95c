use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use kmoco::ddt::{self, Tensor};
use kmoco::motion_log::MotionLog;
use kmoco::report::MetricReportJson;
use kmoco::train_log;
use kmoco_core::{fft2c, LineAxis};

fn kmoco(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kmoco")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Sim {
    dir: tempfile::TempDir,
}

impl Sim {
    fn new(size: usize, severity: &str, seed: u64) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let sim = Self { dir };
        let o = kmoco(&["phantom", "--kind", "shepp-logan", "--size", &size.to_string(), "--out", s(&sim.p("clean.ddt"))]);
        assert_eq!(code(&o), 0, "{o:?}");
        let o = kmoco(&[
            "simulate", "--input", s(&sim.p("clean.ddt")), "--severity", severity, "--seed", &seed.to_string(),
            "--out", s(&sim.p("k.ddt")), "--mask-out", s(&sim.p("gt.ddt")), "--motion-log", s(&sim.p("motion.json")),
        ]);
        assert_eq!(code(&o), 0, "{o:?}");
        sim
    }

    fn p(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

#[test]
fn phantom_format_and_repeatability() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.ddt"), dir.path().join("b.ddt"));
    for p in [&a, &b] {
        assert_eq!(code(&kmoco(&["phantom", "--kind", "shepp-logan", "--size", "128", "--out", s(p)])), 0);
    }
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(&bytes[..4], b"DDT1");
    assert_eq!(bytes[4], 0);
    match ddt::read(&a).unwrap() {
        Tensor::Real(g) => assert_eq!(g.shape(), (128, 128)),
        Tensor::Complex(_) => panic!("complex phantom"),
    }
    assert_eq!(bytes, std::fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.ddt");
    let o = kmoco(&["phantom", "--kind", "banana", "--out", s(&out)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&kmoco(&["phantom", "--kind", "shepp-logan", "--size", "8", "--out", s(&out)])), 1);
    assert_eq!(code(&kmoco(&[])), 1);
    assert_eq!(code(&kmoco(&["--help"])), 0);
}

#[test]
fn io_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.ddt");
    let out = dir.path().join("o.ddt");
    let o = kmoco(&[
        "simulate", "--input", s(&missing), "--severity", "light", "--out", s(&out), "--mask-out", s(&out), "--motion-log", s(&out),
    ]);
    assert_eq!(code(&o), 2);
    let junk = dir.path().join("junk.ddt");
    std::fs::write(&junk, b"not a tensor").unwrap();
    let o = kmoco(&[
        "simulate", "--input", s(&junk), "--severity", "light", "--out", s(&out), "--mask-out", s(&out), "--motion-log", s(&out),
    ]);
    assert_eq!(code(&o), 2);
    let o = kmoco(&["evaluate", "--recon", s(&missing), "--ref", s(&missing), "--out", s(&dir.path().join("r.json"))]);
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_event_counts_and_repeatability() {
    for (sev, lo, hi) in [("light", 6, 10), ("heavy", 16, 20)] {
        let a = Sim::new(64, sev, 3);
        let b = Sim::new(64, sev, 3);
        let log = MotionLog::read(&a.p("motion.json")).unwrap();
        let events = log.to_trace().unwrap().event_count();
        assert!((lo..=hi).contains(&events), "{sev}: {events}");
        assert_eq!(log.preset, sev);
        for f in ["k.ddt", "gt.ddt", "motion.json"] {
            assert_eq!(std::fs::read(a.p(f)).unwrap(), std::fs::read(b.p(f)).unwrap(), "{f}");
        }
        let gt = ddt::read_real(&a.p("gt.ddt")).unwrap();
        assert_eq!(gt.shape(), (1, 64));
    }
}

#[test]
fn mask_methods() {
    let sim = Sim::new(64, "heavy", 1);
    let out = sim.p("m.ddt");
    let o = kmoco(&["mask", "--input", s(&sim.p("k.ddt")), "--method", "oracle", "--motion-log", s(&sim.p("motion.json")), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(sim.p("gt.ddt")).unwrap());

    assert_eq!(code(&kmoco(&["mask", "--input", s(&sim.p("k.ddt")), "--method", "oracle", "--out", s(&out)])), 1);
    assert_eq!(code(&kmoco(&["mask", "--input", s(&sim.p("k.ddt")), "--method", "external", "--out", s(&out)])), 1);

    // zero-motion k-space
    let clean = ddt::read_real(&sim.p("clean.ddt")).unwrap();
    let still = sim.p("still.ddt");
    ddt::write(&still, &Tensor::Complex(fft2c(&clean).unwrap())).unwrap();
    let o = kmoco(&["mask", "--input", s(&still), "--method", "detector", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    assert_eq!(ddt::read_mask(&out, LineAxis::Rows).unwrap().popcount(), 0);

    // 40% of row 5 and 20% of row 9 above 0.5
    let prob = kmoco_core::Grid::from_fn(64, 50, |r, c| match r {
        5 if c < 20 => 1.0f32,
        9 if c < 10 => 1.0,
        _ => 0.0,
    });
    let pm = sim.p("prob.ddt");
    ddt::write(&pm, &Tensor::Real(prob.clone())).unwrap();
    let k50 = sim.p("k50.ddt");
    ddt::write(&k50, &Tensor::Complex(prob.to_complex())).unwrap();
    let o = kmoco(&["mask", "--input", s(&k50), "--method", "external", "--mask-in", s(&pm), "--column-frac", "0.3", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{o:?}");
    let m = ddt::read_mask(&out, LineAxis::Rows).unwrap();
    assert_eq!(m.popcount(), 1);
    assert!(m.is_flagged(5));
}

#[test]
fn reconstruct_outputs_and_determinism() {
    let sim = Sim::new(32, "light", 2);
    let run = |tag: &str| {
        let (out, log) = (sim.p(&format!("{tag}.ddt")), sim.p(&format!("{tag}.csv")));
        let o = kmoco(&[
            "reconstruct", "--input", s(&sim.p("k.ddt")), "--mask", s(&sim.p("gt.ddt")), "--motion-log", s(&sim.p("motion.json")),
            "--epochs", "12", "--seed", "7", "--out", s(&out), "--log", s(&log), "--checkpoint", s(&sim.p(&format!("{tag}.ckpt"))),
        ]);
        assert_eq!(code(&o), 0, "{o:?}");
        (out, train_log::read(&log).unwrap())
    };
    let (a_img, a_log) = run("a");
    let (b_img, b_log) = run("b");
    assert_eq!(a_log.len(), 12);
    assert_eq!(a_log[0].omega, 0.5);
    assert!((a_log[11].total - b_log[11].total).abs() <= 1e-7);
    assert_eq!(std::fs::read(a_img).unwrap(), std::fs::read(b_img).unwrap());
    let p = kmoco::checkpoint::read(&sim.p("a.ckpt")).unwrap();
    assert!(p.all_finite());

    let bad = sim.p("bad.ddt");
    ddt::write(&bad, &ddt::mask_tensor(&kmoco_core::KLineMask::empty(LineAxis::Rows, 31))).unwrap();
    let o = kmoco(&["reconstruct", "--input", s(&sim.p("k.ddt")), "--mask", s(&bad), "--epochs", "1", "--out", s(&sim.p("x.ddt")), "--log", s(&sim.p("x.csv"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn evaluate_single_and_batch() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    for (i, seed) in [1, 2, 3].iter().enumerate() {
        assert_eq!(code(&kmoco(&["phantom", "--kind", "smooth-random", "--size", "32", "--seed", &seed.to_string(), "--out", s(&p(&format!("ref{i}.ddt")))])), 0);
        let img = ddt::read_real(&p(&format!("ref{i}.ddt"))).unwrap();
        let noisy = kmoco_core::Grid::from_fn(32, 32, |r, c| img.get(r, c) + 0.02 * ((r * 7 + c * 3 + i) % 5) as f32);
        ddt::write(&p(&format!("rec{i}.ddt")), &Tensor::Real(noisy)).unwrap();
    }
    let o = kmoco(&["evaluate", "--recon", s(&p("ref0.ddt")), "--ref", s(&p("ref0.ddt")), "--out", s(&p("self.json"))]);
    assert_eq!(code(&o), 0, "{o:?}");
    let r = MetricReportJson::read(&p("self.json")).unwrap();
    assert_eq!(r.images[0].psnr_db, 200.0);
    assert_eq!(r.images[0].ssim_pct, 100.0);

    let o = kmoco(&["evaluate", "--recon", s(&p("rec*.ddt")), "--ref", s(&p("ref*.ddt")), "--out", s(&p("batch.json"))]);
    assert_eq!(code(&o), 0, "{o:?}");
    let r = MetricReportJson::read(&p("batch.json")).unwrap();
    assert_eq!(r.images.len(), 3);
    let v: Vec<f64> = r.images.iter().map(|m| m.psnr_db).collect();
    let mean = v.iter().sum::<f64>() / 3.0;
    let std = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
    assert!((r.aggregate.psnr_db.mean - mean).abs() <= 1e-9);
    assert!((r.aggregate.psnr_db.std - std).abs() <= 1e-9);

    let o = kmoco(&["evaluate", "--recon", s(&p("rec*.ddt")), "--ref", s(&p("ref0.ddt")), "--out", s(&p("x.json"))]);
    assert_eq!(code(&o), 1);
    ddt::write(&p("small.ddt"), &Tensor::Real(kmoco_core::Grid::<f32>::zeros(32, 31))).unwrap();
    let o = kmoco(&["evaluate", "--recon", s(&p("small.ddt")), "--ref", s(&p("ref0.ddt")), "--out", s(&p("x.json"))]);
    assert_eq!(code(&o), 1);
}

#[test]
fn non_finite_kspace_exits_three() {
    let sim = Sim::new(32, "light", 4);
    let mut k = ddt::read_complex(&sim.p("k.ddt")).unwrap();
    k.set(3, 3, kmoco_core::Complex::new(f32::NAN, 0.0));
    ddt::write(&sim.p("nan.ddt"), &Tensor::Complex(k)).unwrap();
    let o = kmoco(&["reconstruct", "--input", s(&sim.p("nan.ddt")), "--mask", s(&sim.p("gt.ddt")), "--epochs", "2", "--out", s(&sim.p("x.ddt")), "--log", s(&sim.p("x.csv"))]);
    assert_eq!(code(&o), 3, "{o:?}");
}
