use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use kmoco_core::ddo::{reconstruct_observed, MaskMode, ReconConfig, Reconstruction, DEFAULT_EPOCHS, DEFAULT_LOWPASS_FRACTION, DEFAULT_LR};
use kmoco_core::mask::{column_rule, detect_mask, LinePartition, DEFAULT_COLUMN_FRAC, DEFAULT_Z};
use kmoco_core::metrics::MetricReport;
use kmoco_core::motion::{corrupt, sample_motion, Severity, SeverityPreset, DEFAULT_MAX_ROTATION_DEG, DEFAULT_MM_PER_PIXEL};
use kmoco_core::phantom::{generate_phantom, PhantomKind, PhantomSpec};
use kmoco_core::{KLineMask, LineAxis};
use serde::{Deserialize, Serialize};

use crate::ddt::{self, Tensor};
use crate::error::{CliError, Result};
use crate::motion_log::MotionLog;
use crate::report::{ImageMetrics, MetricReportJson};
use crate::{checkpoint, train_log};

const AXIS: LineAxis = LineAxis::Rows;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    SheppLogan,
    SmoothRandom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SeverityArg {
    Light,
    Heavy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MaskMethod {
    Oracle,
    Detector,
    External,
}

#[derive(Args, Clone, Debug)]
pub struct PhantomArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Clone, Debug)]
pub struct SimulateArgs {
    /// Clean image (real DDT).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub severity: SeverityArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Corrupted k-space (complex DDT).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mask_out: PathBuf,
    #[arg(long)]
    pub motion_log: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MAX_ROTATION_DEG)]
    pub max_rot_deg: f64,
    #[arg(long, default_value_t = DEFAULT_MM_PER_PIXEL)]
    pub mm_per_px: f64,
}

#[derive(Args, Clone, Debug)]
pub struct MaskArgs {
    /// Corrupted k-space (complex DDT).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub method: MaskMethod,
    /// Probability map (real DDT, same shape as the k-space) for `external`.
    #[arg(long)]
    pub mask_in: Option<PathBuf>,
    /// Motion log for `oracle`.
    #[arg(long)]
    pub motion_log: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_Z)]
    pub threshold_z: f64,
    #[arg(long, default_value_t = DEFAULT_COLUMN_FRAC)]
    pub column_frac: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the line-to-segment labels as JSON.
    #[arg(long)]
    pub partition_out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct ReconstructArgs {
    /// Observed k-space (complex DDT).
    #[arg(long)]
    pub input: PathBuf,
    /// Line mask (1 x L real DDT).
    #[arg(long)]
    pub mask: PathBuf,
    #[arg(long, default_value_t = DEFAULT_EPOCHS)]
    pub epochs: usize,
    #[arg(long, default_value_t = DEFAULT_LR)]
    pub lr: f64,
    #[arg(long, default_value_t = DEFAULT_LOWPASS_FRACTION)]
    pub lowpass_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Training log CSV.
    #[arg(long)]
    pub log: PathBuf,
    /// Segment the lines by this motion log instead of by mask runs.
    #[arg(long, conflicts_with = "partition")]
    pub motion_log: Option<PathBuf>,
    /// Segment the lines by a partition written by `mask --partition-out`.
    #[arg(long)]
    pub partition: Option<PathBuf>,
    /// Write the final parameters here. On abort the last good parameters go
    /// here, or next to `--out` with a `.ckpt` suffix.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
pub struct EvaluateArgs {
    /// Reconstruction path or glob.
    #[arg(long)]
    pub recon: String,
    /// Reference path or glob; paired with `--recon` in sorted order.
    #[arg(long = "ref")]
    pub reference: String,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub range: f64,
}

/// Line-to-segment labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionJson {
    pub labels: Vec<usize>,
}

impl PartitionJson {
    pub fn read(path: &Path) -> Result<LinePartition> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let p: Self = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        LinePartition::new(p.labels).map_err(|e| CliError::format(path, e.to_string()))
    }

    pub fn write(path: &Path, partition: &LinePartition) -> Result<()> {
        let text = serde_json::to_string(&Self { labels: partition.labels().to_vec() }).expect("plain data");
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}

pub fn cmd_phantom(a: &PhantomArgs) -> Result<()> {
    let kind = match a.kind {
        KindArg::SheppLogan => PhantomKind::SheppLogan,
        KindArg::SmoothRandom => PhantomKind::SmoothRandom,
    };
    let img = generate_phantom::<f32>(&PhantomSpec { kind, size: a.size, seed: a.seed })?;
    ddt::write(&a.out, &Tensor::Real(img))
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let clean = ddt::read_real(&a.input)?;
    let severity = match a.severity {
        SeverityArg::Light => Severity::Light,
        SeverityArg::Heavy => Severity::Heavy,
    };
    let preset = SeverityPreset::new(severity, a.mm_per_px, a.max_rot_deg)?;
    let trace = sample_motion(&preset, clean.height(), a.seed)?;
    let (f_o, mask) = corrupt(&clean, &trace)?;
    ddt::write(&a.out, &Tensor::Complex(f_o))?;
    ddt::write(&a.mask_out, &ddt::mask_tensor(&mask))?;
    MotionLog::from_trace(&trace, a.seed, severity).write(&a.motion_log)
}

pub fn cmd_mask(a: &MaskArgs) -> Result<KLineMask> {
    let f = ddt::read_complex(&a.input)?;
    let (mask, partition) = match a.method {
        MaskMethod::Oracle => {
            let path = a.motion_log.as_ref().ok_or_else(|| CliError::Usage("--method oracle needs --motion-log".into()))?;
            let trace = MotionLog::read(path)?.to_trace()?;
            if trace.n_lines() != f.height() {
                return Err(CliError::Usage(format!("motion log has {} lines, k-space has {}", trace.n_lines(), f.height())));
            }
            (trace.line_mask(AXIS), LinePartition::from_trace(&trace))
        }
        MaskMethod::Detector => {
            let d = detect_mask(&f, AXIS, a.threshold_z)?;
            (d.mask, d.partition)
        }
        MaskMethod::External => {
            let path = a.mask_in.as_ref().ok_or_else(|| CliError::Usage("--method external needs --mask-in".into()))?;
            let prob = ddt::read_real(path)?;
            prob.check_shape(f.shape())?;
            let m = column_rule(&prob, a.column_frac, AXIS)?;
            let p = LinePartition::from_mask_runs(&m);
            (m, p)
        }
    };
    ddt::write(&a.out, &ddt::mask_tensor(&mask))?;
    if let Some(p) = &a.partition_out {
        PartitionJson::write(p, &partition)?;
    }
    Ok(mask)
}

pub fn cmd_reconstruct(a: &ReconstructArgs) -> Result<Reconstruction<f32>> {
    let f_o = ddt::read_complex(&a.input)?;
    let mask = ddt::read_mask(&a.mask, AXIS)?;
    mask.check_grid(f_o.height(), f_o.width())?;
    let (partition, mode) = if let Some(p) = &a.motion_log {
        (LinePartition::from_trace(&MotionLog::read(p)?.to_trace()?), MaskMode::Oracle)
    } else if let Some(p) = &a.partition {
        (PartitionJson::read(p)?, MaskMode::Detector)
    } else {
        (LinePartition::from_mask_runs(&mask), MaskMode::External)
    };
    let cfg = ReconConfig { epochs: a.epochs, lr: a.lr, lowpass_fraction: a.lowpass_frac, seed: a.seed, mask_mode: mode, ..ReconConfig::default() };
    let rec = reconstruct_observed(&f_o, &mask, &partition, &cfg, |_| {})?;
    ddt::write(&a.out, &Tensor::Real(rec.image.clone()))?;
    train_log::write(&a.log, &rec.log)?;
    let ckpt = a.checkpoint.clone();
    if let Some(reason) = rec.abort.clone() {
        let path = ckpt.unwrap_or_else(|| {
            let mut s = a.out.clone().into_os_string();
            s.push(".ckpt");
            s.into()
        });
        checkpoint::write(&path, &rec.params)?;
        return Err(CliError::Aborted { reason, checkpoint: path });
    }
    if let Some(path) = ckpt {
        checkpoint::write(&path, &rec.params)?;
    }
    Ok(rec)
}

fn expand(pattern: &str) -> Result<Vec<PathBuf>> {
    let paths = glob::glob(pattern).map_err(|e| CliError::Usage(format!("bad pattern {pattern:?}: {e}")))?;
    let mut found: Vec<PathBuf> = paths.filter_map(|p| p.ok()).collect();
    if found.is_empty() {
        // No match: let the read report the missing file.
        found.push(PathBuf::from(pattern));
    }
    found.sort();
    Ok(found)
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<MetricReportJson> {
    let recons = expand(&a.recon)?;
    let refs = expand(&a.reference)?;
    if recons.len() != refs.len() {
        return Err(CliError::Usage(format!("{} reconstructions but {} references", recons.len(), refs.len())));
    }
    let mut images = Vec::with_capacity(recons.len());
    for (rp, fp) in recons.iter().zip(&refs) {
        let (x, y) = (ddt::read_real(rp)?, ddt::read_real(fp)?);
        let m = MetricReport::compute(&x, &y, a.range)?;
        images.push(ImageMetrics::new(&rp.to_string_lossy(), &fp.to_string_lossy(), &m));
    }
    let report = MetricReportJson::new(a.range, images);
    report.write(&a.out)?;
    Ok(report)
}
