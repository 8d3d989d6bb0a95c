use clap::{CommandFactory, Parser, Subcommand};
use kmoco::commands::{self, EvaluateArgs, MaskArgs, PhantomArgs, ReconstructArgs, SimulateArgs};
use kmoco::{CliError, ExitCode};

/// Rigid-motion artifact correction for 2D Cartesian k-space.
///
/// Exit codes: 0 success, 1 usage or parameter error, 2 I/O or format error,
/// 3 numeric abort.
#[derive(Parser, Debug)]
#[command(name = "kmoco", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Write a synthetic phantom.
    Phantom(PhantomArgs),
    /// Corrupt a clean image with sampled rigid motion.
    Simulate(SimulateArgs),
    /// Produce a corrupted-line mask.
    Mask(MaskArgs),
    /// Fit the correction networks and write the corrected image.
    Reconstruct(ReconstructArgs),
    /// Score reconstructions against references.
    Evaluate(EvaluateArgs),
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::Phantom(a) => commands::cmd_phantom(&a),
        Cmd::Simulate(a) => commands::cmd_simulate(&a),
        Cmd::Mask(a) => {
            let m = commands::cmd_mask(&a)?;
            println!("{} of {} lines flagged", m.popcount(), m.len());
            Ok(())
        }
        Cmd::Reconstruct(a) => {
            let rec = commands::cmd_reconstruct(&a)?;
            if let Some(last) = rec.log.last() {
                println!("epochs {} final total {:.9e}", rec.log.len(), last.terms.total);
            }
            Ok(())
        }
        Cmd::Evaluate(a) => {
            let r = commands::cmd_evaluate(&a)?;
            let g = &r.aggregate;
            println!(
                "n={} psnr {:.2}±{:.2} dB  ssim {:.2}±{:.2}  haarpsi {:.2}±{:.2}  vif {:.2}±{:.2}",
                r.images.len(),
                g.psnr_db.mean,
                g.psnr_db.std,
                g.ssim_pct.mean,
                g.ssim_pct.std,
                g.haarpsi_pct.mean,
                g.haarpsi_pct.std,
                g.vif_pct.mean,
                g.vif_pct.std
            );
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Usage } else { ExitCode::Success };
            let _ = e.print();
            if e.use_stderr() {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            std::process::exit(code as i32);
        }
    };
    if let Err(e) = run(cli.cmd) {
        eprintln!("kmoco: {e}");
        std::process::exit(e.exit_code() as i32);
    }
}
