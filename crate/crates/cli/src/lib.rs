//! File formats and subcommands around `kmoco-core`.
//!
//! * `ddt`: the binary tensor container for images, k-space and masks
//! * `motion_log`: JSON serialization of motion traces
//! * `checkpoint`: parameter vector plus layout descriptor
//! * `report`: metric reports with mean/std aggregation
//! * `train_log`: per-epoch CSV
//! * `commands`: one function per subcommand

pub mod checkpoint;
pub mod commands;
pub mod ddt;
mod error;
pub mod motion_log;
pub mod report;
pub mod train_log;

pub use error::{CliError, ExitCode};
