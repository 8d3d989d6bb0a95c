use std::path::Path;

use kmoco_core::ddo::EpochRecord;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// One CSV row; field order is the column order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub epoch: usize,
    pub omega: f64,
    pub loss_freq: f64,
    pub loss_pixel: f64,
    pub loss_w_freq: f64,
    pub total: f64,
}

impl From<&EpochRecord> for LogRow {
    fn from(r: &EpochRecord) -> Self {
        Self {
            epoch: r.epoch,
            omega: r.omega,
            loss_freq: r.terms.loss_freq,
            loss_pixel: r.terms.loss_pixel,
            loss_w_freq: r.terms.loss_w_freq,
            total: r.terms.total,
        }
    }
}

pub fn write(path: &Path, records: &[EpochRecord]) -> Result<()> {
    let io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in records {
        w.serialize(LogRow::from(r)).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<LogRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, e.into()))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| CliError::format(path, e.to_string()))
}
