use std::fs;
use std::path::Path;

use kmoco_core::metrics::MetricReport;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageMetrics {
    pub recon: String,
    pub reference: String,
    pub psnr_db: f64,
    pub ssim_pct: f64,
    pub haarpsi_pct: f64,
    pub vif_pct: f64,
}

impl ImageMetrics {
    pub fn new(recon: &str, reference: &str, m: &MetricReport) -> Self {
        Self {
            recon: recon.into(),
            reference: reference.into(),
            psnr_db: m.psnr,
            ssim_pct: 100.0 * m.ssim,
            haarpsi_pct: 100.0 * m.haarpsi,
            vif_pct: 100.0 * m.vif,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    /// Mean and population standard deviation.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub psnr_db: Summary,
    pub ssim_pct: Summary,
    pub haarpsi_pct: Summary,
    pub vif_pct: Summary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReportJson {
    pub data_range: f64,
    pub vif_variant: String,
    pub std_kind: String,
    pub images: Vec<ImageMetrics>,
    pub aggregate: Aggregate,
}

impl MetricReportJson {
    pub fn new(data_range: f64, images: Vec<ImageMetrics>) -> Self {
        let col = |f: fn(&ImageMetrics) -> f64| Summary::of(&images.iter().map(f).collect::<Vec<_>>());
        let aggregate = Aggregate {
            psnr_db: col(|m| m.psnr_db),
            ssim_pct: col(|m| m.ssim_pct),
            haarpsi_pct: col(|m| m.haarpsi_pct),
            vif_pct: col(|m| m.vif_pct),
        };
        Self { data_range, vif_variant: "pixel".into(), std_kind: "population".into(), images, aggregate }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("plain data");
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
    }
}
