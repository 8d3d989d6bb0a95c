use std::fs;
use std::path::Path;

use kmoco_core::motion::{MotionTrace, RigidTransform2D, Segment, Severity};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentJson {
    pub start: usize,
    pub end: usize,
    pub theta_rad: f64,
    pub tx_px: f64,
    pub ty_px: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionLog {
    pub n_lines: usize,
    pub axis: String,
    pub segments: Vec<SegmentJson>,
    pub seed: u64,
    pub preset: String,
}

pub fn severity_name(s: Severity) -> &'static str {
    match s {
        Severity::Light => "light",
        Severity::Heavy => "heavy",
    }
}

impl MotionLog {
    pub fn from_trace(trace: &MotionTrace, seed: u64, severity: Severity) -> Self {
        Self {
            n_lines: trace.n_lines(),
            axis: "rows".into(),
            segments: trace
                .segments()
                .iter()
                .map(|s| SegmentJson { start: s.start, end: s.end, theta_rad: s.pose.theta, tx_px: s.pose.tx, ty_px: s.pose.ty })
                .collect(),
            seed,
            preset: severity_name(severity).into(),
        }
    }

    pub fn to_trace(&self) -> kmoco_core::Result<MotionTrace> {
        let segments = self
            .segments
            .iter()
            .map(|s| Segment { start: s.start, end: s.end, pose: RigidTransform2D::new(s.theta_rad, s.tx_px, s.ty_px) })
            .collect();
        MotionTrace::new(self.n_lines, segments)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let log: Self = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        if log.axis != "rows" {
            return Err(CliError::format(path, format!("unsupported axis {:?}", log.axis)));
        }
        Ok(log)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("plain data");
        fs::write(path, text).map_err(|e| CliError::io(path, e))
    }
}
