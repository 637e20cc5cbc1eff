use serde::{Deserialize, Serialize};

use crate::error::{Result, WcbError};
use crate::metrics::stats::Summary;
use crate::sim::config::SimulationConfig;
use crate::sim::experiment::run_experiment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub threshold: f64,
    pub offset: f64,
    pub median: f64,
    pub iqr: f64,
    pub pool_size: usize,
}

/// Pooled median minus `offset`.
pub fn threshold_from_pool(scores: &[f64], offset: f64) -> Result<Calibration> {
    if !(offset >= 0.0) || !offset.is_finite() {
        return Err(WcbError::domain(format!("offset must be non-negative, got {offset}")));
    }
    if scores.is_empty() {
        return Err(WcbError::Invalid("no satisfaction scores to calibrate against".into()));
    }
    let s = Summary::of(scores);
    Ok(Calibration {
        threshold: s.median - offset,
        offset,
        median: s.median,
        iqr: s.iqr,
        pool_size: s.count,
    })
}

/// Runs the configured experiment without enforcing any drop and derives
/// the threshold from every satisfaction score it produced.
pub fn calibrate_threshold(config: &SimulationConfig, offset: f64) -> Result<Calibration> {
    let config = SimulationConfig {
        retention_enabled: false,
        ..config.clone()
    };
    let bundle = run_experiment(&config)?;
    threshold_from_pool(&bundle.pooled_scores(), offset)
}
