use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::nn;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub rmse: f64,
    /// `target - prediction`, row by row.
    pub residuals: Vec<f64>,
    pub within_half: f64,
    pub within_two: f64,
}

pub fn regression_report(predictions: &[f64], targets: &[f64]) -> Result<RegressionReport> {
    let rmse = nn::rmse(predictions, targets)?;
    let residuals: Vec<f64> = targets
        .iter()
        .zip(predictions)
        .map(|(t, p)| t - p)
        .collect();
    let n = residuals.len() as f64;
    let within = |band: f64| residuals.iter().filter(|r| r.abs() <= band).count() as f64 / n;
    Ok(RegressionReport {
        rmse,
        within_half: within(0.5),
        within_two: within(2.0),
        residuals,
    })
}
