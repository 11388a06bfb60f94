//! Foundational statistics used throughout the selection procedures.

mod dist;
mod fit;
mod ks;
pub mod special;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dist::{Distribution, Family};
pub use fit::{fit_mle, FittedDistribution};
pub(crate) use ks::ks_accepts_stat;
pub use ks::{ks_accepts, ks_critical_coefficient, ks_statistic};
pub use special::{normal_quantile, student_t_quantile};

#[cfg(test)]
use dist::open_unit;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("degenerate sample: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{family} fit failed: {reason}")]
    FitFailure { family: Family, reason: String },
}

/// Ordered simulation outputs; index `r` is a replication index shared
/// across systems.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SampleVector(Vec<f64>);

impl SampleVector {
    pub fn new(values: Vec<f64>) -> Result<Self, StatsError> {
        if values.is_empty() {
            return Err(StatsError::Degenerate("sample vector is empty".into()));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(StatsError::Domain(format!("non-finite sample value {bad}")));
        }
        Ok(SampleVector(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for SampleVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance; zero for fewer than two values.
pub fn variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64
}

/// Sample variance of the paired differences `x_r − y_r` over the first `n`
/// replications.
pub fn paired_diff_variance(x: &[f64], y: &[f64], n: usize) -> Result<f64, StatsError> {
    if n < 2 {
        return Err(StatsError::Degenerate(format!(
            "paired variance needs at least 2 replications, got {n}"
        )));
    }
    if x.len() < n || y.len() < n {
        return Err(StatsError::Domain(format!(
            "paired variance over {n} replications but vectors have {} and {}",
            x.len(),
            y.len()
        )));
    }
    let mean_diff = x[..n].iter().zip(&y[..n]).map(|(a, b)| a - b).sum::<f64>() / n as f64;
    let ss = x[..n]
        .iter()
        .zip(&y[..n])
        .map(|(a, b)| (a - b - mean_diff).powi(2))
        .sum::<f64>();
    Ok(ss / (n - 1) as f64)
}

/// Order-statistic quantile at index `⌈p·n⌉` (1-based), no interpolation.
pub fn empirical_quantile(samples: &[f64], p: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Degenerate("quantile of an empty sample".into()));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(StatsError::Domain(format!(
            "quantile level must lie in (0, 1), got {p}"
        )));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[quantile_index(sorted.len(), p)])
}

/// Quantiles of several levels with one sort.
pub fn empirical_quantiles(samples: &[f64], levels: &[f64]) -> Result<Vec<f64>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::Degenerate("quantile of an empty sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    levels
        .iter()
        .map(|&p| {
            if p > 0.0 && p < 1.0 {
                Ok(sorted[quantile_index(sorted.len(), p)])
            } else {
                Err(StatsError::Domain(format!(
                    "quantile level must lie in (0, 1), got {p}"
                )))
            }
        })
        .collect()
}

fn quantile_index(n: usize, p: f64) -> usize {
    // ⌈p·n⌉ computed with a small guard against representation error in p·n.
    let pos = p * n as f64;
    let idx = (pos - 1e-9 * pos.max(1.0)).ceil() as usize;
    idx.clamp(1, n) - 1
}
