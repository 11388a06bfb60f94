//! One-sample Kolmogorov-Smirnov statistic and asymptotic acceptance test.

use super::StatsError;

/// `sup_i max(|i/n − F(x_(i))|, |F(x_(i)) − (i−1)/n|)` over the order
/// statistics of `sample`.
pub fn ks_statistic<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            let upper = ((i + 1) as f64 / n - f).abs();
            let lower = (f - i as f64 / n).abs();
            upper.max(lower)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic critical coefficient `c(α)` of the K-S test, so that the
/// rejection threshold is `c(α)/√n`.
pub fn ks_critical_coefficient(level: f64) -> Result<f64, StatsError> {
    const TABLE: [(f64, f64); 6] = [
        (0.20, 1.073),
        (0.10, 1.224),
        (0.05, 1.358),
        (0.025, 1.480),
        (0.01, 1.628),
        (0.001, 1.949),
    ];
    TABLE
        .iter()
        .find(|(a, _)| (a - level).abs() < 1e-12)
        .map(|&(_, c)| c)
        .ok_or_else(|| {
            StatsError::Config(format!(
                "unsupported K-S significance level {level}; supported: 0.2, 0.1, 0.05, 0.025, 0.01, 0.001"
            ))
        })
}

/// True when the sample is not rejected at significance `level`.
pub fn ks_accepts<F: Fn(f64) -> f64>(
    sample: &[f64],
    cdf: F,
    level: f64,
) -> Result<bool, StatsError> {
    let coef = ks_critical_coefficient(level)?;
    Ok(ks_accepts_stat(
        ks_statistic(sample, cdf),
        sample.len(),
        coef,
    ))
}

pub(crate) fn ks_accepts_stat(stat: f64, n: usize, coef: f64) -> bool {
    stat < coef / (n as f64).sqrt()
}
