//! Maximum-likelihood fitting of the candidate families.

use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::dist::{Distribution, Family};
use super::ks::ks_statistic;
use super::special::{digamma, trigamma};
use super::StatsError;

const MAX_ITER: usize = 200;
const GRAD_TOL: f64 = 1e-8;

/// An MLE fit together with its goodness-of-fit statistic.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedDistribution {
    pub distribution: Distribution,
    /// Kolmogorov-Smirnov statistic of the fit against its own data.
    pub ks_stat: f64,
    /// Number of data points fitted.
    pub source_size: usize,
}

impl FittedDistribution {
    pub fn family(&self) -> Family {
        self.distribution
            .family()
            .expect("fitted distributions are parametric")
    }
}

impl Serialize for FittedDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut params =
            serde_json::to_value(&self.distribution).map_err(serde::ser::Error::custom)?;
        if let Some(obj) = params.as_object_mut() {
            obj.remove("family");
        }
        let mut st = serializer.serialize_struct("FittedDistribution", 4)?;
        st.serialize_field("family", &self.family())?;
        st.serialize_field("params", &params)?;
        st.serialize_field("ks_stat", &self.ks_stat)?;
        st.serialize_field("source_size", &self.source_size)?;
        st.end()
    }
}

/// Fits `family` to `sample` by maximum likelihood and attaches the K-S
/// statistic of the fitted CDF against the sample.
pub fn fit_mle(family: Family, sample: &[f64]) -> Result<FittedDistribution, StatsError> {
    if sample.is_empty() {
        return Err(StatsError::Degenerate("cannot fit an empty sample".into()));
    }
    if sample.iter().any(|x| !x.is_finite()) {
        return Err(StatsError::Domain(
            "sample contains non-finite values".into(),
        ));
    }
    if family.positive_support() {
        if let Some(bad) = sample.iter().find(|&&x| x <= 0.0) {
            return Err(StatsError::Domain(format!(
                "{family} requires positive data, found {bad}"
            )));
        }
    }
    let distribution = match family {
        Family::Lognormal => fit_lognormal(sample)?,
        Family::Exponential => {
            let mean = sample.iter().sum::<f64>() / sample.len() as f64;
            Distribution::Exponential { rate: 1.0 / mean }
        }
        Family::Gamma => fit_gamma(sample)?,
        Family::Weibull => fit_weibull(sample)?,
        Family::Pareto => fit_pareto(sample)?,
        Family::Triangular => fit_triangular(sample)?,
    };
    distribution.validate()?;
    let ks_stat = ks_statistic(sample, |x| distribution.cdf(x));
    Ok(FittedDistribution {
        distribution,
        ks_stat,
        source_size: sample.len(),
    })
}

fn fit_lognormal(sample: &[f64]) -> Result<Distribution, StatsError> {
    let n = sample.len() as f64;
    let mu = sample.iter().map(|x| x.ln()).sum::<f64>() / n;
    let var = sample.iter().map(|x| (x.ln() - mu).powi(2)).sum::<f64>() / n;
    let sigma = var.sqrt();
    if sigma <= 0.0 {
        return Err(StatsError::Degenerate(format!(
            "lognormal fit has log-mean {mu} and log-sd 0 (constant sample)"
        )));
    }
    Ok(Distribution::Lognormal { mu, sigma })
}

fn fit_gamma(sample: &[f64]) -> Result<Distribution, StatsError> {
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    let mean_ln = sample.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;
    if s <= 0.0 {
        return Err(StatsError::Degenerate(
            "gamma fit of a constant sample".into(),
        ));
    }
    let var = sample.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    // Method of moments start, falling back to the closed-form approximation.
    let mut shape = if var > 0.0 { mean * mean / var } else { 1.0 };
    if !shape.is_finite() || shape <= 0.0 {
        shape = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    }
    // Solve ln k − ψ(k) = s by Newton in log k, which keeps k positive.
    for _ in 0..MAX_ITER {
        let g = shape.ln() - digamma(shape) - s;
        if g.abs() < GRAD_TOL {
            return Ok(Distribution::Gamma {
                shape,
                scale: mean / shape,
            });
        }
        let dg = 1.0 / shape - trigamma(shape);
        // d g / d ln k = k · dg
        let step = g / (shape * dg);
        shape *= (-step).clamp(-5.0, 5.0).exp();
    }
    Err(StatsError::FitFailure {
        family: Family::Gamma,
        reason: format!("Newton did not converge in {MAX_ITER} iterations"),
    })
}

fn fit_weibull(sample: &[f64]) -> Result<Distribution, StatsError> {
    let n = sample.len() as f64;
    let logs: Vec<f64> = sample.iter().map(|x| x.ln()).collect();
    let mean_ln = logs.iter().sum::<f64>() / n;
    // Scale data by its maximum so x^k stays representable.
    let max_ln = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if logs.iter().all(|&l| l == max_ln) {
        return Err(StatsError::Degenerate(
            "weibull fit of a constant sample".into(),
        ));
    }
    let profile = |k: f64| {
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &l in &logs {
            let w = (k * (l - max_ln)).exp();
            s0 += w;
            s1 += w * l;
            s2 += w * l * l;
        }
        let a = s1 / s0;
        let g = 1.0 / k + mean_ln - a;
        let dg = -1.0 / (k * k) - (s2 / s0 - a * a);
        (g, dg, s0)
    };
    let mut shape = 1.0f64;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..MAX_ITER {
        let (g, dg, s0) = profile(shape);
        if g.abs() < GRAD_TOL {
            let scale = (max_ln + (s0 / n).ln() / shape).exp();
            return Ok(Distribution::Weibull { shape, scale });
        }
        // g is decreasing in k.
        if g > 0.0 {
            lo = shape;
        } else {
            hi = shape;
        }
        let mut next = shape - g / dg;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                2.0 * shape
            };
        }
        shape = next;
    }
    Err(StatsError::FitFailure {
        family: Family::Weibull,
        reason: format!("Newton did not converge in {MAX_ITER} iterations"),
    })
}

fn fit_pareto(sample: &[f64]) -> Result<Distribution, StatsError> {
    let scale = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let sum_log = sample.iter().map(|x| (x / scale).ln()).sum::<f64>();
    if sum_log <= 0.0 {
        return Err(StatsError::Degenerate(
            "pareto fit of a constant sample".into(),
        ));
    }
    Ok(Distribution::Pareto {
        scale,
        shape: sample.len() as f64 / sum_log,
    })
}

/// Bounds are the sample extremes; the mode maximizes the profile
/// likelihood of the interior points (the extremes have zero density for
/// any interior mode) over a grid, then golden-section refinement.
fn fit_triangular(sample: &[f64]) -> Result<Distribution, StatsError> {
    let lower = sample.iter().cloned().fold(f64::INFINITY, f64::min);
    let upper = sample.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if upper <= lower {
        return Err(StatsError::Degenerate(
            "triangular fit of a constant sample".into(),
        ));
    }
    let interior: Vec<f64> = sample
        .iter()
        .cloned()
        .filter(|&x| x > lower && x < upper)
        .collect();
    if interior.is_empty() {
        return Ok(Distribution::Triangular {
            lower,
            mode: 0.5 * (lower + upper),
            upper,
        });
    }
    let width = upper - lower;
    let loglik = |c: f64| -> f64 {
        let mut ll = 0.0;
        for &x in &interior {
            let d = if x < c {
                2.0 * (x - lower) / (width * (c - lower))
            } else if x > c {
                2.0 * (upper - x) / (width * (upper - c))
            } else {
                2.0 / width
            };
            ll += d.ln();
        }
        ll
    };
    const GRID: usize = 200;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for g in 0..=GRID {
        let c = lower + width * g as f64 / GRID as f64;
        let ll = loglik(c);
        if ll > best.0 {
            best = (ll, g);
        }
    }
    let step = width / GRID as f64;
    let mut a = (lower + step * best.1 as f64 - step).max(lower);
    let mut b = (lower + step * best.1 as f64 + step).min(upper);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut c1 = b - phi * (b - a);
    let mut c2 = a + phi * (b - a);
    let (mut f1, mut f2) = (loglik(c1), loglik(c2));
    for _ in 0..100 {
        if f1 >= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - phi * (b - a);
            f1 = loglik(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + phi * (b - a);
            f2 = loglik(c2);
        }
        if b - a < 1e-12 * width {
            break;
        }
    }
    let refined = if f1 >= f2 { c1 } else { c2 };
    let grid_best = lower + step * best.1 as f64;
    let mode = if loglik(refined) >= best.0 {
        refined
    } else {
        grid_best
    };
    Ok(Distribution::Triangular { lower, mode, upper })
}
