//! Candidate input distributions: the parametric families used to build
//! ambiguity sets plus empirical and constant distributions.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution as _, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use super::special::{gamma_p, normal_cdf};
use super::StatsError;

/// Parametric families that can be fitted to data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Lognormal,
    Gamma,
    Weibull,
    Exponential,
    Pareto,
    Triangular,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Exponential,
        Family::Gamma,
        Family::Weibull,
        Family::Lognormal,
        Family::Pareto,
        Family::Triangular,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Lognormal => "lognormal",
            Family::Gamma => "gamma",
            Family::Weibull => "weibull",
            Family::Exponential => "exponential",
            Family::Pareto => "pareto",
            Family::Triangular => "triangular",
        }
    }

    /// Families supported only on the positive half-line.
    pub fn positive_support(self) -> bool {
        !matches!(self, Family::Triangular)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = StatsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| StatsError::Config(format!("unknown distribution family `{s}`")))
    }
}

/// A fully specified univariate distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Distribution {
    /// `ln X ~ N(mu, sigma²)`.
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
    Exponential {
        rate: f64,
    },
    /// Support `[scale, ∞)`, tail index `shape`.
    Pareto {
        scale: f64,
        shape: f64,
    },
    Triangular {
        lower: f64,
        mode: f64,
        upper: f64,
    },
    /// Uniform resampling from a data vector.
    Empirical {
        values: Arc<Vec<f64>>,
    },
    Constant {
        value: f64,
    },
}

impl Distribution {
    /// Lognormal with unit mean and log-variance `sigma²`.
    pub fn unit_mean_lognormal(sigma: f64) -> Self {
        Distribution::Lognormal {
            mu: -0.5 * sigma * sigma,
            sigma,
        }
    }

    pub fn exponential_with_mean(mean: f64) -> Self {
        Distribution::Exponential { rate: 1.0 / mean }
    }

    pub fn empirical(values: Vec<f64>) -> Self {
        Distribution::Empirical {
            values: Arc::new(values),
        }
    }

    pub fn family(&self) -> Option<Family> {
        Some(match self {
            Distribution::Lognormal { .. } => Family::Lognormal,
            Distribution::Gamma { .. } => Family::Gamma,
            Distribution::Weibull { .. } => Family::Weibull,
            Distribution::Exponential { .. } => Family::Exponential,
            Distribution::Pareto { .. } => Family::Pareto,
            Distribution::Triangular { .. } => Family::Triangular,
            Distribution::Empirical { .. } | Distribution::Constant { .. } => return None,
        })
    }

    /// Short label used in reports.
    pub fn label(&self) -> &'static str {
        match self.family() {
            Some(f) => f.name(),
            None => match self {
                Distribution::Empirical { .. } => "empirical",
                _ => "constant",
            },
        }
    }

    /// Checks parameter constraints.
    pub fn validate(&self) -> Result<(), StatsError> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(StatsError::Domain(format!(
                    "{name} must be finite and > 0, got {v}"
                )))
            }
        };
        match *self {
            Distribution::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(StatsError::Domain(format!(
                        "log-mean must be finite, got {mu}"
                    )));
                }
                positive("log-sd", sigma)
            }
            Distribution::Gamma { shape, scale } | Distribution::Weibull { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            Distribution::Exponential { rate } => positive("rate", rate),
            Distribution::Pareto { scale, shape } => {
                positive("scale", scale)?;
                positive("shape", shape)
            }
            Distribution::Triangular { lower, mode, upper } => {
                if lower.is_finite()
                    && upper.is_finite()
                    && lower <= mode
                    && mode <= upper
                    && lower < upper
                {
                    Ok(())
                } else {
                    Err(StatsError::Domain(format!(
                        "triangular requires lower ≤ mode ≤ upper, got ({lower}, {mode}, {upper})"
                    )))
                }
            }
            Distribution::Empirical { ref values } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    Err(StatsError::Domain(
                        "empirical distribution needs finite data".into(),
                    ))
                } else {
                    Ok(())
                }
            }
            Distribution::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(StatsError::Domain("constant must be finite".into()))
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - mu) / sigma)
                }
            }
            Distribution::Gamma { shape, scale } => gamma_p(shape, x / scale),
            Distribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Distribution::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Distribution::Pareto { scale, shape } => {
                if x <= scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(shape)
                }
            }
            Distribution::Triangular { lower, mode, upper } => {
                if x <= lower {
                    0.0
                } else if x >= upper {
                    1.0
                } else if x <= mode {
                    (x - lower).powi(2) / ((upper - lower) * (mode - lower))
                } else {
                    1.0 - (upper - x).powi(2) / ((upper - lower) * (upper - mode))
                }
            }
            Distribution::Empirical { ref values } => {
                let below = values.iter().filter(|&&v| v <= x).count();
                below as f64 / values.len() as f64
            }
            Distribution::Constant { value } => {
                if x >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Distribution::Gamma { shape, scale } => shape * scale,
            Distribution::Weibull { shape, scale } => {
                scale * super::special::ln_gamma(1.0 + 1.0 / shape).exp()
            }
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Pareto { scale, shape } => {
                if shape > 1.0 {
                    shape * scale / (shape - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            Distribution::Triangular { lower, mode, upper } => (lower + mode + upper) / 3.0,
            Distribution::Empirical { ref values } => {
                values.iter().sum::<f64>() / values.len() as f64
            }
            Distribution::Constant { value } => value,
        }
    }

    /// Draws one variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Lognormal { mu, sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                (mu + sigma * z).exp()
            }
            Distribution::Gamma { shape, scale } => Gamma::new(shape, scale)
                .expect("validated gamma parameters")
                .sample(rng),
            Distribution::Weibull { shape, scale } => {
                scale * (-open_unit(rng).ln()).powf(1.0 / shape)
            }
            Distribution::Exponential { rate } => -open_unit(rng).ln() / rate,
            Distribution::Pareto { scale, shape } => scale * open_unit(rng).powf(-1.0 / shape),
            Distribution::Triangular { lower, mode, upper } => {
                let u = open_unit(rng);
                let split = (mode - lower) / (upper - lower);
                if u < split {
                    lower + (u * (upper - lower) * (mode - lower)).sqrt()
                } else {
                    upper - ((1.0 - u) * (upper - lower) * (upper - mode)).sqrt()
                }
            }
            Distribution::Empirical { ref values } => values[rng.random_range(0..values.len())],
            Distribution::Constant { value } => value,
        }
    }
}

/// Uniform on the open interval (0, 1).
pub(crate) fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.name().parse::<Family>().unwrap(), f);
        }
        assert!("normal".parse::<Family>().is_err());
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(Distribution::Gamma {
            shape: 0.0,
            scale: 1.0
        }
        .validate()
        .is_err());
        assert!(Distribution::Triangular {
            lower: 0.0,
            mode: 2.0,
            upper: 1.0
        }
        .validate()
        .is_err());
        assert!(Distribution::Lognormal {
            mu: 0.0,
            sigma: 0.0
        }
        .validate()
        .is_err());
        assert!(Distribution::Weibull {
            shape: 1.5,
            scale: 2.0
        }
        .validate()
        .is_ok());
    }

    #[test]
    fn sample_means_match_analytic_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let cases = [
            Distribution::unit_mean_lognormal(0.5),
            Distribution::Gamma {
                shape: 2.0,
                scale: 1.5,
            },
            Distribution::Weibull {
                shape: 1.5,
                scale: 2.0,
            },
            Distribution::Exponential { rate: 0.5 },
            Distribution::Pareto {
                scale: 1.0,
                shape: 4.0,
            },
            Distribution::Triangular {
                lower: 1.0,
                mode: 2.0,
                upper: 5.0,
            },
        ];
        for d in cases {
            let n = 200_000;
            let mean = (0..n).map(|_| d.sample(&mut rng)).sum::<f64>() / n as f64;
            assert!((mean - d.mean()).abs() < 0.02 * d.mean(), "{d:?}: {mean}");
        }
    }

    #[test]
    fn cdfs_are_monotone_and_bounded() {
        let cases = [
            Distribution::unit_mean_lognormal(1.0),
            Distribution::Gamma {
                shape: 0.7,
                scale: 2.0,
            },
            Distribution::Weibull {
                shape: 0.8,
                scale: 1.0,
            },
            Distribution::Pareto {
                scale: 0.5,
                shape: 2.0,
            },
            Distribution::Triangular {
                lower: 0.0,
                mode: 0.2,
                upper: 3.0,
            },
        ];
        for d in cases {
            let mut prev = 0.0;
            for i in 0..400 {
                let x = i as f64 * 0.01;
                let f = d.cdf(x);
                assert!((0.0..=1.0).contains(&f));
                assert!(f + 1e-15 >= prev, "{d:?} at {x}");
                prev = f;
            }
        }
    }
}
