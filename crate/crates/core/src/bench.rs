//! Synthetic normal test beds with structured mean and variance grids.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::{SampleError, Sampler, SystemId};
use crate::stats::normal_quantile;

#[derive(Debug, Error, PartialEq)]
pub enum BenchError {
    #[error("invalid bench configuration: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanConfig {
    /// Slippage configuration.
    Sc,
    /// Monotone decreasing means.
    Mdm,
    /// Alternatives ordered as MDM, scenarios within an alternative as SC.
    Mixed,
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarianceConfig {
    /// Equal variances.
    Ev,
    /// Increasing variances.
    Iv,
    /// Decreasing variances.
    Dv,
    Custom,
}

impl fmt::Display for MeanConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeanConfig::Sc => "SC",
            MeanConfig::Mdm => "MDM",
            MeanConfig::Mixed => "mixed",
            MeanConfig::Custom => "custom",
        })
    }
}

impl fmt::Display for VarianceConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VarianceConfig::Ev => "EV",
            VarianceConfig::Iv => "IV",
            VarianceConfig::Dv => "DV",
            VarianceConfig::Custom => "custom",
        })
    }
}

impl FromStr for MeanConfig {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_lowercase().as_str() {
            "sc" => Ok(MeanConfig::Sc),
            "mdm" => Ok(MeanConfig::Mdm),
            "mixed" => Ok(MeanConfig::Mixed),
            _ => Err(BenchError::Invalid(format!(
                "unknown mean configuration {s:?} (sc, mdm, mixed)"
            ))),
        }
    }
}

impl FromStr for VarianceConfig {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, BenchError> {
        match s.to_ascii_lowercase().as_str() {
            "ev" => Ok(VarianceConfig::Ev),
            "iv" => Ok(VarianceConfig::Iv),
            "dv" => Ok(VarianceConfig::Dv),
            _ => Err(BenchError::Invalid(format!(
                "unknown variance configuration {s:?} (ev, iv, dv)"
            ))),
        }
    }
}

/// Row-major `k × m` matrix.
pub type Matrix = Vec<Vec<f64>>;

/// `0` in row 1 and `0.5` elsewhere.
pub fn sc_means(k: usize, m: usize) -> Matrix {
    (0..k)
        .map(|i| vec![if i == 0 { 0.0 } else { 0.5 }; m])
        .collect()
}

/// `μ_ij = 0.5(i−1) − 0.2(j−1)` with one-based `i, j`.
pub fn mdm_means(k: usize, m: usize) -> Matrix {
    (0..k)
        .map(|i| (0..m).map(|j| 0.5 * i as f64 - 0.2 * j as f64).collect())
        .collect()
}

/// `μ_i1 = 0.5(i−1)` and `μ_ij = 0.5(i−1) − 0.2` for `j ≥ 2`.
pub fn mixed_means(k: usize, m: usize) -> Matrix {
    (0..k)
        .map(|i| {
            (0..m)
                .map(|j| 0.5 * i as f64 - if j == 0 { 0.0 } else { 0.2 })
                .collect()
        })
        .collect()
}

/// EV: all ones; IV: `(1+0.1(i−1))(1+0.1(j−1))`; DV: the reciprocal of IV.
pub fn variance_config(kind: VarianceConfig, k: usize, m: usize) -> Matrix {
    (0..k)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let iv = (1.0 + 0.1 * i as f64) * (1.0 + 0.1 * j as f64);
                    match kind {
                        VarianceConfig::Ev | VarianceConfig::Custom => 1.0,
                        VarianceConfig::Iv => iv,
                        VarianceConfig::Dv => 1.0 / iv,
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanVarianceConfig {
    pub means: Matrix,
    pub variances: Matrix,
    pub mean_label: MeanConfig,
    pub variance_label: VarianceConfig,
}

impl MeanVarianceConfig {
    /// Validated custom grid. Variances may be zero.
    pub fn new(means: Matrix, variances: Matrix) -> Result<Self, BenchError> {
        let cfg = MeanVarianceConfig {
            means,
            variances,
            mean_label: MeanConfig::Custom,
            variance_label: VarianceConfig::Custom,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// One of the labelled grids.
    pub fn standard(
        mean: MeanConfig,
        variance: VarianceConfig,
        k: usize,
        m: usize,
    ) -> Result<Self, BenchError> {
        if k < 2 || m < 1 {
            return Err(BenchError::Invalid(format!(
                "need k ≥ 2 and m ≥ 1, got k={k}, m={m}"
            )));
        }
        let means = match mean {
            MeanConfig::Sc => sc_means(k, m),
            MeanConfig::Mdm => mdm_means(k, m),
            MeanConfig::Mixed if m >= 2 => mixed_means(k, m),
            MeanConfig::Mixed => {
                return Err(BenchError::Invalid(
                    "the mixed configuration needs m ≥ 2".into(),
                ))
            }
            MeanConfig::Custom => {
                return Err(BenchError::Invalid(
                    "custom means need explicit values".into(),
                ))
            }
        };
        if variance == VarianceConfig::Custom {
            return Err(BenchError::Invalid(
                "custom variances need explicit values".into(),
            ));
        }
        let cfg = MeanVarianceConfig {
            means,
            variances: variance_config(variance, k, m),
            mean_label: mean,
            variance_label: variance,
        };
        cfg.validate()?;
        assert!(
            cfg.is_ordered(),
            "{mean} means violate the row/column ordering"
        );
        Ok(cfg)
    }

    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn m(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    fn validate(&self) -> Result<(), BenchError> {
        let (k, m) = (self.k(), self.m());
        if k == 0 || m == 0 {
            return Err(BenchError::Invalid("empty mean grid".into()));
        }
        if self.means.iter().any(|r| r.len() != m)
            || self.variances.len() != k
            || self.variances.iter().any(|r| r.len() != m)
        {
            return Err(BenchError::Invalid(format!(
                "mean and variance grids must both be {k} × {m}"
            )));
        }
        if self.means.iter().flatten().any(|v| !v.is_finite()) {
            return Err(BenchError::Invalid("means must be finite".into()));
        }
        if self
            .variances
            .iter()
            .flatten()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(BenchError::Invalid(
                "variances must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Rows non-increasing in `j` and the first column strictly smallest in
    /// row 1, so that alternative 1 is best and scenario 1 is its worst case.
    pub fn is_ordered(&self) -> bool {
        let rows_ok = self
            .means
            .iter()
            .all(|r| r.windows(2).all(|w| w[0] >= w[1]));
        let first = self.means[0][0];
        rows_ok && self.means[1..].iter().all(|r| r[0] > first)
    }

    /// `max_j μ_ij` for each alternative.
    pub fn worst_case_means(&self) -> Vec<f64> {
        self.means
            .iter()
            .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect()
    }

    /// Alternatives whose worst-case mean is within `delta` of the best.
    pub fn good_alternatives(&self, delta: f64) -> Vec<usize> {
        let worst = self.worst_case_means();
        let best = worst.iter().copied().fold(f64::INFINITY, f64::min);
        (0..worst.len())
            .filter(|&i| worst[i] - best <= delta)
            .collect()
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.mean_label, self.variance_label)
    }
}

/// Independent normal outputs `X_ij ~ N(μ_ij, σ²_ij)`.
///
/// Each system owns a ChaCha8 stream keyed by its flat index, and replication
/// `r` uses the `r`-th 64-bit word of that stream, so draws never depend on
/// which other systems are requested. With common random numbers every
/// scenario of alternative `i` reads the stream keyed by `i`.
#[derive(Clone, Debug)]
pub struct NormalBench {
    config: MeanVarianceConfig,
    sd: Vec<f64>,
    means: Vec<f64>,
    streams: Vec<ChaCha8Rng>,
    next: Vec<u64>,
    crn: bool,
}

impl NormalBench {
    pub fn new(config: MeanVarianceConfig, seed: u64, crn: bool) -> Self {
        let m = config.m();
        let means: Vec<f64> = config.means.iter().flatten().copied().collect();
        let sd: Vec<f64> = config
            .variances
            .iter()
            .flatten()
            .map(|v| v.sqrt())
            .collect();
        let streams = (0..means.len())
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(if crn { (s / m) as u64 } else { s as u64 });
                rng
            })
            .collect();
        NormalBench {
            next: vec![0; means.len()],
            config,
            sd,
            means,
            streams,
            crn,
        }
    }

    pub fn config(&self) -> &MeanVarianceConfig {
        &self.config
    }

    pub fn common_random_numbers(&self) -> bool {
        self.crn
    }

    #[inline]
    fn uniform(&mut self, s: usize, replication: u64) -> f64 {
        if self.next[s] != replication {
            // One u64 is two 32-bit words.
            self.streams[s].set_word_pos(2 * replication as u128);
        }
        self.next[s] = replication + 1;
        let bits = self.streams[s].next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

/// Convenience constructor matching the rest of the API.
pub fn normal_bench(config: MeanVarianceConfig, seed: u64) -> NormalBench {
    NormalBench::new(config, seed, false)
}

impl Sampler for NormalBench {
    fn alternatives(&self) -> usize {
        self.config.k()
    }

    fn scenarios(&self) -> usize {
        self.config.m()
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        let m = self.config.m();
        for (slot, sys) in out.iter_mut().zip(systems) {
            let s = sys.flat(m);
            let z = normal_quantile(self.uniform(s, replication));
            *slot = self.means[s] + self.sd[s] * z;
        }
        Ok(())
    }
}
