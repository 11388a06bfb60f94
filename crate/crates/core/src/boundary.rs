//! Continuation-region boundary and error / indifference-zone budgeting.
//!
//! The sequential procedures monitor a drift statistic against the boundary
//! `g_c(t) = √((c + ln(t+1))(t+1))` with `c = −2 ln(2β)`, where `β` is the
//! per-comparison error allowance.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum BoundaryError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("root bracketing failed: {0}")]
    Numeric(String),
}

/// How the overall error budget `α` is split across pairwise comparisons.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorRule {
    /// `β = α/(km − 1)`: every system pair counted.
    Multiplicative,
    /// `β = α/(k + m − 2)`: only the critical comparisons. Two-stage only.
    Additive,
}

impl FromStr for ErrorRule {
    type Err = BoundaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mult" | "multiplicative" => Ok(ErrorRule::Multiplicative),
            "add" | "additive" => Ok(ErrorRule::Additive),
            other => Err(BoundaryError::InvalidParameter(format!(
                "unknown error rule `{other}`"
            ))),
        }
    }
}

/// Per-comparison error allowance `β` for `k` alternatives and `m` scenarios.
pub fn error_allowance(
    rule: ErrorRule,
    k: usize,
    m: usize,
    alpha: f64,
) -> Result<f64, BoundaryError> {
    if k < 2 || m < 1 {
        return Err(BoundaryError::InvalidParameter(format!(
            "error allowance needs k ≥ 2 and m ≥ 1, got k={k}, m={m}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(BoundaryError::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let comparisons = match rule {
        ErrorRule::Multiplicative => k * m - 1,
        ErrorRule::Additive => k + m - 2,
    };
    Ok(alpha / comparisons as f64)
}

/// Boundary constant and the allowance it was derived from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryParams {
    beta: f64,
    c: f64,
}

impl BoundaryParams {
    /// `c = −2 ln(2β)`; requires `0 < β < 1/2` so that `c > 0`.
    pub fn from_beta(beta: f64) -> Result<Self, BoundaryError> {
        if !(beta > 0.0 && beta < 0.5) {
            return Err(BoundaryError::InvalidParameter(format!(
                "beta must lie in (0, 1/2), got {beta}"
            )));
        }
        Ok(BoundaryParams {
            beta,
            c: c_from_beta(beta),
        })
    }

    /// Builds parameters from a raw boundary constant `c ≥ 0`. `c = 0`
    /// corresponds to the limiting case `β = 1/2`.
    pub fn from_c(c: f64) -> Result<Self, BoundaryError> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(BoundaryError::InvalidParameter(format!(
                "c must be finite and ≥ 0, got {c}"
            )));
        }
        Ok(BoundaryParams {
            beta: beta_from_c(c),
            c,
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `g_c(t)`.
    #[inline]
    pub fn g(&self, t: f64) -> f64 {
        ((self.c + t.ln_1p()) * (t + 1.0)).sqrt()
    }

    /// `g_c(t)/t`, the half-width per unit of information; zero at `t = ∞`.
    #[inline]
    pub fn radius(&self, t: f64) -> f64 {
        if t.is_infinite() {
            0.0
        } else {
            self.g(t) / t
        }
    }

    /// Whether `t·x ≥ g_c(t)`. With infinite information (zero variance
    /// differences) this reduces to `x > 0`.
    #[inline]
    pub fn reaches(&self, t: f64, x: f64) -> bool {
        if t.is_infinite() {
            x > 0.0
        } else {
            t * x >= self.g(t)
        }
    }

    /// Whether `t·x > g_c(t)`; `x > 0` at infinite information.
    #[inline]
    pub fn exceeds(&self, t: f64, x: f64) -> bool {
        if t.is_infinite() {
            x > 0.0
        } else {
            t * x > self.g(t)
        }
    }
}

pub fn c_from_beta(beta: f64) -> f64 {
    -2.0 * (2.0 * beta).ln()
}

pub fn beta_from_c(c: f64) -> f64 {
    0.5 * (-0.5 * c).exp()
}

/// `g_c(t)` as a free function.
pub fn boundary_gc(t: f64, params: &BoundaryParams) -> f64 {
    params.g(t)
}

/// Inner and outer indifference-zone parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IZParams {
    pub delta: f64,
    pub delta_inner: f64,
    pub delta_outer: f64,
}

/// Equal split `δ_I = δ_O = δ/2`, which minimizes the larger of the two
/// layer sample sizes subject to `δ_I + δ_O = δ`.
pub fn split_iz(delta: f64) -> Result<IZParams, BoundaryError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(BoundaryError::InvalidParameter(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    Ok(IZParams {
        delta,
        delta_inner: 0.5 * delta,
        delta_outer: delta - 0.5 * delta,
    })
}

/// Positive root `T*` of `T·δ/2 = g_c(T)`: the information level at which the
/// truncated sequential kernel stops comparing a pair.
pub fn truncation_time(delta: f64, params: &BoundaryParams) -> Result<f64, BoundaryError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(BoundaryError::InvalidParameter(format!(
            "delta must be > 0, got {delta}"
        )));
    }
    if params.c <= 0.0 {
        return Err(BoundaryError::InvalidParameter(
            "truncation time requires c > 0".into(),
        ));
    }
    let slope = 0.5 * delta;
    // h(T) = T·δ/2 − g_c(T) is negative near 0 (g_c(0) = √c > 0) and
    // eventually positive because g_c grows like √(T ln T).
    let h = |t: f64| t * slope - params.g(t);
    let mut lo = f64::EPSILON;
    let mut hi = 1.0;
    let mut doublings = 0;
    while h(hi) <= 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 2000 || !hi.is_finite() {
            return Err(BoundaryError::Numeric(format!(
                "no sign change of T·δ/2 − g_c(T) for δ={delta}, c={}",
                params.c
            )));
        }
    }
    assert!(h(lo) < 0.0, "truncation root bracket lost its lower sign");
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
