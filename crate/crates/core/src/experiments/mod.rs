//! Macro-replication harness: realized PCS, sample-size comparisons and the
//! two case studies.

mod queue_study;
mod report;
mod schedule_study;
mod synthetic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sampler::Sampler;
use crate::selection::{
    run_sequential, run_two_stage, run_vanilla, ProcedureConfig, SelectionError, SelectionOutcome,
};

pub use queue_study::{
    queueing_pcs_study, queueing_study, service_sample, PcsSpread, QueueMacroRep, QueuePcsConfig,
    QueuePcsResult, QueuePcsSet, QueueStudyConfig, QueueStudyResult, QueueTruth, StudyError,
    QUEUE_FAMILIES,
};
pub use report::{config_hash, ExperimentReport, Metric, ReportRow};
pub use schedule_study::{
    scheduling_study, ScheduleRow, ScheduleStudyConfig, ScheduleStudyResult, APPROACHES,
};
pub use synthetic::{
    compare_procedures, compare_rules_two_stage, estimate_pcs, procedure_report, PcsEstimate,
    ProcedureCell, ProcedureComparison, RuleCell, RuleComparison,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Procedure {
    /// Two-stage.
    T,
    /// Sequential.
    S,
    /// Two-layer baseline.
    V,
}

impl Procedure {
    pub fn run<S: Sampler + ?Sized>(
        self,
        sampler: &mut S,
        config: &ProcedureConfig,
    ) -> Result<SelectionOutcome, SelectionError> {
        match self {
            Procedure::T => run_two_stage(sampler, config),
            Procedure::S => run_sequential(sampler, config),
            Procedure::V => run_vanilla(sampler, config),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Procedure::T => "T",
            Procedure::S => "S",
            Procedure::V => "V",
        }
    }
}

impl std::str::FromStr for Procedure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "t" | "two-stage" => Ok(Procedure::T),
            "s" | "sequential" => Ok(Procedure::S),
            "v" | "vanilla" => Ok(Procedure::V),
            _ => Err(format!("unknown procedure {s:?} (t, s, v)")),
        }
    }
}

/// How macro-replications are scheduled. Results are identical either way.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    #[default]
    Parallel,
    Serial,
}

/// Maps `f` over `0..n`, returning results in index order.
pub fn replicate<T, F>(n: usize, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match execution {
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        Execution::Serial => (0..n).map(f).collect(),
    }
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Sample mean with a 95% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub half_width: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                half_width: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let half_width = if n < 2 {
            f64::INFINITY
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            Z95 * (var / n as f64).sqrt()
        };
        Estimate {
            mean,
            half_width,
            n,
        }
    }

    pub fn lower(&self) -> f64 {
        self.mean - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.mean + self.half_width
    }

    /// Ratio of means `x̄/ȳ` for paired samples with a delta-method
    /// half-width.
    pub fn ratio_of_means(x: &[f64], y: &[f64]) -> Self {
        assert_eq!(x.len(), y.len(), "paired samples must have equal length");
        let n = x.len();
        let mx = x.iter().sum::<f64>() / n as f64;
        let my = y.iter().sum::<f64>() / n as f64;
        let r = mx / my;
        if n < 2 {
            return Estimate {
                mean: r,
                half_width: f64::INFINITY,
                n,
            };
        }
        // Linearization: x_i − r·y_i has mean zero at the true ratio.
        let resid: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - r * b).collect();
        let mr = resid.iter().sum::<f64>() / n as f64;
        let var = resid.iter().map(|v| (v - mr).powi(2)).sum::<f64>() / (n - 1) as f64;
        Estimate {
            mean: r,
            half_width: Z95 * (var / n as f64).sqrt() / my.abs(),
            n,
        }
    }
}

/// Bernoulli proportion with a 95% normal-approximation half-width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub p: f64,
    pub half_width: f64,
    pub successes: usize,
    pub n: usize,
}

impl Proportion {
    pub fn new(successes: usize, n: usize) -> Self {
        let p = if n == 0 {
            f64::NAN
        } else {
            successes as f64 / n as f64
        };
        Proportion {
            p,
            half_width: Z95 * (p * (1.0 - p) / n as f64).sqrt(),
            successes,
            n,
        }
    }
}
