//! Experiments on the synthetic normal benches.

use serde::{Deserialize, Serialize};

use super::{
    replicate, Estimate, Execution, ExperimentReport, Metric, Procedure, Proportion, ReportRow,
};
use crate::bench::{MeanConfig, MeanVarianceConfig, NormalBench, VarianceConfig};
use crate::boundary::ErrorRule;
use crate::sampler::Sampler;
use crate::selection::{ProcedureConfig, SelectionError, StopReason};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcsEstimate {
    pub pcs: Proportion,
    pub samples: Estimate,
    /// Sum of total samples over all runs.
    pub total_samples: u64,
    pub truncated_runs: usize,
    pub per_run_samples: Vec<u64>,
}

/// Runs `procedure` `runs` times on samplers built by `factory(seed)` with
/// `seed = base_seed + run` and counts how often a member of `good` is
/// selected.
pub fn estimate_pcs<S, F>(
    procedure: Procedure,
    config: &ProcedureConfig,
    factory: F,
    good: &[usize],
    runs: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<PcsEstimate, SelectionError>
where
    S: Sampler,
    F: Fn(u64) -> S + Sync + Send,
{
    let results = replicate(runs, execution, |r| {
        let mut sampler = factory(base_seed.wrapping_add(r as u64));
        procedure.run(&mut sampler, config)
    });
    let mut correct = 0;
    let mut truncated = 0;
    let mut per_run = Vec::with_capacity(runs);
    for res in results {
        let out = res?;
        if good.contains(&out.selected) {
            correct += 1;
        }
        if out.stop_reason == StopReason::Truncation {
            truncated += 1;
        }
        per_run.push(out.total_samples);
    }
    let as_f: Vec<f64> = per_run.iter().map(|&v| v as f64).collect();
    Ok(PcsEstimate {
        pcs: Proportion::new(correct, runs),
        samples: Estimate::from_samples(&as_f),
        total_samples: per_run.iter().sum(),
        truncated_runs: truncated,
        per_run_samples: per_run,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleCell {
    pub means: MeanConfig,
    pub variances: VarianceConfig,
    pub k: usize,
    pub m: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleComparison {
    pub cell: RuleCell,
    pub multiplicative: Estimate,
    pub additive: Estimate,
    /// `N^M/N^A` with a paired delta-method interval.
    pub ratio: Estimate,
}

/// Average two-stage sample sizes under the two error rules, run on common
/// seeds so that the ratio is a paired comparison.
#[allow(clippy::too_many_arguments)]
pub fn compare_rules_two_stage(
    cells: &[RuleCell],
    delta: f64,
    alpha: f64,
    n0: u64,
    runs: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<RuleComparison>, SelectionError> {
    let mut out = Vec::new();
    for cell in cells {
        let cfg = MeanVarianceConfig::standard(cell.means, cell.variances, cell.k, cell.m)
            .map_err(|e| SelectionError::Config(e.to_string()))?;
        let base = ProcedureConfig::new(delta, alpha, n0);
        let factory = |seed| NormalBench::new(cfg.clone(), seed, false);
        let mult = estimate_pcs(
            Procedure::T,
            &base.clone().with_rule(ErrorRule::Multiplicative),
            factory,
            &[0],
            runs,
            base_seed,
            execution,
        )?;
        let add = estimate_pcs(
            Procedure::T,
            &base.with_rule(ErrorRule::Additive),
            factory,
            &[0],
            runs,
            base_seed,
            execution,
        )?;
        let x: Vec<f64> = mult.per_run_samples.iter().map(|&v| v as f64).collect();
        let y: Vec<f64> = add.per_run_samples.iter().map(|&v| v as f64).collect();
        out.push(RuleComparison {
            cell: cell.clone(),
            multiplicative: mult.samples,
            additive: add.samples,
            ratio: Estimate::ratio_of_means(&x, &y),
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcedureCell {
    pub means: MeanConfig,
    pub variances: VarianceConfig,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcedureComparison {
    pub cell: ProcedureCell,
    pub results: Vec<(Procedure, PcsEstimate)>,
}

impl ProcedureComparison {
    pub fn get(&self, p: Procedure) -> Option<&PcsEstimate> {
        self.results.iter().find(|(q, _)| *q == p).map(|(_, e)| e)
    }
}

/// Average sample sizes and realized PCS of several procedures per cell.
/// The two-stage procedure uses `rule`; the others always use the
/// multiplicative rule.
#[allow(clippy::too_many_arguments)]
pub fn compare_procedures(
    cells: &[ProcedureCell],
    procedures: &[Procedure],
    rule: ErrorRule,
    alpha: f64,
    n0: u64,
    runs: usize,
    base_seed: u64,
    execution: Execution,
) -> Result<Vec<ProcedureComparison>, SelectionError> {
    let mut out = Vec::new();
    for cell in cells {
        let cfg = MeanVarianceConfig::standard(cell.means, cell.variances, cell.k, cell.m)
            .map_err(|e| SelectionError::Config(e.to_string()))?;
        let good = cfg.good_alternatives(cell.delta);
        let mut results = Vec::new();
        for &p in procedures {
            let pc = ProcedureConfig::new(cell.delta, alpha, n0).with_rule(if p == Procedure::T {
                rule
            } else {
                ErrorRule::Multiplicative
            });
            let est = estimate_pcs(
                p,
                &pc,
                |seed| NormalBench::new(cfg.clone(), seed, false),
                &good,
                runs,
                base_seed,
                execution,
            )?;
            results.push((p, est));
        }
        out.push(ProcedureComparison {
            cell: cell.clone(),
            results,
        });
    }
    Ok(out)
}

impl ProcedureComparison {
    pub fn report_rows(&self) -> Vec<ReportRow> {
        self.results
            .iter()
            .map(|(p, e)| {
                ReportRow::new(format!(
                    "{}/{} k={} m={} delta={} proc={}",
                    self.cell.means,
                    self.cell.variances,
                    self.cell.k,
                    self.cell.m,
                    self.cell.delta,
                    p.name()
                ))
                .with("pcs", e.pcs)
                .with("avg_samples", e.samples)
                .with("total_samples", Metric::exact(e.total_samples as f64))
                .with("truncated_runs", Metric::exact(e.truncated_runs as f64))
            })
            .collect()
    }
}

impl RuleComparison {
    pub fn report_row(&self) -> ReportRow {
        ReportRow::new(format!(
            "{}/{} k={} m={}",
            self.cell.means, self.cell.variances, self.cell.k, self.cell.m
        ))
        .with("n_mult", self.multiplicative)
        .with("n_add", self.additive)
        .with("ratio", self.ratio)
    }
}

/// Bundles comparison rows into one report.
pub fn procedure_report<C: Serialize>(
    name: &str,
    config: &C,
    base_seed: u64,
    rows: &[ProcedureComparison],
) -> ExperimentReport {
    let mut report = ExperimentReport::new(name, config, base_seed);
    for c in rows {
        report.rows.extend(c.report_rows());
    }
    report
}
