//! The staffing case study: RSB against best-fit and clairvoyance, and
//! realized PCS on fitted ambiguity sets.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    replicate, Estimate, Execution, ExperimentReport, Metric, Procedure, Proportion, ReportRow,
};
use crate::ambiguity::{build_ambiguity_set, misspecification_indicator, AmbiguityError};
use crate::queueing::{
    path_cost, path_rng, simulate_summary, QueueError, QueueModel, StaffingSampler,
};
use crate::scheduling::ScheduleError;
use crate::selection::{ProcedureConfig, SelectionError};
use crate::stats::{empirical_quantiles, Distribution, Family};

pub const QUEUE_FAMILIES: [Family; 3] = [Family::Lognormal, Family::Gamma, Family::Weibull];
pub const QUANTILE_LEVELS: [f64; 3] = [0.7, 0.8, 0.9];

/// Stream key reserved for drawing the service-time data sets.
const DATA_STREAM: u64 = u64::MAX;
/// Stream keys at or above this offset are used by truth tables.
const TRUTH_STREAM: u64 = 1 << 40;

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error(transparent)]
    Queue(#[from] QueueError),
    #[error(transparent)]
    Ambiguity(#[from] AmbiguityError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("invalid study configuration: {0}")]
    Config(String),
}

/// Performance of each staffing level under one service distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueTruth {
    pub levels: Vec<usize>,
    pub samples: usize,
    pub mean: Vec<f64>,
    /// `[Q70, Q80, Q90]` per level.
    pub quantiles: Vec<[f64; 3]>,
}

impl QueueTruth {
    /// Estimates mean and quantiles of the path cost with `samples` paths per
    /// level. Stream `key_base + level index` is used for each level.
    pub fn compute(
        template: &QueueModel,
        service: &Distribution,
        levels: &[usize],
        samples: usize,
        seed: u64,
        key_base: u64,
        execution: Execution,
    ) -> Result<Self, StudyError> {
        template.validate()?;
        if samples == 0 {
            return Err(StudyError::Config(
                "truth tables need at least one sample".into(),
            ));
        }
        let per_level = replicate(levels.len(), execution, |li| {
            let model = QueueModel {
                servers: levels[li],
                ..template.clone()
            };
            (0..samples as u64)
                .map(|r| {
                    let mut rng = path_rng(seed, key_base + li as u64, r);
                    path_cost(
                        &simulate_summary(&model, service, &mut rng),
                        model.servers,
                        &template.cost,
                    )
                    .value
                })
                .collect::<Vec<f64>>()
        });
        let mut mean = Vec::new();
        let mut quantiles = Vec::new();
        for costs in &per_level {
            mean.push(costs.iter().sum::<f64>() / costs.len() as f64);
            let q = empirical_quantiles(costs, &QUANTILE_LEVELS)
                .expect("non-empty sample, valid levels");
            quantiles.push([q[0], q[1], q[2]]);
        }
        Ok(QueueTruth {
            levels: levels.to_vec(),
            samples,
            mean,
            quantiles,
        })
    }

    /// Index of the level with the smallest mean cost.
    pub fn best(&self) -> usize {
        argmin(&self.mean)
    }

    /// `[M, Q70, Q80, Q90]` of level index `i`.
    pub fn measures(&self, i: usize) -> [f64; 4] {
        let q = self.quantiles[i];
        [self.mean[i], q[0], q[1], q[2]]
    }
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = i;
        }
    }
    best
}

/// Draws `ell` service times from the truth for macro-replication `seed`.
pub fn service_sample(truth: &Distribution, ell: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    (0..ell).map(|_| truth.sample(&mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueStudyConfig {
    pub sigma: f64,
    pub ell: usize,
    pub macro_reps: usize,
    /// Largest staffing level; levels are `1..=k`.
    pub k: usize,
    pub customers: usize,
    pub truth_samples: usize,
    pub delta: f64,
    pub alpha: f64,
    pub n0: u64,
    pub procedure: Procedure,
    pub ks_level: f64,
    pub base_seed: u64,
    pub truth_seed: u64,
    pub execution: Execution,
}

impl QueueStudyConfig {
    /// Desk-scale defaults: paths of 2 000 customers and 100 macro-reps.
    pub fn desk(sigma: f64, ell: usize) -> Self {
        QueueStudyConfig {
            sigma,
            ell,
            macro_reps: 100,
            k: 10,
            customers: 2_000,
            truth_samples: 10_000,
            delta: 0.5,
            alpha: 0.05,
            n0: 10,
            procedure: Procedure::S,
            ks_level: 0.05,
            base_seed: 1,
            truth_seed: 0x5eed,
            execution: Execution::Parallel,
        }
    }

    /// Full scale: paths of 10 000 customers and 1 000 macro-reps.
    pub fn paper_scale(sigma: f64, ell: usize) -> Self {
        QueueStudyConfig {
            macro_reps: 1_000,
            customers: 10_000,
            ..Self::desk(sigma, ell)
        }
    }

    fn validate(&self) -> Result<(), StudyError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(StudyError::Config(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.k < 2 {
            return Err(StudyError::Config(
                "at least two staffing levels are needed".into(),
            ));
        }
        if self.macro_reps == 0 {
            return Err(StudyError::Config("macro_reps must be positive".into()));
        }
        Ok(())
    }

    fn template(&self) -> QueueModel {
        QueueModel {
            customers: self.customers,
            ..QueueModel::paper_sec6(self.sigma, 1)
        }
    }

    fn procedure_config(&self) -> ProcedureConfig {
        ProcedureConfig::new(self.delta, self.alpha, self.n0)
    }
}

/// One macro-replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueMacroRep {
    pub seed: u64,
    pub set_families: Vec<Family>,
    pub best_fit: Family,
    pub misspecified: bool,
    /// Selected staffing levels (number of servers).
    pub s_rsb: usize,
    pub s_bf: usize,
    pub samples_rsb: u64,
    pub samples_bf: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueueStudyResult {
    pub truth: QueueTruth,
    pub reps: Vec<QueueMacroRep>,
    /// `X_Tr/X_RSB − 1` for `[M, Q70, Q80, Q90]`.
    pub tr_vs_rsb: [Estimate; 4],
    /// `X_BF/X_RSB − 1` for `[M, Q70, Q80, Q90]`.
    pub bf_vs_rsb: [Estimate; 4],
    /// `bf_vs_rsb` over the misspecified macro-reps only.
    pub bf_vs_rsb_misspecified: [Estimate; 4],
    pub misspecification: Proportion,
    pub set_size: Estimate,
    pub report: ExperimentReport,
}

const MEASURE_NAMES: [&str; 4] = ["M", "Q70", "Q80", "Q90"];

fn relative(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [
        a[0] / b[0] - 1.0,
        a[1] / b[1] - 1.0,
        a[2] / b[2] - 1.0,
        a[3] / b[3] - 1.0,
    ]
}

fn column_estimates(rows: &[[f64; 4]]) -> [Estimate; 4] {
    std::array::from_fn(|c| Estimate::from_samples(&rows.iter().map(|r| r[c]).collect::<Vec<_>>()))
}

/// Per macro-rep: draw `ell` service times, build the set, run the
/// procedure on the set and on the best fit alone, and score both choices
/// on the precomputed truth table.
pub fn queueing_study(config: &QueueStudyConfig) -> Result<QueueStudyResult, StudyError> {
    config.validate()?;
    let template = config.template();
    let truth_dist = Distribution::unit_mean_lognormal(config.sigma);
    let levels: Vec<usize> = (1..=config.k).collect();
    let truth = QueueTruth::compute(
        &template,
        &truth_dist,
        &levels,
        config.truth_samples,
        config.truth_seed,
        TRUTH_STREAM,
        config.execution,
    )?;
    let pc = config.procedure_config();

    let reps = replicate(
        config.macro_reps,
        config.execution,
        |r| -> Result<QueueMacroRep, StudyError> {
            let seed = config.base_seed.wrapping_add(r as u64);
            let data = service_sample(&truth_dist, config.ell, seed);
            let set = build_ambiguity_set(&data, &QUEUE_FAMILIES, config.ks_level)?;
            let best = set.best_fit().clone();
            let mut rsb =
                StaffingSampler::new(template.clone(), set.distributions(), config.k, seed)?;
            let out_rsb = config.procedure.run(&mut rsb, &pc)?;
            let mut bf = StaffingSampler::new(
                template.clone(),
                vec![best.distribution.clone()],
                config.k,
                seed,
            )?;
            let out_bf = config.procedure.run(&mut bf, &pc)?;
            Ok(QueueMacroRep {
                seed,
                set_families: set.members.iter().map(|f| f.family()).collect(),
                best_fit: best.family(),
                misspecified: misspecification_indicator(&best, Family::Lognormal),
                s_rsb: levels[out_rsb.selected],
                s_bf: levels[out_bf.selected],
                samples_rsb: out_rsb.total_samples,
                samples_bf: out_bf.total_samples,
            })
        },
    )
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let tr = truth.measures(truth.best());
    let mut tr_rows = Vec::new();
    let mut bf_rows = Vec::new();
    let mut mis_rows = Vec::new();
    for rep in &reps {
        let rsb = truth.measures(rep.s_rsb - 1);
        let bf = truth.measures(rep.s_bf - 1);
        tr_rows.push(relative(tr, rsb));
        bf_rows.push(relative(bf, rsb));
        if rep.misspecified {
            mis_rows.push(relative(bf, rsb));
        }
    }
    let misspecification =
        Proportion::new(reps.iter().filter(|r| r.misspecified).count(), reps.len());
    let set_size = Estimate::from_samples(
        &reps
            .iter()
            .map(|r| r.set_families.len() as f64)
            .collect::<Vec<_>>(),
    );
    let tr_vs_rsb = column_estimates(&tr_rows);
    let bf_vs_rsb = column_estimates(&bf_rows);
    let bf_vs_rsb_misspecified = column_estimates(&mis_rows);

    let mut report = ExperimentReport::new("queue", config, config.base_seed);
    for (label, ests) in [
        ("Tr/RSB", &tr_vs_rsb),
        ("BF/RSB", &bf_vs_rsb),
        ("BF/RSB|misspecified", &bf_vs_rsb_misspecified),
    ] {
        let mut row = ReportRow::new(label);
        for (name, e) in MEASURE_NAMES.iter().zip(ests.iter()) {
            row = row.with(*name, *e);
        }
        report.rows.push(row);
    }
    report.rows.push(
        ReportRow::new("summary")
            .with("P(misspecified)", misspecification)
            .with("E|P|", set_size)
            .with(
                "avg_samples_rsb",
                Estimate::from_samples(
                    &reps
                        .iter()
                        .map(|r| r.samples_rsb as f64)
                        .collect::<Vec<_>>(),
                ),
            )
            .with(
                "avg_samples_bf",
                Estimate::from_samples(
                    &reps.iter().map(|r| r.samples_bf as f64).collect::<Vec<_>>(),
                ),
            ),
    );
    for (i, &s) in truth.levels.iter().enumerate() {
        let m = truth.measures(i);
        let mut row = ReportRow::new(format!("truth s={s}"));
        for (name, v) in MEASURE_NAMES.iter().zip(m) {
            row = row.with(*name, Metric::exact(v));
        }
        report.rows.push(row);
    }
    report.notes.push(format!(
        "relative differences are fractions; truth uses {} paths per level",
        truth.samples
    ));

    Ok(QueueStudyResult {
        truth,
        reps,
        tr_vs_rsb,
        bf_vs_rsb,
        bf_vs_rsb_misspecified,
        misspecification,
        set_size,
        report,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueuePcsConfig {
    pub sigma: f64,
    pub ell: usize,
    pub sets: usize,
    pub runs_per_set: usize,
    pub k: usize,
    pub customers: usize,
    pub truth_samples: usize,
    pub delta: f64,
    pub alpha: f64,
    pub n0: u64,
    pub procedures: Vec<Procedure>,
    pub ks_level: f64,
    pub base_seed: u64,
    pub execution: Execution,
}

impl QueuePcsConfig {
    /// Desk scale: 20 sets of 200 runs on paths of 500 customers, with
    /// truth tables of 2 000 paths per system.
    pub fn desk(sigma: f64, ell: usize) -> Self {
        QueuePcsConfig {
            sigma,
            ell,
            sets: 20,
            runs_per_set: 200,
            k: 10,
            customers: 500,
            truth_samples: 2_000,
            delta: 0.5,
            alpha: 0.05,
            n0: 10,
            procedures: vec![Procedure::S],
            ks_level: 0.05,
            base_seed: 1,
            execution: Execution::Parallel,
        }
    }
}

/// One ambiguity set and the realized PCS of each procedure on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueuePcsSet {
    pub seed: u64,
    pub set_families: Vec<Family>,
    /// Estimated worst-case mean cost of each level over the set.
    pub worst_case: Vec<f64>,
    pub good: Vec<usize>,
    pub pcs: Vec<(Procedure, Proportion)>,
}

/// Min, quartiles and max of per-set PCS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcsSpread {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl PcsSpread {
    fn from_values(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        // Linear interpolation between order statistics.
        let at = |p: f64| {
            let h = p * (v.len() - 1) as f64;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            v[lo] + (h - lo as f64) * (v[hi] - v[lo])
        };
        PcsSpread {
            min: v[0],
            q25: at(0.25),
            median: at(0.5),
            q75: at(0.75),
            max: v[v.len() - 1],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QueuePcsResult {
    pub sets: Vec<QueuePcsSet>,
    pub spread: Vec<(Procedure, PcsSpread)>,
    pub report: ExperimentReport,
}

impl QueuePcsResult {
    pub fn spread_of(&self, p: Procedure) -> Option<PcsSpread> {
        self.spread.iter().find(|(q, _)| *q == p).map(|(_, s)| *s)
    }
}

/// Builds `sets` ambiguity sets, estimates the worst-case means of each
/// with `truth_samples` paths per system, and runs each procedure
/// `runs_per_set` times on each set. A run is correct when it picks a level
/// whose worst-case mean is within `delta` of the smallest.
pub fn queueing_pcs_study(config: &QueuePcsConfig) -> Result<QueuePcsResult, StudyError> {
    if !(config.sigma > 0.0 && config.sigma.is_finite()) {
        return Err(StudyError::Config(format!(
            "sigma must be positive, got {}",
            config.sigma
        )));
    }
    if config.sets == 0 || config.runs_per_set == 0 {
        return Err(StudyError::Config(
            "sets and runs_per_set must be positive".into(),
        ));
    }
    let template = QueueModel {
        customers: config.customers,
        ..QueueModel::paper_sec6(config.sigma, 1)
    };
    let truth_dist = Distribution::unit_mean_lognormal(config.sigma);
    let levels: Vec<usize> = (1..=config.k).collect();
    let pc = ProcedureConfig::new(config.delta, config.alpha, config.n0);

    let mut sets = Vec::new();
    for si in 0..config.sets {
        let seed = config.base_seed.wrapping_add(si as u64);
        let data = service_sample(&truth_dist, config.ell, seed);
        let set = build_ambiguity_set(&data, &QUEUE_FAMILIES, config.ks_level)?;
        let scenarios = set.distributions();
        let mut worst_case = vec![f64::NEG_INFINITY; config.k];
        for (j, d) in scenarios.iter().enumerate() {
            let t = QueueTruth::compute(
                &template,
                d,
                &levels,
                config.truth_samples,
                seed,
                TRUTH_STREAM + (j * config.k) as u64,
                config.execution,
            )?;
            for (w, m) in worst_case.iter_mut().zip(&t.mean) {
                *w = w.max(*m);
            }
        }
        let best = worst_case.iter().cloned().fold(f64::INFINITY, f64::min);
        let good: Vec<usize> = (0..config.k)
            .filter(|&i| worst_case[i] - best <= config.delta)
            .collect();
        let mut pcs = Vec::new();
        for &p in &config.procedures {
            let est = super::estimate_pcs(
                p,
                &pc,
                |run_seed| {
                    StaffingSampler::new(template.clone(), scenarios.clone(), config.k, run_seed)
                        .expect("validated above")
                },
                &good,
                config.runs_per_set,
                seed.wrapping_mul(1_000_003).wrapping_add(1 << 20),
                config.execution,
            )?;
            pcs.push((p, est.pcs));
        }
        sets.push(QueuePcsSet {
            seed,
            set_families: set.members.iter().map(|f| f.family()).collect(),
            worst_case,
            good,
            pcs,
        });
    }

    let mut report = ExperimentReport::new("queue-pcs", config, config.base_seed);
    let mut spread = Vec::new();
    for (pi, &p) in config.procedures.iter().enumerate() {
        let values: Vec<f64> = sets.iter().map(|s| s.pcs[pi].1.p).collect();
        let sp = PcsSpread::from_values(&values);
        spread.push((p, sp));
        report.rows.push(
            ReportRow::new(format!("proc={}", p.name()))
                .with("min", Metric::exact(sp.min))
                .with("q25", Metric::exact(sp.q25))
                .with("median", Metric::exact(sp.median))
                .with("q75", Metric::exact(sp.q75))
                .with("max", Metric::exact(sp.max)),
        );
    }
    for s in &sets {
        let mut row = ReportRow::new(format!("set seed={}", s.seed))
            .with("set_size", Metric::exact(s.set_families.len() as f64))
            .with("good_size", Metric::exact(s.good.len() as f64));
        for (p, pcs) in &s.pcs {
            row = row.with(format!("pcs_{}", p.name()), *pcs);
        }
        report.rows.push(row);
    }
    Ok(QueuePcsResult {
        sets,
        spread,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_interpolates() {
        let s = PcsSpread::from_values(&[1.0, 0.9, 0.95, 0.97, 0.99]);
        assert_eq!(s.min, 0.9);
        assert_eq!(s.median, 0.97);
        assert_eq!(s.max, 1.0);
        assert!((s.q25 - 0.95).abs() < 1e-12);
    }

    #[test]
    fn truth_table_is_reproducible() {
        let template = QueueModel {
            customers: 200,
            ..QueueModel::paper_sec6(1.0, 1)
        };
        let d = Distribution::unit_mean_lognormal(1.0);
        let a = QueueTruth::compute(&template, &d, &[8, 10, 12], 50, 3, 0, Execution::Parallel)
            .unwrap();
        let b =
            QueueTruth::compute(&template, &d, &[8, 10, 12], 50, 3, 0, Execution::Serial).unwrap();
        assert_eq!(a, b);
        for q in &a.quantiles {
            assert!(q[0] <= q[1] && q[1] <= q[2]);
        }
    }

    #[test]
    fn tiny_study_runs_end_to_end() {
        let cfg = QueueStudyConfig {
            macro_reps: 3,
            customers: 200,
            truth_samples: 50,
            delta: 2.0,
            ..QueueStudyConfig::desk(1.0, 50)
        };
        let res = queueing_study(&cfg).unwrap();
        assert_eq!(res.reps.len(), 3);
        // Clairvoyance picks the truth-table optimum, so no level beats it on M.
        assert!(res.tr_vs_rsb[0].mean <= 0.0);
        assert!(res.report.to_csv().contains("BF/RSB"));
        assert!(queueing_study(&QueueStudyConfig { sigma: 0.0, ..cfg }).is_err());
    }
}
