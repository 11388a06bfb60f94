//! The sequencing case study: RSB against best-fit, empirical and
//! order-by-variance sequencing on subsampled duration data.

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::queue_study::StudyError;
use super::{replicate, Estimate, Execution, ExperimentReport, Procedure, ReportRow};
use crate::ambiguity::build_ambiguity_set;
use crate::queueing::path_rng;
use crate::scheduling::{
    ov_sequence, schedule_cost, AllowanceRule, DurationData, ScheduleError, ScheduleInstance,
    SequencingSampler,
};
use crate::selection::ProcedureConfig;
use crate::stats::{empirical_quantiles, mean, variance, Distribution, Family};

pub const APPROACHES: [&str; 4] = ["RSB", "BF", "Em", "OV"];

/// Stream key of the evaluation draws; shared by all approaches.
const EVAL_STREAM: u64 = u64::MAX - 1;
const SUBSAMPLE_STREAM: u64 = u64::MAX - 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStudyConfig {
    /// Fraction of each operation's data handed to the approaches.
    pub gamma: f64,
    pub macro_reps: usize,
    /// Cost samples per chosen order under the true distributions.
    pub eval_samples: usize,
    pub delta: f64,
    pub alpha: f64,
    pub n0: u64,
    pub c_wait: f64,
    pub c_over: f64,
    pub ks_level: f64,
    pub families: Vec<Family>,
    pub scenario_cap: usize,
    pub procedure: Procedure,
    /// Common random numbers across orders inside the selection procedure.
    pub crn: bool,
    pub base_seed: u64,
    pub execution: Execution,
}

impl ScheduleStudyConfig {
    /// Desk scale: 100 macro-reps, 10⁴ evaluation samples and at most 16
    /// product scenarios per set. Run time grows faster than quadratically
    /// in the scenario count.
    pub fn desk(gamma: f64) -> Self {
        ScheduleStudyConfig {
            gamma,
            macro_reps: 100,
            eval_samples: 10_000,
            delta: 1.0,
            alpha: 0.05,
            n0: 10,
            c_wait: 1.0,
            c_over: 0.5,
            ks_level: 0.05,
            families: Family::ALL.to_vec(),
            scenario_cap: 16,
            procedure: Procedure::S,
            crn: true,
            base_seed: 1,
            execution: Execution::Parallel,
        }
    }

    pub fn paper_scale(gamma: f64) -> Self {
        ScheduleStudyConfig {
            macro_reps: 1_000,
            eval_samples: 10_000_000,
            scenario_cap: 256,
            ..Self::desk(gamma)
        }
    }
}

/// `[M, Q70, Q80, Q90]` of one approach in one macro-rep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub approach: String,
    pub macro_rep: usize,
    pub order: Vec<usize>,
    pub measures: [f64; 4],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScheduleStudyResult {
    pub rows: Vec<ScheduleRow>,
    /// `X_A/X_RSB − 1` per competing approach for `[M, Q70, Q80, Q90]`.
    pub relative: Vec<(String, [Estimate; 4])>,
    pub report: ExperimentReport,
}

impl ScheduleStudyResult {
    /// Columns `approach, macro_rep, M, Q70, Q80, Q90`.
    pub fn rows_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["approach", "macro_rep", "M", "Q70", "Q80", "Q90"])
            .expect("in-memory write");
        for r in &self.rows {
            let mut rec = vec![r.approach.clone(), r.macro_rep.to_string()];
            rec.extend(r.measures.iter().map(f64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn relative_of(&self, approach: &str) -> Option<&[Estimate; 4]> {
        self.relative
            .iter()
            .find(|(a, _)| a == approach)
            .map(|(_, e)| e)
    }
}

fn subsample(values: &[f64], gamma: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let size = ((gamma * values.len() as f64).round() as usize).clamp(1, values.len());
    let mut idx = sample_indices(rng, values.len(), size).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| values[i]).collect()
}

/// Mean and `[Q70, Q80, Q90]` of order `psi` under the data's empirical
/// distributions, using the shared evaluation stream.
fn evaluate(
    psi: &[usize],
    allowances: &[f64],
    truth: &[Distribution],
    config: &ScheduleStudyConfig,
    seed: u64,
) -> [f64; 4] {
    let mut d = vec![0.0; truth.len()];
    let costs: Vec<f64> = (0..config.eval_samples as u64)
        .map(|r| {
            let mut rng = path_rng(seed, EVAL_STREAM, r);
            for (x, dist) in d.iter_mut().zip(truth) {
                *x = dist.sample(&mut rng);
            }
            schedule_cost(psi, &d, allowances, config.c_wait, config.c_over)
        })
        .collect();
    let q = empirical_quantiles(&costs, &[0.7, 0.8, 0.9]).expect("non-empty sample, valid levels");
    [mean(&costs), q[0], q[1], q[2]]
}

/// Runs the four approaches per macro-rep and scores each chosen order on
/// the full data. Session length is the sum of the full-data means.
pub fn scheduling_study(
    data: &DurationData,
    config: &ScheduleStudyConfig,
) -> Result<ScheduleStudyResult, StudyError> {
    if !(config.gamma > 0.0 && config.gamma < 1.0) {
        return Err(StudyError::Config(format!(
            "gamma must lie in (0, 1), got {}",
            config.gamma
        )));
    }
    if config.macro_reps == 0 || config.eval_samples == 0 {
        return Err(StudyError::Config(
            "macro_reps and eval_samples must be positive".into(),
        ));
    }
    for (id, col) in data.ids.iter().zip(&data.columns) {
        let size = (config.gamma * col.len() as f64).round() as usize;
        if size < 10 {
            return Err(StudyError::Config(format!(
                "operation {id}: gamma = {} leaves {size} observations, at least 10 are needed",
                config.gamma
            )));
        }
    }
    let n = data.columns.len();
    if n > crate::scheduling::MAX_PERMUTED_OPS {
        return Err(ScheduleError::TooLarge {
            what: "the set of operation orders",
            count: (1..=n as u128).product(),
            cap: (1..=crate::scheduling::MAX_PERMUTED_OPS).product(),
        }
        .into());
    }
    let truth: Vec<Distribution> = data
        .columns
        .iter()
        .map(|c| Distribution::empirical(c.clone()))
        .collect();
    let session: f64 = data.columns.iter().map(|c| mean(c)).sum();
    let pc = ProcedureConfig::new(config.delta, config.alpha, config.n0);

    let per_rep = replicate(
        config.macro_reps,
        config.execution,
        |r| -> Result<Vec<ScheduleRow>, StudyError> {
            let seed = config.base_seed.wrapping_add(r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(SUBSAMPLE_STREAM);
            let subs: Vec<Vec<f64>> = data
                .columns
                .iter()
                .map(|c| subsample(c, config.gamma, &mut rng))
                .collect();
            let mu: Vec<f64> = subs.iter().map(|s| mean(s)).collect();
            let var: Vec<f64> = subs.iter().map(|s| variance(s)).collect();
            let sd: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();

            let mut sets = Vec::with_capacity(n);
            let mut best = Vec::with_capacity(n);
            for s in &subs {
                let set = build_ambiguity_set(s, &config.families, config.ks_level)?;
                best.push(vec![set.best_fit().distribution.clone()]);
                sets.push(set.distributions());
            }
            let empirical: Vec<Vec<Distribution>> = subs
                .iter()
                .map(|s| vec![Distribution::empirical(s.clone())])
                .collect();

            let instance = |operations: Vec<Vec<Distribution>>| ScheduleInstance {
                operations,
                mean_estimates: mu.clone(),
                sd_estimates: sd.clone(),
                session_length: session,
                c_wait: config.c_wait,
                c_over: config.c_over,
                rule: AllowanceRule::ProportionalSlack,
            };
            let mut orders = Vec::new();
            for operations in [sets, best, empirical] {
                let mut sampler =
                    SequencingSampler::new(instance(operations), config.scenario_cap, seed)?
                        .with_crn(config.crn);
                let out = config.procedure.run(&mut sampler, &pc)?;
                orders.push(sampler.orders()[out.selected].clone());
            }
            orders.push(ov_sequence(&var));

            let mut rows = Vec::new();
            for (name, psi) in APPROACHES.iter().zip(orders) {
                let allowances =
                    AllowanceRule::ProportionalSlack.allowances(&psi, &mu, &sd, session)?;
                rows.push(ScheduleRow {
                    approach: name.to_string(),
                    macro_rep: r,
                    measures: evaluate(&psi, &allowances, &truth, config, seed),
                    order: psi,
                });
            }
            Ok(rows)
        },
    );
    let mut rows = Vec::new();
    for rep in per_rep {
        rows.extend(rep?);
    }

    let mut relative = Vec::new();
    let mut report = ExperimentReport::new("schedule", config, config.base_seed);
    for name in &APPROACHES[1..] {
        let diffs: Vec<[f64; 4]> = rows
            .chunks(APPROACHES.len())
            .map(|chunk| {
                let rsb = chunk[0].measures;
                let other = chunk
                    .iter()
                    .find(|r| r.approach == *name)
                    .expect("every approach per rep")
                    .measures;
                std::array::from_fn(|c| other[c] / rsb[c] - 1.0)
            })
            .collect();
        let ests: [Estimate; 4] = std::array::from_fn(|c| {
            Estimate::from_samples(&diffs.iter().map(|d| d[c]).collect::<Vec<_>>())
        });
        let mut row = ReportRow::new(format!("{name}/RSB"));
        for (m, e) in ["M", "Q70", "Q80", "Q90"].iter().zip(ests) {
            row = row.with(*m, e);
        }
        report.rows.push(row);
        relative.push((name.to_string(), ests));
    }
    for name in APPROACHES {
        let own: Vec<&ScheduleRow> = rows.iter().filter(|r| r.approach == name).collect();
        let mut row = ReportRow::new(name);
        for (c, m) in ["M", "Q70", "Q80", "Q90"].iter().enumerate() {
            row = row.with(
                *m,
                Estimate::from_samples(&own.iter().map(|r| r.measures[c]).collect::<Vec<_>>()),
            );
        }
        report.rows.push(row);
    }
    report.notes.push(format!(
        "session length {session}; operations {}",
        data.ids.join(",")
    ));
    Ok(ScheduleStudyResult {
        rows,
        relative,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_data() -> DurationData {
        // Two steady operations and one noisy one.
        let steady: Vec<f64> = (0..40).map(|i| 50.0 + (i % 5) as f64).collect();
        let other: Vec<f64> = (0..40).map(|i| 60.0 + (i % 7) as f64 * 0.5).collect();
        let noisy: Vec<f64> = (0..40)
            .map(|i| 20.0 + ((i * 37) % 40) as f64 * 3.0)
            .collect();
        DurationData {
            ids: vec!["a".into(), "b".into(), "c".into()],
            columns: vec![steady, other, noisy],
        }
    }

    #[test]
    fn tiny_study_produces_all_approaches() {
        let cfg = ScheduleStudyConfig {
            macro_reps: 2,
            eval_samples: 500,
            scenario_cap: 8,
            families: vec![Family::Gamma, Family::Lognormal],
            ..ScheduleStudyConfig::desk(0.5)
        };
        let res = scheduling_study(&toy_data(), &cfg).unwrap();
        assert_eq!(res.rows.len(), 8);
        let csv = res.rows_csv();
        assert!(csv.starts_with("approach,macro_rep,M,Q70,Q80,Q90"));
        assert_eq!(csv.lines().count(), 9);
        assert!(res.relative_of("OV").is_some());
        for r in &res.rows {
            assert!(r.measures[1] <= r.measures[2] && r.measures[2] <= r.measures[3]);
        }
    }

    #[test]
    fn small_subsamples_are_rejected() {
        let cfg = ScheduleStudyConfig::desk(0.2);
        assert!(matches!(
            scheduling_study(&toy_data(), &cfg),
            Err(StudyError::Config(_))
        ));
    }
}
