//! Sequencing a session of operations: waiting-time chain, schedule cost,
//! time allowances, and a sampler whose alternatives are operation orders.

use std::fmt;
use std::io::Read;
use std::sync::Arc;

use thiserror::Error;

use crate::queueing::path_rng;
use crate::sampler::{SampleError, Sampler, SystemId};
use crate::stats::{Distribution, StatsError};

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("invalid schedule: {0}")]
    Invalid(String),
    #[error("{what} has {count} elements, above the cap of {cap}; supply a subset instead")]
    TooLarge {
        what: &'static str,
        count: u128,
        cap: usize,
    },
    #[error("infeasible allowances: {0}")]
    Infeasible(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Waits `W_1..W_{n+1}` of operations run in the order `psi`.
///
/// `d` and `t` are indexed by operation, not by position. `W_1 = 0` and
/// `W_{i+1} = max(0, W_i + d_{ψ_i} − t_{ψ_i})`; the last entry is overtime.
pub fn waiting_chain(psi: &[usize], d: &[f64], t: &[f64]) -> Vec<f64> {
    let mut w = Vec::with_capacity(psi.len() + 1);
    let mut cur = 0.0f64;
    w.push(cur);
    for &op in psi {
        cur = (cur + d[op] - t[op]).max(0.0);
        w.push(cur);
    }
    w
}

/// `c_W·Σ_{i≤n} W_i + c_O·W_{n+1}`.
pub fn schedule_cost(psi: &[usize], d: &[f64], t: &[f64], c_wait: f64, c_over: f64) -> f64 {
    let mut total_wait = 0.0;
    let mut cur = 0.0f64;
    for &op in psi {
        total_wait += cur;
        cur = (cur + d[op] - t[op]).max(0.0);
    }
    c_wait * total_wait + c_over * cur
}

/// Operations in increasing order of variance; ties keep input order.
pub fn ov_sequence(variances: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..variances.len()).collect();
    idx.sort_by(|&a, &b| variances[a].total_cmp(&variances[b]));
    idx
}

/// User rule returning `η` per operation for allowances `μ_i + η_i·σ_i`.
/// Arguments: order, means, standard deviations, session length.
pub type EtaFn = dyn Fn(&[usize], &[f64], &[f64], f64) -> Vec<f64> + Send + Sync;

#[derive(Clone, Default)]
pub enum AllowanceRule {
    /// `t_i = μ_i + σ_i·(T − Σμ)/Σσ` when `T ≥ Σμ`, else `t_i = μ_i·T/Σμ`.
    #[default]
    ProportionalSlack,
    Custom(Arc<EtaFn>),
}

impl fmt::Debug for AllowanceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllowanceRule::ProportionalSlack => f.write_str("ProportionalSlack"),
            AllowanceRule::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl AllowanceRule {
    /// Allowances indexed by operation. Always nonnegative and summing to at
    /// most `session` (up to rounding).
    pub fn allowances(
        &self,
        psi: &[usize],
        mean: &[f64],
        sd: &[f64],
        session: f64,
    ) -> Result<Vec<f64>, ScheduleError> {
        let n = mean.len();
        if sd.len() != n || psi.len() != n {
            return Err(ScheduleError::Invalid(
                "mean, sd and order lengths differ".into(),
            ));
        }
        if !(session > 0.0 && session.is_finite()) {
            return Err(ScheduleError::Invalid(format!(
                "session length must be positive, got {session}"
            )));
        }
        if mean.iter().chain(sd).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ScheduleError::Invalid(
                "means and sds must be finite and nonnegative".into(),
            ));
        }
        let t = match self {
            AllowanceRule::ProportionalSlack => proportional_slack(mean, sd, session),
            AllowanceRule::Custom(eta) => {
                let eta = eta(psi, mean, sd, session);
                if eta.len() != n {
                    return Err(ScheduleError::Infeasible(format!(
                        "rule returned {} values for {n} operations",
                        eta.len()
                    )));
                }
                mean.iter()
                    .zip(sd)
                    .zip(&eta)
                    .map(|((m, s), e)| m + e * s)
                    .collect()
            }
        };
        let sum: f64 = t.iter().sum();
        if t.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(ScheduleError::Infeasible(format!(
                "negative or non-finite allowance in {t:?}"
            )));
        }
        if sum > session * (1.0 + 1e-12) {
            return Err(ScheduleError::Infeasible(format!(
                "allowances sum to {sum}, above the session length {session}"
            )));
        }
        Ok(t)
    }
}

fn proportional_slack(mean: &[f64], sd: &[f64], session: f64) -> Vec<f64> {
    let sum_mu: f64 = mean.iter().sum();
    let sum_sd: f64 = sd.iter().sum();
    let slack = session - sum_mu;
    if slack >= 0.0 && sum_sd > 0.0 {
        mean.iter()
            .zip(sd)
            .map(|(m, s)| m + s * slack / sum_sd)
            .collect()
    } else if slack >= 0.0 {
        // No spread to weight by: share the slack equally.
        let each = slack / mean.len() as f64;
        mean.iter().map(|m| m + each).collect()
    } else {
        mean.iter().map(|m| m * session / sum_mu).collect()
    }
}

/// All orders of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut cur: Vec<usize> = (0..n).collect();
    let mut out = vec![cur.clone()];
    // Next-permutation loop.
    loop {
        let Some(i) = (1..n).rev().find(|&i| cur[i - 1] < cur[i]) else {
            return out;
        };
        let j = (i..n)
            .rev()
            .find(|&j| cur[j] > cur[i - 1])
            .expect("a larger element exists");
        cur.swap(i - 1, j);
        cur[i..].reverse();
        out.push(cur.clone());
    }
}

pub const MAX_PERMUTED_OPS: usize = 5;
pub const DEFAULT_SCENARIO_CAP: usize = 256;

/// Index tuples into the per-operation sets, lexicographic. Beyond `cap`,
/// `cap` tuples at evenly spaced lexicographic ranks are kept.
pub fn product_scenarios(sizes: &[usize], cap: usize) -> Vec<Vec<usize>> {
    let total: u128 = sizes.iter().map(|&s| s as u128).product();
    let ranks: Vec<u128> = if total <= cap as u128 {
        (0..total).collect()
    } else {
        (0..cap as u128).map(|j| j * total / cap as u128).collect()
    };
    ranks
        .into_iter()
        .map(|mut r| {
            let mut tuple = vec![0; sizes.len()];
            for (slot, &s) in tuple.iter_mut().zip(sizes).rev() {
                *slot = (r % s as u128) as usize;
                r /= s as u128;
            }
            tuple
        })
        .collect()
}

/// Per-operation candidate duration distributions plus the cost setup.
#[derive(Clone, Debug)]
pub struct ScheduleInstance {
    /// `operations[i]` is the ambiguity set of operation `i`.
    pub operations: Vec<Vec<Distribution>>,
    /// Mean and sd estimates fed to the allowance rule.
    pub mean_estimates: Vec<f64>,
    pub sd_estimates: Vec<f64>,
    pub session_length: f64,
    pub c_wait: f64,
    pub c_over: f64,
    pub rule: AllowanceRule,
}

impl ScheduleInstance {
    pub fn n_ops(&self) -> usize {
        self.operations.len()
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let n = self.n_ops();
        if n == 0 {
            return Err(ScheduleError::Invalid("no operations".into()));
        }
        if self.operations.iter().any(|p| p.is_empty()) {
            return Err(ScheduleError::Invalid(
                "every operation needs at least one candidate distribution".into(),
            ));
        }
        if self.mean_estimates.len() != n || self.sd_estimates.len() != n {
            return Err(ScheduleError::Invalid(
                "one mean and sd estimate per operation is required".into(),
            ));
        }
        if !(self.c_wait >= 0.0
            && self.c_over >= 0.0
            && self.c_wait.is_finite()
            && self.c_over.is_finite())
        {
            return Err(ScheduleError::Invalid(
                "cost rates must be finite and nonnegative".into(),
            ));
        }
        for d in self.operations.iter().flatten() {
            d.validate()?;
        }
        Ok(())
    }

    /// Allowances of order `psi` under the instance's rule.
    pub fn allowances(&self, psi: &[usize]) -> Result<Vec<f64>, ScheduleError> {
        self.rule.allowances(
            psi,
            &self.mean_estimates,
            &self.sd_estimates,
            self.session_length,
        )
    }
}

/// Alternatives are operation orders, scenarios are members of the product
/// of the per-operation sets. System `(i, j)` returns the schedule cost of
/// order `i` with durations drawn from scenario `j`. Negative draws (from a
/// triangular fit) are clamped to zero.
#[derive(Clone, Debug)]
pub struct SequencingSampler {
    instance: ScheduleInstance,
    orders: Vec<Vec<usize>>,
    allowances: Vec<Vec<f64>>,
    scenarios: Vec<Vec<usize>>,
    seed: u64,
    crn: bool,
    scratch: Vec<f64>,
}

impl SequencingSampler {
    /// Every order of the operations (at most five) and the full product
    /// set, subsampled beyond `scenario_cap`.
    pub fn new(
        instance: ScheduleInstance,
        scenario_cap: usize,
        seed: u64,
    ) -> Result<Self, ScheduleError> {
        let n = instance.n_ops();
        if n > MAX_PERMUTED_OPS {
            return Err(ScheduleError::TooLarge {
                what: "the set of operation orders",
                count: (1..=n as u128).product(),
                cap: (1..=MAX_PERMUTED_OPS).product(),
            });
        }
        Self::with_orders(instance, permutations(n), scenario_cap, seed)
    }

    pub fn with_orders(
        instance: ScheduleInstance,
        orders: Vec<Vec<usize>>,
        scenario_cap: usize,
        seed: u64,
    ) -> Result<Self, ScheduleError> {
        instance.validate()?;
        let n = instance.n_ops();
        if orders.is_empty() {
            return Err(ScheduleError::Invalid("no orders supplied".into()));
        }
        for o in &orders {
            let mut sorted = o.clone();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(ScheduleError::Invalid(format!(
                    "{o:?} is not an order of {n} operations"
                )));
            }
        }
        if scenario_cap == 0 {
            return Err(ScheduleError::Invalid(
                "scenario cap must be positive".into(),
            ));
        }
        let allowances = orders
            .iter()
            .map(|o| instance.allowances(o))
            .collect::<Result<Vec<_>, _>>()?;
        let sizes: Vec<usize> = instance.operations.iter().map(Vec::len).collect();
        let scenarios = product_scenarios(&sizes, scenario_cap);
        Ok(SequencingSampler {
            instance,
            orders,
            allowances,
            scenarios,
            seed,
            crn: false,
            scratch: vec![0.0; n],
        })
    }

    /// With common random numbers, all orders under one scenario see the
    /// same durations.
    pub fn with_crn(mut self, crn: bool) -> Self {
        self.crn = crn;
        self
    }

    pub fn orders(&self) -> &[Vec<usize>] {
        &self.orders
    }

    /// Index tuples of the scenarios in use.
    pub fn scenario_tuples(&self) -> &[Vec<usize>] {
        &self.scenarios
    }

    pub fn allowances_of(&self, alternative: usize) -> &[f64] {
        &self.allowances[alternative]
    }
}

impl Sampler for SequencingSampler {
    fn alternatives(&self) -> usize {
        self.orders.len()
    }

    fn scenarios(&self) -> usize {
        self.scenarios.len()
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        let m = self.scenarios.len();
        for (slot, sys) in out.iter_mut().zip(systems) {
            let key = if self.crn { sys.scenario } else { sys.flat(m) } as u64;
            let mut rng = path_rng(self.seed, key, replication);
            let tuple = &self.scenarios[sys.scenario];
            for (op, d) in self.scratch.iter_mut().enumerate() {
                *d = self.instance.operations[op][tuple[op]]
                    .sample(&mut rng)
                    .max(0.0);
            }
            *slot = schedule_cost(
                &self.orders[sys.alternative],
                &self.scratch,
                &self.allowances[sys.alternative],
                self.instance.c_wait,
                self.instance.c_over,
            );
        }
        Ok(())
    }
}

/// Duration data: one column per operation, header row of operation ids.
/// Columns may have different lengths; empty cells are skipped.
#[derive(Clone, Debug, PartialEq)]
pub struct DurationData {
    pub ids: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl DurationData {
    pub fn from_reader<R: Read>(reader: R) -> Result<Self, ScheduleError> {
        let mut rdr = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let ids: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        if ids.is_empty() || ids.iter().any(String::is_empty) {
            return Err(ScheduleError::Invalid(
                "the header must name every operation".into(),
            ));
        }
        let mut columns = vec![Vec::new(); ids.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() > ids.len() {
                return Err(ScheduleError::Invalid(format!(
                    "row {} has more fields than the header",
                    line + 2
                )));
            }
            for (c, field) in rec.iter().enumerate() {
                if field.is_empty() {
                    continue;
                }
                let v: f64 = field.parse().map_err(|_| {
                    ScheduleError::Invalid(format!(
                        "row {}, column {}: not a number: {field:?}",
                        line + 2,
                        ids[c]
                    ))
                })?;
                if !(v.is_finite() && v > 0.0) {
                    return Err(ScheduleError::Invalid(format!(
                        "row {}, column {}: durations must be positive",
                        line + 2,
                        ids[c]
                    )));
                }
                columns[c].push(v);
            }
        }
        if let Some((c, _)) = columns.iter().enumerate().find(|(_, col)| col.is_empty()) {
            return Err(ScheduleError::Invalid(format!(
                "column {} has no data",
                ids[c]
            )));
        }
        Ok(DurationData { ids, columns })
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ScheduleError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ScheduleError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::selection::{run_sequential, ProcedureConfig};

    #[test]
    fn direct_recursion() {
        assert_eq!(
            waiting_chain(&[0, 1], &[1.0, 2.0], &[2.0, 1.0]),
            vec![0.0, 0.0, 1.0]
        );
        assert_eq!(
            schedule_cost(&[0, 1], &[1.0, 2.0], &[2.0, 1.0], 1.0, 0.5),
            0.5
        );
        // Reversed order: op 1 runs over by 1, op 0 absorbs it.
        assert_eq!(
            waiting_chain(&[1, 0], &[1.0, 2.0], &[2.0, 1.0]),
            vec![0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn slack_everywhere_means_no_waits() {
        let w = waiting_chain(&[2, 0, 1], &[1.0, 1.0, 1.0], &[1.5, 1.0, 3.0]);
        assert!(w.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ov_sorting() {
        assert_eq!(ov_sequence(&[3.0, 1.0, 2.0]), vec![1, 2, 0]);
        assert_eq!(ov_sequence(&[2.0, 2.0, 2.0]), vec![0, 1, 2]);
        assert_eq!(ov_sequence(&[5.0]), vec![0]);
    }

    #[test]
    fn allowance_rule_cases() {
        let rule = AllowanceRule::ProportionalSlack;
        let psi = [0, 1, 2];
        let mu = [1.0, 2.0, 3.0];
        assert_eq!(
            rule.allowances(&psi, &mu, &[0.5, 0.5, 0.5], 6.0).unwrap(),
            mu.to_vec()
        );
        let t = rule.allowances(&psi, &mu, &[0.5, 0.5, 0.5], 9.0).unwrap();
        assert_eq!(t, vec![2.0, 3.0, 4.0]);
        let t = rule.allowances(&psi, &mu, &[0.0; 3], 3.0).unwrap();
        assert!((t.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        let greedy =
            AllowanceRule::Custom(Arc::new(|_: &[usize], _: &[f64], _: &[f64], _: f64| {
                vec![10.0; 3]
            }));
        assert!(matches!(
            greedy.allowances(&psi, &mu, &[1.0; 3], 7.0),
            Err(ScheduleError::Infeasible(_))
        ));
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[1], vec![0, 2, 1]);
        assert_eq!(p[5], vec![2, 1, 0]);
        assert_eq!(permutations(4).len(), 24);
        assert_eq!(permutations(1), vec![vec![0]]);
    }

    #[test]
    fn product_enumeration_and_cap() {
        assert_eq!(
            product_scenarios(&[2, 3], 10),
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![1, 2]
            ]
        );
        let capped = product_scenarios(&[4, 4, 4, 4, 4], 256);
        assert_eq!(capped.len(), 256);
        assert_eq!(capped[0], vec![0; 5]);
        assert_eq!(capped[1], vec![0, 0, 0, 1, 0]);
        let mut dedup = capped.clone();
        dedup.dedup();
        assert_eq!(dedup.len(), 256);
    }

    fn constant_instance(d: &[f64]) -> ScheduleInstance {
        ScheduleInstance {
            operations: d
                .iter()
                .map(|&v| vec![Distribution::Constant { value: v }])
                .collect(),
            mean_estimates: d.to_vec(),
            sd_estimates: vec![0.0; d.len()],
            session_length: d.iter().sum(),
            c_wait: 1.0,
            c_over: 0.5,
            rule: AllowanceRule::ProportionalSlack,
        }
    }

    #[test]
    fn exact_allowances_cost_nothing() {
        let mut s = SequencingSampler::new(
            constant_instance(&[3.0, 1.0, 2.0, 4.0]),
            DEFAULT_SCENARIO_CAP,
            1,
        )
        .unwrap();
        assert_eq!(s.alternatives(), 24);
        assert_eq!(s.scenarios(), 1);
        let systems: Vec<SystemId> = (0..24).map(|i| SystemId::new(i, 0)).collect();
        let mut out = vec![1.0; 24];
        s.draw(0, &systems, &mut out).unwrap();
        assert!(out.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_operation_cost_is_overtime() {
        let inst = ScheduleInstance {
            operations: vec![vec![Distribution::Constant { value: 5.0 }]],
            mean_estimates: vec![3.0],
            sd_estimates: vec![1.0],
            session_length: 3.0,
            ..constant_instance(&[1.0])
        };
        let mut s = SequencingSampler::new(inst, 4, 1).unwrap();
        let mut out = [0.0];
        s.draw(0, &[SystemId::new(0, 0)], &mut out).unwrap();
        assert_eq!(out[0], 0.5 * 2.0);
    }

    #[test]
    fn too_many_operations_is_a_config_error() {
        let inst = constant_instance(&[1.0; 6]);
        assert!(matches!(
            SequencingSampler::new(inst, 4, 1),
            Err(ScheduleError::TooLarge { .. })
        ));
    }

    #[test]
    fn low_variance_first_wins_on_a_small_instance() {
        // Op 0 is noisy, op 1 is nearly deterministic; running the steady one
        // first avoids passing op 0's overruns on.
        let inst = ScheduleInstance {
            operations: vec![
                vec![Distribution::Gamma {
                    shape: 1.0,
                    scale: 2.0,
                }],
                vec![Distribution::Gamma {
                    shape: 400.0,
                    scale: 0.005,
                }],
            ],
            mean_estimates: vec![2.0, 2.0],
            sd_estimates: vec![2.0, 0.1],
            session_length: 4.0,
            c_wait: 1.0,
            c_over: 0.5,
            rule: AllowanceRule::ProportionalSlack,
        };
        let mut s = SequencingSampler::new(inst, 4, 7).unwrap().with_crn(true);
        let out = run_sequential(&mut s, &ProcedureConfig::new(0.2, 0.05, 10)).unwrap();
        assert_eq!(s.orders()[out.selected], vec![1, 0]);
    }

    #[test]
    fn csv_with_ragged_columns() {
        let text = "a,b,c\n1,2,3\n4,,5\n6\n";
        let d = DurationData::from_reader(text.as_bytes()).unwrap();
        assert_eq!(d.ids, vec!["a", "b", "c"]);
        assert_eq!(
            d.columns,
            vec![vec![1.0, 4.0, 6.0], vec![2.0], vec![3.0, 5.0]]
        );
        assert!(DurationData::from_reader("a,b\n1,x\n".as_bytes()).is_err());
        assert!(DurationData::from_reader("a,b\n1,\n".as_bytes()).is_err());
    }
}
