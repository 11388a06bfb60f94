//! FIFO multi-server queue with customer abandonment and a staffing cost.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampler::{SampleError, Sampler, SystemId};
use crate::stats::{Distribution, StatsError};

#[derive(Debug, Error)]
pub enum QueueError {
    #[error("invalid queue model: {0}")]
    Invalid(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("csv export failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Penalty applied to the abandonment fraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Utility {
    /// `U(p) = ln(1/(1−p))`.
    LogInverse,
    /// `U(p) = p`.
    Linear,
}

impl Utility {
    pub fn eval(self, p: f64) -> f64 {
        match self {
            Utility::LogInverse => -(-p).ln_1p(),
            Utility::Linear => p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c_abandon: f64,
    pub c_wait: f64,
    pub c_server: f64,
    pub utility: Utility,
}

impl CostParams {
    /// `c_A = 4`, `c_W = 2`, `c_S = 1`, `U(p) = ln(1/(1−p))`.
    pub fn paper_sec6() -> Self {
        CostParams {
            c_abandon: 4.0,
            c_wait: 2.0,
            c_server: 1.0,
            utility: Utility::LogInverse,
        }
    }

    pub fn preset(name: &str) -> Result<Self, QueueError> {
        match name {
            "paper-sec6" => Ok(Self::paper_sec6()),
            _ => Err(QueueError::UnknownPreset(name.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    pub interarrival: Distribution,
    pub service: Distribution,
    pub patience: Distribution,
    pub servers: usize,
    /// Number of customers per path.
    pub customers: usize,
    pub cost: CostParams,
}

impl QueueModel {
    /// Exponential interarrival times with mean 0.1, exponential patience
    /// with mean 5, unit-mean lognormal service with log-sd `sigma`,
    /// 10 000 customers and the `paper-sec6` costs.
    pub fn paper_sec6(sigma: f64, servers: usize) -> Self {
        QueueModel {
            interarrival: Distribution::exponential_with_mean(0.1),
            service: Distribution::unit_mean_lognormal(sigma),
            patience: Distribution::exponential_with_mean(5.0),
            servers,
            customers: 10_000,
            cost: CostParams::paper_sec6(),
        }
    }

    pub fn preset(name: &str, sigma: f64, servers: usize) -> Result<Self, QueueError> {
        match name {
            "paper-sec6" => Ok(Self::paper_sec6(sigma, servers)),
            _ => Err(QueueError::UnknownPreset(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), QueueError> {
        if self.servers == 0 {
            return Err(QueueError::Invalid(
                "at least one server is required".into(),
            ));
        }
        if self.customers == 0 {
            return Err(QueueError::Invalid(
                "at least one customer is required".into(),
            ));
        }
        for (name, v) in [
            ("c_A", self.cost.c_abandon),
            ("c_W", self.cost.c_wait),
            ("c_S", self.cost.c_server),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(QueueError::Invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        self.interarrival.validate()?;
        self.service.validate()?;
        self.patience.validate()?;
        Ok(())
    }
}

/// Per-customer outcome of one path.
#[derive(Clone, Debug, PartialEq)]
pub struct QueuePathStats {
    pub arrivals: Vec<f64>,
    /// Time spent waiting in queue: the wait before service for served
    /// customers and the patience for customers who abandoned.
    pub waits: Vec<f64>,
    pub abandoned: Vec<bool>,
    pub abandon_count: usize,
}

impl QueuePathStats {
    pub fn customers(&self) -> usize {
        self.arrivals.len()
    }

    pub fn served_waits(&self) -> impl Iterator<Item = f64> + '_ {
        self.waits
            .iter()
            .zip(&self.abandoned)
            .filter(|(_, &a)| !a)
            .map(|(&w, _)| w)
    }

    pub fn summary(&self) -> PathSummary {
        PathSummary {
            customers: self.customers(),
            abandon_count: self.abandon_count,
            served_wait_sum: self.served_waits().sum(),
        }
    }

    /// Writes `customer_index, arrival, wait, abandoned` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), QueueError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["customer_index", "arrival", "wait", "abandoned"])?;
        for i in 0..self.customers() {
            w.write_record([
                (i + 1).to_string(),
                self.arrivals[i].to_string(),
                self.waits[i].to_string(),
                u8::from(self.abandoned[i]).to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Aggregates that the cost depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathSummary {
    pub customers: usize,
    pub abandon_count: usize,
    pub served_wait_sum: f64,
}

/// Runs one path, calling `visit(index, arrival, wait, abandoned)` per
/// customer.
///
/// With FIFO service the customers who are served start in arrival order,
/// so customer `i` is offered the wait `w = max(0, F − a_i)` where `F` is the
/// earliest time a server is free of all earlier served customers. It
/// abandons exactly when its patience is below `w`, otherwise it takes that
/// server. Each customer draws interarrival, service and patience times in
/// that order whatever happens to it, which keeps random numbers aligned
/// across staffing levels.
fn run_path<R: Rng + ?Sized>(
    model: &QueueModel,
    service: &Distribution,
    rng: &mut R,
    mut visit: impl FnMut(usize, f64, f64, bool),
) -> PathSummary {
    let mut free = vec![0.0f64; model.servers];
    let mut clock = 0.0;
    let mut abandon_count = 0;
    let mut served_wait_sum = 0.0;
    for i in 0..model.customers {
        clock += model.interarrival.sample(rng);
        let duration = service.sample(rng);
        let patience = model.patience.sample(rng);
        let (slot, &earliest) = free
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("at least one server");
        let wait = (earliest - clock).max(0.0);
        if patience < wait {
            abandon_count += 1;
            visit(i, clock, patience, true);
        } else {
            free[slot] = clock + wait + duration;
            served_wait_sum += wait;
            visit(i, clock, wait, false);
        }
    }
    PathSummary {
        customers: model.customers,
        abandon_count,
        served_wait_sum,
    }
}

/// Simulates one path of `model` with the service distribution overridden
/// by `service`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &QueueModel,
    service: &Distribution,
    rng: &mut R,
) -> QueuePathStats {
    let n = model.customers;
    let mut stats = QueuePathStats {
        arrivals: Vec::with_capacity(n),
        waits: Vec::with_capacity(n),
        abandoned: Vec::with_capacity(n),
        abandon_count: 0,
    };
    let summary = run_path(model, service, rng, |_, a, w, ab| {
        stats.arrivals.push(a);
        stats.waits.push(w);
        stats.abandoned.push(ab);
    });
    stats.abandon_count = summary.abandon_count;
    stats
}

/// Like [`simulate_path`] but keeps only the aggregates.
pub fn simulate_summary<R: Rng + ?Sized>(
    model: &QueueModel,
    service: &Distribution,
    rng: &mut R,
) -> PathSummary {
    run_path(model, service, rng, |_, _, _, _| {})
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathCost {
    pub value: f64,
    /// Every customer abandoned, so the mean served wait is undefined. The
    /// cost then uses `U((n−1)/n)` and drops the waiting term.
    pub degenerate: bool,
}

/// `c_A·U(N_A/n) + c_W·(mean served wait) + c_S·s`.
pub fn path_cost(summary: &PathSummary, servers: usize, cost: &CostParams) -> PathCost {
    let n = summary.customers as f64;
    let staffing = cost.c_server * servers as f64;
    if summary.abandon_count >= summary.customers {
        let p = (n - 1.0) / n;
        return PathCost {
            value: cost.c_abandon * cost.utility.eval(p) + staffing,
            degenerate: true,
        };
    }
    let served = n - summary.abandon_count as f64;
    let value = cost.c_abandon * cost.utility.eval(summary.abandon_count as f64 / n)
        + cost.c_wait * summary.served_wait_sum / served
        + staffing;
    PathCost {
        value,
        degenerate: false,
    }
}

/// Deterministic generator for replication `r` of the stream keyed `key`.
///
/// Each replication owns a disjoint 2³²-word window of a ChaCha8 stream.
pub fn path_rng(seed: u64, key: u64, replication: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key);
    rng.set_word_pos((replication as u128) << 32);
    rng
}

/// Staffing problem as a sampler: system `(i, j)` is one path cost with
/// `levels[i]` servers and service distribution `scenarios[j]`.
///
/// Streams are keyed per system by default. With common random numbers the
/// stream is keyed by the staffing level only, so all scenarios of one
/// alternative share their random numbers.
#[derive(Clone, Debug)]
pub struct StaffingSampler {
    template: QueueModel,
    scenarios: Vec<Distribution>,
    levels: Vec<usize>,
    seed: u64,
    crn: bool,
    degenerate_paths: u64,
}

impl StaffingSampler {
    /// Staffing levels `1..=k`.
    pub fn new(
        template: QueueModel,
        scenarios: Vec<Distribution>,
        k: usize,
        seed: u64,
    ) -> Result<Self, QueueError> {
        Self::with_levels(template, scenarios, (1..=k).collect(), seed)
    }

    pub fn with_levels(
        template: QueueModel,
        scenarios: Vec<Distribution>,
        levels: Vec<usize>,
        seed: u64,
    ) -> Result<Self, QueueError> {
        template.validate()?;
        if levels.len() < 2 {
            return Err(QueueError::Invalid(
                "at least two staffing levels are required".into(),
            ));
        }
        if levels.contains(&0) {
            return Err(QueueError::Invalid(
                "staffing levels must be positive".into(),
            ));
        }
        if scenarios.is_empty() {
            return Err(QueueError::Invalid("the scenario list is empty".into()));
        }
        for s in &scenarios {
            s.validate()?;
        }
        Ok(StaffingSampler {
            template,
            scenarios,
            levels,
            seed,
            crn: false,
            degenerate_paths: 0,
        })
    }

    pub fn with_crn(mut self, crn: bool) -> Self {
        self.crn = crn;
        self
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    /// Paths on which every customer abandoned.
    pub fn degenerate_paths(&self) -> u64 {
        self.degenerate_paths
    }

    /// One cost replication of system `(i, j)`.
    pub fn cost(&self, system: SystemId, replication: u64) -> PathCost {
        let m = self.scenarios.len();
        let key = if self.crn {
            system.alternative as u64
        } else {
            system.flat(m) as u64
        };
        let mut rng = path_rng(self.seed, key, replication);
        let servers = self.levels[system.alternative];
        let model = QueueModel {
            servers,
            ..self.template.clone()
        };
        let summary = simulate_summary(&model, &self.scenarios[system.scenario], &mut rng);
        path_cost(&summary, servers, &self.template.cost)
    }
}

impl Sampler for StaffingSampler {
    fn alternatives(&self) -> usize {
        self.levels.len()
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
        for (slot, &sys) in out.iter_mut().zip(systems) {
            let c = self.cost(sys, replication);
            if c.degenerate {
                self.degenerate_paths += 1;
            }
            *slot = c.value;
        }
        Ok(())
    }
}
