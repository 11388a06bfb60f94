//! Robust selection-of-the-best procedures.
//!
//! Each alternative `i` is judged by its worst-case mean `max_j μ_ij` over the
//! scenarios `j`; the procedures select the alternative whose worst-case
//! mean is smallest.

mod sequential;
mod table;
mod two_stage;
mod vanilla;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{BoundaryError, ErrorRule};
use crate::sampler::{SampleError, Sampler, SystemId};
use crate::stats::StatsError;

pub use sequential::run_sequential;
pub use table::SystemTable;
pub use two_stage::run_two_stage;
pub use vanilla::run_vanilla;

/// Default cap on per-system replications for the sequential procedures.
pub const DEFAULT_MAX_REPLICATIONS: u64 = 10_000_000;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("required sample size for pair {a} vs {b} exceeds the limit of {limit} replications ({detail})")]
    Resource {
        a: SystemId,
        b: SystemId,
        limit: u64,
        detail: String,
    },
}

/// Parameters shared by the three procedures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcedureConfig {
    /// Indifference-zone parameter δ.
    pub delta: f64,
    /// Target error probability; PCS target is `1 − α`.
    pub alpha: f64,
    /// First-stage sample size.
    pub n0: u64,
    /// Error-allocation rule. Only the two-stage procedure accepts `Additive`.
    pub rule: ErrorRule,
    /// Per-system replication cap. The sequential procedures stop with
    /// [`StopReason::Truncation`] at the cap; the two-stage procedure fails
    /// with a resource error if its total sample size exceeds it.
    pub max_replications: u64,
    /// Keep every raw output in the returned table.
    pub retain_samples: bool,
}

impl ProcedureConfig {
    pub fn new(delta: f64, alpha: f64, n0: u64) -> Self {
        ProcedureConfig {
            delta,
            alpha,
            n0,
            rule: ErrorRule::Multiplicative,
            max_replications: DEFAULT_MAX_REPLICATIONS,
            retain_samples: false,
        }
    }

    pub fn with_rule(mut self, rule: ErrorRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn with_max_replications(mut self, cap: u64) -> Self {
        self.max_replications = cap;
        self
    }

    pub fn with_retained_samples(mut self, retain: bool) -> Self {
        self.retain_samples = retain;
        self
    }

    fn validate(&self) -> Result<(), SelectionError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(SelectionError::Config(format!(
                "delta must be > 0, got {}",
                self.delta
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(SelectionError::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.n0 < 2 {
            return Err(SelectionError::Config(format!(
                "n0 must be at least 2, got {}",
                self.n0
            )));
        }
        if self.max_replications < self.n0 {
            return Err(SelectionError::Config(format!(
                "replication cap {} is below n0 = {}",
                self.max_replications, self.n0
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    SingleSurvivor,
    IzClosure,
    TwoStageComplete,
    Truncation,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::SingleSurvivor => "single_survivor",
            StopReason::IzClosure => "iz_closure",
            StopReason::TwoStageComplete => "two_stage_complete",
            StopReason::Truncation => "truncation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EliminationKind {
    Inner,
    Outer,
}

/// A system, or a whole alternative when `scenario` is `None`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Participant {
    pub alternative: usize,
    pub scenario: Option<usize>,
}

impl Participant {
    pub fn system(s: SystemId) -> Self {
        Participant {
            alternative: s.alternative,
            scenario: Some(s.scenario),
        }
    }

    pub fn alternative(i: usize) -> Self {
        Participant {
            alternative: i,
            scenario: None,
        }
    }
}

/// One elimination: `victim` was removed at per-system replication count `n`
/// because of `eliminator`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct EliminationEvent {
    pub n: u64,
    pub kind: EliminationKind,
    pub victim: Participant,
    pub eliminator: Participant,
}

/// Result of one procedure run. Indices are zero-based in memory and
/// one-based in the JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "OutcomeRecord", try_from = "OutcomeRecord")]
pub struct SelectionOutcome {
    pub k: usize,
    pub m: usize,
    pub selected: usize,
    pub total_samples: u64,
    /// Row-major `k × m` replication counts.
    pub per_system_counts: Vec<u64>,
    pub stop_reason: StopReason,
    pub trace: Vec<EliminationEvent>,
}

impl SelectionOutcome {
    pub fn count(&self, system: SystemId) -> u64 {
        self.per_system_counts[system.flat(self.m)]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
struct ParticipantRecord {
    alternative: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    scenario: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct EventRecord {
    n: u64,
    kind: EliminationKind,
    victim: ParticipantRecord,
    eliminator: ParticipantRecord,
}

#[derive(Serialize, Deserialize)]
struct OutcomeRecord {
    selected: usize,
    total_samples: u64,
    per_system_counts: Vec<Vec<u64>>,
    stop_reason: StopReason,
    trace: Vec<EventRecord>,
}

impl From<Participant> for ParticipantRecord {
    fn from(p: Participant) -> Self {
        ParticipantRecord {
            alternative: p.alternative + 1,
            scenario: p.scenario.map(|j| j + 1),
        }
    }
}

impl TryFrom<ParticipantRecord> for Participant {
    type Error = String;

    fn try_from(p: ParticipantRecord) -> Result<Self, String> {
        if p.alternative == 0 || p.scenario == Some(0) {
            return Err("trace indices are one-based".into());
        }
        Ok(Participant {
            alternative: p.alternative - 1,
            scenario: p.scenario.map(|j| j - 1),
        })
    }
}

impl From<SelectionOutcome> for OutcomeRecord {
    fn from(o: SelectionOutcome) -> Self {
        OutcomeRecord {
            selected: o.selected + 1,
            total_samples: o.total_samples,
            per_system_counts: o
                .per_system_counts
                .chunks(o.m.max(1))
                .map(<[u64]>::to_vec)
                .collect(),
            stop_reason: o.stop_reason,
            trace: o
                .trace
                .into_iter()
                .map(|e| EventRecord {
                    n: e.n,
                    kind: e.kind,
                    victim: e.victim.into(),
                    eliminator: e.eliminator.into(),
                })
                .collect(),
        }
    }
}

impl TryFrom<OutcomeRecord> for SelectionOutcome {
    type Error = String;

    fn try_from(r: OutcomeRecord) -> Result<Self, String> {
        let k = r.per_system_counts.len();
        let m = r.per_system_counts.first().map_or(0, Vec::len);
        if k == 0 || m == 0 || r.per_system_counts.iter().any(|row| row.len() != m) {
            return Err("per_system_counts must be a non-empty rectangular k × m array".into());
        }
        if r.selected == 0 || r.selected > k {
            return Err(format!("selected must lie in 1..={k}"));
        }
        let trace = r
            .trace
            .into_iter()
            .map(|e| {
                Ok(EliminationEvent {
                    n: e.n,
                    kind: e.kind,
                    victim: e.victim.try_into()?,
                    eliminator: e.eliminator.try_into()?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        Ok(SelectionOutcome {
            k,
            m,
            selected: r.selected - 1,
            total_samples: r.total_samples,
            per_system_counts: r.per_system_counts.into_iter().flatten().collect(),
            stop_reason: r.stop_reason,
            trace,
        })
    }
}

/// Sampler wrapper that validates outputs and feeds the statistics table.
struct Driver<'a, S: Sampler + ?Sized> {
    sampler: &'a mut S,
    table: SystemTable,
    ids: Vec<SystemId>,
    buf: Vec<f64>,
}

impl<'a, S: Sampler + ?Sized> Driver<'a, S> {
    fn new(sampler: &'a mut S, retain: bool) -> Result<Self, SelectionError> {
        let (k, m) = (sampler.alternatives(), sampler.scenarios());
        if k == 0 || m == 0 {
            return Err(SelectionError::Config(format!(
                "sampler shape {k} × {m} is empty"
            )));
        }
        Ok(Driver {
            sampler,
            table: SystemTable::new(k, m, retain),
            ids: Vec::new(),
            buf: Vec::new(),
        })
    }

    fn k(&self) -> usize {
        self.table.alternatives()
    }

    fn m(&self) -> usize {
        self.table.scenarios()
    }

    fn fetch(&mut self, replication: u64, systems: &[usize]) -> Result<(), SelectionError> {
        let m = self.m();
        self.ids.clear();
        self.ids
            .extend(systems.iter().map(|&s| SystemId::from_flat(s, m)));
        self.buf.clear();
        self.buf.resize(systems.len(), 0.0);
        self.sampler.draw(replication, &self.ids, &mut self.buf)?;
        if let Some(pos) = self.buf.iter().position(|v| !v.is_finite()) {
            return Err(SampleError::NonFinite {
                system: self.ids[pos],
                replication,
            }
            .into());
        }
        Ok(())
    }

    /// Draws replication `replication` of `systems` and updates every pair
    /// among them.
    fn step(&mut self, replication: u64, systems: &[usize]) -> Result<(), SelectionError> {
        self.fetch(replication, systems)?;
        self.table.record(systems, &self.buf);
        Ok(())
    }

    /// Draws without updating pair statistics.
    fn step_systems(&mut self, replication: u64, systems: &[usize]) -> Result<(), SelectionError> {
        self.fetch(replication, systems)?;
        self.table.record_systems(systems, &self.buf);
        Ok(())
    }

    fn finish(
        self,
        selected: usize,
        stop_reason: StopReason,
        trace: Vec<EliminationEvent>,
    ) -> SelectionOutcome {
        let counts = self.table.counts().to_vec();
        SelectionOutcome {
            k: self.table.alternatives(),
            m: self.table.scenarios(),
            selected,
            total_samples: counts.iter().sum(),
            per_system_counts: counts,
            stop_reason,
            trace,
        }
    }
}

/// Index of the smallest value; the first one wins ties.
pub(crate) fn argmin_by<I: IntoIterator<Item = (usize, f64)>>(items: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Index of the largest value; the first one wins ties.
pub(crate) fn argmax_by<I: IntoIterator<Item = (usize, f64)>>(items: I) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in items {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}
