//! The simulation interface the selection procedures draw from.

use std::fmt;

use thiserror::Error;

/// System `(alternative, scenario)`, zero-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemId {
    pub alternative: usize,
    pub scenario: usize,
}

impl SystemId {
    pub fn new(alternative: usize, scenario: usize) -> Self {
        SystemId {
            alternative,
            scenario,
        }
    }

    /// Row-major flat index into a `k × m` grid.
    #[inline]
    pub fn flat(&self, m: usize) -> usize {
        self.alternative * m + self.scenario
    }

    #[inline]
    pub fn from_flat(index: usize, m: usize) -> Self {
        SystemId {
            alternative: index / m,
            scenario: index % m,
        }
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.alternative + 1, self.scenario + 1)
    }
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("replication {replication} of system {system} is not available")]
    Exhausted { system: SystemId, replication: u64 },
    #[error("system {system} produced a non-finite output at replication {replication}")]
    NonFinite { system: SystemId, replication: u64 },
    #[error("sampler failure: {0}")]
    Failed(String),
}

/// Source of simulation outputs for a `k × m` grid of systems.
///
/// `draw(r, systems, out)` fills `out[i]` with replication `r` (zero-based)
/// of `systems[i]`. Every system's replication `r` is requested at most once
/// and in increasing `r`, so stateful per-system streams are allowed.
/// Implementations must be deterministic given their seed and keep
/// per-system streams independent of which other systems are requested,
/// so that eliminations never perturb the survivors' draws.
pub trait Sampler {
    fn alternatives(&self) -> usize;

    fn scenarios(&self) -> usize;

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError>;
}

impl<S: Sampler + ?Sized> Sampler for &mut S {
    fn alternatives(&self) -> usize {
        (**self).alternatives()
    }

    fn scenarios(&self) -> usize {
        (**self).scenarios()
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        (**self).draw(replication, systems, out)
    }
}

impl<S: Sampler + ?Sized> Sampler for Box<S> {
    fn alternatives(&self) -> usize {
        (**self).alternatives()
    }

    fn scenarios(&self) -> usize {
        (**self).scenarios()
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        (**self).draw(replication, systems, out)
    }
}

/// Pre-recorded outputs: `data[flat system index][replication]`.
#[derive(Clone, Debug)]
pub struct RecordedSampler {
    k: usize,
    m: usize,
    data: Vec<Vec<f64>>,
}

impl RecordedSampler {
    pub fn new(k: usize, m: usize, data: Vec<Vec<f64>>) -> Result<Self, SampleError> {
        if data.len() != k * m {
            return Err(SampleError::Failed(format!(
                "expected {} recorded systems, got {}",
                k * m,
                data.len()
            )));
        }
        Ok(RecordedSampler { k, m, data })
    }

    /// Shortest recorded stream.
    pub fn min_len(&self) -> usize {
        self.data.iter().map(Vec::len).min().unwrap_or(0)
    }

    pub fn series(&self, system: SystemId) -> &[f64] {
        &self.data[system.flat(self.m)]
    }
}

impl Sampler for RecordedSampler {
    fn alternatives(&self) -> usize {
        self.k
    }

    fn scenarios(&self) -> usize {
        self.m
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        for (slot, &sys) in out.iter_mut().zip(systems) {
            *slot = *self.data[sys.flat(self.m)]
                .get(replication as usize)
                .ok_or(SampleError::Exhausted {
                    system: sys,
                    replication,
                })?;
        }
        Ok(())
    }
}

/// Wraps a sampler and records every replication it hands out.
pub struct RecordingSampler<S> {
    inner: S,
    log: Vec<Vec<f64>>,
}

impl<S: Sampler> RecordingSampler<S> {
    pub fn new(inner: S) -> Self {
        let n = inner.alternatives() * inner.scenarios();
        RecordingSampler {
            inner,
            log: vec![Vec::new(); n],
        }
    }

    pub fn into_log(self) -> Vec<Vec<f64>> {
        self.log
    }
}

impl<S: Sampler> Sampler for RecordingSampler<S> {
    fn alternatives(&self) -> usize {
        self.inner.alternatives()
    }

    fn scenarios(&self) -> usize {
        self.inner.scenarios()
    }

    fn draw(
        &mut self,
        replication: u64,
        systems: &[SystemId],
        out: &mut [f64],
    ) -> Result<(), SampleError> {
        self.inner.draw(replication, systems, out)?;
        let m = self.inner.scenarios();
        for (&sys, &v) in systems.iter().zip(out.iter()) {
            let series = &mut self.log[sys.flat(m)];
            debug_assert_eq!(series.len() as u64, replication);
            series.push(v);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recorded_sampler_replays_and_exhausts() {
        let mut s = RecordedSampler::new(1, 2, vec![vec![1.0, 2.0], vec![3.0]]).unwrap();
        let mut out = [0.0; 2];
        s.draw(0, &[SystemId::new(0, 0), SystemId::new(0, 1)], &mut out)
            .unwrap();
        assert_eq!(out, [1.0, 3.0]);
        let err = s
            .draw(1, &[SystemId::new(0, 1)], &mut out[..1])
            .unwrap_err();
        assert!(matches!(err, SampleError::Exhausted { replication: 1, .. }));
    }

    #[test]
    fn flat_index_round_trips() {
        for idx in 0..12 {
            assert_eq!(SystemId::from_flat(idx, 4).flat(4), idx);
        }
        assert_eq!(SystemId::new(1, 2).to_string(), "(2, 3)");
    }
}
