//! Two-layer baseline: a truncated sequential screen per layer, run one
//! layer after the other.

use super::{
    argmax_by, argmin_by, Driver, EliminationEvent, EliminationKind, Participant, ProcedureConfig,
    SelectionError, SelectionOutcome, StopReason,
};
use crate::boundary::{error_allowance, truncation_time, BoundaryParams, ErrorRule};
use crate::sampler::{Sampler, SystemId};

/// Runs the two-layer baseline.
///
/// Phase 1 screens the systems of every alternative for the largest mean,
/// all alternatives sampling in lockstep; alternative `i` stops on its own
/// once one system is left or every surviving pair has `τ ≥ T*`, where
/// `T*·δ/2 = g_c(T*)`. Its representative is the surviving system with the
/// largest sample mean. Phase 2 starts once every alternative has stopped:
/// representatives are topped up to the common count and screened for the
/// smallest mean with the same boundary and truncation rule.
///
/// Stops caused by `τ ≥ T*` are reported as [`StopReason::IzClosure`].
pub fn run_vanilla<S: Sampler + ?Sized>(
    sampler: &mut S,
    config: &ProcedureConfig,
) -> Result<SelectionOutcome, SelectionError> {
    config.validate()?;
    if config.rule != ErrorRule::Multiplicative {
        return Err(SelectionError::Config(
            "the vanilla procedure requires the multiplicative error rule".into(),
        ));
    }
    let mut driver = Driver::new(sampler, true)?;
    let (k, m) = (driver.k(), driver.m());
    for r in 0..config.n0 {
        for i in 0..k {
            let block: Vec<usize> = (i * m..(i + 1) * m).collect();
            driver.step(r, &block)?;
        }
    }
    if k == 1 {
        return Ok(driver.finish(0, StopReason::SingleSurvivor, Vec::new()));
    }

    let params = BoundaryParams::from_beta(error_allowance(
        ErrorRule::Multiplicative,
        k,
        m,
        config.alpha,
    )?)?;
    let t_star = truncation_time(config.delta, &params)?;
    let mut trace = Vec::new();
    let mut n = config.n0;
    let mut systems: Vec<Vec<usize>> = (0..k).map(|i| (i * m..(i + 1) * m).collect()).collect();
    let mut rep: Vec<Option<usize>> = vec![None; k];

    // Phase 1: inner screening, maximizing.
    loop {
        let table = &driver.table;
        for i in 0..k {
            if rep[i].is_some() {
                continue;
            }
            let snapshot = &systems[i];
            let mut keep = Vec::with_capacity(snapshot.len());
            for &s in snapshot {
                let eliminator = snapshot
                    .iter()
                    .copied()
                    .find(|&t| t != s && params.reaches(table.tau(t, s), table.diff_mean(t, s)));
                match eliminator {
                    Some(t) => trace.push(EliminationEvent {
                        n,
                        kind: EliminationKind::Inner,
                        victim: Participant::system(SystemId::from_flat(s, m)),
                        eliminator: Participant::system(SystemId::from_flat(t, m)),
                    }),
                    None => keep.push(s),
                }
            }
            let settled = keep.len() == 1
                || keep
                    .iter()
                    .enumerate()
                    .all(|(x, &a)| keep[x + 1..].iter().all(|&b| table.tau(a, b) >= t_star));
            if settled {
                rep[i] = argmax_by(keep.iter().map(|&s| (s, table.mean(s))));
            }
            systems[i] = keep;
        }
        if rep.iter().all(Option::is_some) {
            break;
        }
        if n >= config.max_replications {
            let table = &driver.table;
            let selected = argmin_by((0..k).map(|i| {
                let worst = systems[i]
                    .iter()
                    .map(|&s| table.mean(s))
                    .fold(f64::NEG_INFINITY, f64::max);
                (i, worst)
            }))
            .expect("k ≥ 2");
            return Ok(driver.finish(selected, StopReason::Truncation, trace));
        }
        for i in 0..k {
            if rep[i].is_none() {
                let block = systems[i].clone();
                driver.step(n, &block)?;
            }
        }
        n += 1;
    }

    // Phase 2: outer screening on the representatives, minimizing.
    let reps: Vec<usize> = rep
        .into_iter()
        .map(|r| r.expect("all alternatives settled"))
        .collect();
    let start = reps
        .iter()
        .map(|&s| driver.table.count(s))
        .min()
        .unwrap_or(n);
    for r in start..n {
        let lagging: Vec<usize> = reps
            .iter()
            .copied()
            .filter(|&s| driver.table.count(s) == r)
            .collect();
        driver.step_systems(r, &lagging)?;
    }
    for (x, &a) in reps.iter().enumerate() {
        for &b in &reps[x + 1..] {
            driver.table.rebuild_pair(a, b);
        }
    }

    let mut alive: Vec<usize> = (0..k).collect();
    loop {
        let table = &driver.table;
        let mut victims = Vec::new();
        for &i in &alive {
            let eliminator = alive.iter().copied().find(|&ip| {
                ip != i
                    && params.reaches(
                        table.tau(reps[i], reps[ip]),
                        table.diff_mean(reps[i], reps[ip]),
                    )
            });
            if let Some(ip) = eliminator {
                victims.push((i, ip));
            }
        }
        for &(v, e) in &victims {
            trace.push(EliminationEvent {
                n,
                kind: EliminationKind::Outer,
                victim: Participant::alternative(v),
                eliminator: Participant::alternative(e),
            });
        }
        alive.retain(|i| !victims.iter().any(|&(v, _)| v == *i));
        debug_assert!(!alive.is_empty());

        let choose = || {
            argmin_by(alive.iter().map(|&i| (i, table.mean(reps[i])))).expect("survivors remain")
        };
        if alive.len() == 1 {
            let selected = alive[0];
            return Ok(driver.finish(selected, StopReason::SingleSurvivor, trace));
        }
        let truncated = alive.iter().enumerate().all(|(x, &i)| {
            alive[x + 1..]
                .iter()
                .all(|&ip| table.tau(reps[i], reps[ip]) >= t_star)
        });
        if truncated {
            let selected = choose();
            return Ok(driver.finish(selected, StopReason::IzClosure, trace));
        }
        if n >= config.max_replications {
            let selected = choose();
            return Ok(driver.finish(selected, StopReason::Truncation, trace));
        }
        let block: Vec<usize> = alive.iter().map(|&i| reps[i]).collect();
        driver.step(n, &block)?;
        n += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::RecordedSampler;

    #[test]
    fn single_system_returns_after_first_stage() {
        let mut s = RecordedSampler::new(1, 1, vec![vec![1.0, 2.0, 3.0]]).unwrap();
        let out = run_vanilla(&mut s, &ProcedureConfig::new(0.5, 0.05, 3)).unwrap();
        assert_eq!(out.selected, 0);
        assert_eq!(out.total_samples, 3);
    }

    #[test]
    fn well_separated_grid_picks_the_robust_alternative() {
        // Worst-case means: alternative 0 → 1, alternative 1 → 3.
        let jitter = |r: usize| 0.01 * (((r * 31) % 7) as f64 - 3.0);
        let col = |mean: f64, phase: usize| {
            (0..5000)
                .map(|r| mean + jitter(r + phase))
                .collect::<Vec<f64>>()
        };
        let data = vec![col(0.0, 0), col(1.0, 1), col(3.0, 2), col(-1.0, 3)];
        let mut s = RecordedSampler::new(2, 2, data).unwrap();
        let out = run_vanilla(&mut s, &ProcedureConfig::new(0.5, 0.05, 5)).unwrap();
        assert_eq!(out.selected, 0);
        let inner: Vec<_> = out
            .trace
            .iter()
            .filter(|e| e.kind == EliminationKind::Inner)
            .collect();
        assert_eq!(inner.len(), 2);
        assert_eq!(out.trace.last().unwrap().kind, EliminationKind::Outer);
    }
}
