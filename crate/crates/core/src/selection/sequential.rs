//! Fully sequential procedure with simultaneous elimination of alternatives.

use super::{
    argmin_by, Driver, EliminationEvent, EliminationKind, Participant, ProcedureConfig,
    SelectionError, SelectionOutcome, StopReason,
};
use crate::boundary::{error_allowance, BoundaryParams, ErrorRule};
use crate::sampler::{Sampler, SystemId};

/// Runs the sequential procedure.
///
/// Each iteration first screens the systems of every surviving alternative
/// against each other (inner layer), then compares surviving alternatives
/// through their worst-case sample means widened by the inner radius
/// `C_i(n)` (outer layer). Both layers decide on statistics frozen at the
/// start of the layer. The run stops when one alternative is left or when
/// every surviving pair satisfies `τ*·(δ − C) ≥ g_c(τ*)` for both sides.
pub fn run_sequential<S: Sampler + ?Sized>(
    sampler: &mut S,
    config: &ProcedureConfig,
) -> Result<SelectionOutcome, SelectionError> {
    config.validate()?;
    if config.rule != ErrorRule::Multiplicative {
        return Err(SelectionError::Config(
            "the sequential procedure requires the multiplicative error rule".into(),
        ));
    }
    let mut driver = Driver::new(sampler, config.retain_samples)?;
    let (k, m) = (driver.k(), driver.m());
    let all: Vec<usize> = (0..k * m).collect();
    for r in 0..config.n0 {
        driver.step(r, &all)?;
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
    let delta = config.delta;
    let mut alive: Vec<usize> = (0..k).collect();
    let mut systems: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..m).map(|j| i * m + j).collect())
        .collect();
    let mut trace = Vec::new();
    let mut n = config.n0;
    let mut radius = vec![0.0; k];
    let mut worst = vec![0.0; k];
    let mut flat: Vec<usize> = Vec::with_capacity(k * m);

    loop {
        let table = &driver.table;

        // Inner layer.
        for &i in &alive {
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
            debug_assert!(
                !keep.is_empty(),
                "inner screening removed every system of alternative {i}"
            );
            systems[i] = keep;
        }

        // Outer layer.
        for &i in &alive {
            let set = &systems[i];
            let mut c = 0.0f64;
            for (x, &a) in set.iter().enumerate() {
                for &b in &set[x + 1..] {
                    c = c.max(params.radius(table.tau(a, b)));
                }
            }
            radius[i] = c;
            worst[i] = set
                .iter()
                .map(|&s| table.mean(s))
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let cross_tau = |i: usize, ip: usize| {
            let mut t = f64::INFINITY;
            for &a in &systems[i] {
                for &b in &systems[ip] {
                    t = t.min(table.tau(a, b));
                }
            }
            t
        };
        let mut victims: Vec<(usize, usize)> = Vec::new();
        for &i in &alive {
            let eliminator = alive.iter().copied().find(|&ip| {
                ip != i && params.exceeds(cross_tau(i, ip), worst[i] - worst[ip] - radius[i])
            });
            if let Some(ip) = eliminator {
                victims.push((i, ip));
            }
        }
        // Mutual elimination needs W_{ii'} > C_i ≥ 0 and W_{i'i} > C_{i'} ≥ 0
        // at once, which cannot happen; the guard only keeps the run well
        // defined should rounding ever produce it.
        let mutual: Vec<usize> = victims
            .iter()
            .filter(|&&(v, e)| victims.iter().any(|&(v2, e2)| v2 == e && e2 == v))
            .filter(|&&(v, e)| worst[v] < worst[e] || (worst[v] == worst[e] && v < e))
            .map(|&(v, _)| v)
            .collect();
        debug_assert!(mutual.is_empty(), "mutual outer elimination at n = {n}");
        victims.retain(|(v, _)| !mutual.contains(v));
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

        let choose = |alive: &[usize]| {
            argmin_by(alive.iter().map(|&i| (i, worst[i]))).expect("survivors remain")
        };
        if alive.len() == 1 {
            let selected = alive[0];
            return Ok(driver.finish(selected, StopReason::SingleSurvivor, trace));
        }

        let mut closed = true;
        'pairs: for (x, &i) in alive.iter().enumerate() {
            for &ip in &alive[x + 1..] {
                let t = cross_tau(i, ip);
                if !(params.reaches(t, delta - radius[i]) && params.reaches(t, delta - radius[ip]))
                {
                    closed = false;
                    break 'pairs;
                }
            }
        }
        if closed {
            for (x, &i) in alive.iter().enumerate() {
                for &ip in &alive[x + 1..] {
                    let d = params.radius(cross_tau(i, ip));
                    let slack = 1e-9 * delta;
                    assert!(
                        radius[i] + d <= delta + slack && radius[ip] + d <= delta + slack,
                        "closure without C + D ≤ δ for alternatives {i}, {ip}"
                    );
                }
            }
            let selected = choose(&alive);
            return Ok(driver.finish(selected, StopReason::IzClosure, trace));
        }

        if n >= config.max_replications {
            let selected = choose(&alive);
            return Ok(driver.finish(selected, StopReason::Truncation, trace));
        }

        flat.clear();
        for &i in &alive {
            flat.extend_from_slice(&systems[i]);
        }
        driver.step(n, &flat)?;
        n += 1;
    }
}
