//! Two-stage procedure with a common second-stage sample size.

use super::{argmin_by, Driver, ProcedureConfig, SelectionError, SelectionOutcome, StopReason};
use crate::boundary::{error_allowance, split_iz};
use crate::sampler::{Sampler, SystemId};
use crate::stats::student_t_quantile;

/// Runs the two-stage procedure.
///
/// Stage 1 takes `n0` replications of every system. The common total sample
/// size is `N = max(n0, max over pairs ⌈h²S²/δ_I²⌉ ∨ ⌈h²S²/δ_O²⌉)` with
/// `h = t_{1−β, n0−1}`, after which every system is topped up to `N` and the
/// alternative with the smallest worst-case sample mean is selected.
pub fn run_two_stage<S: Sampler + ?Sized>(
    sampler: &mut S,
    config: &ProcedureConfig,
) -> Result<SelectionOutcome, SelectionError> {
    config.validate()?;
    let mut driver = Driver::new(sampler, config.retain_samples)?;
    let (k, m) = (driver.k(), driver.m());
    let size = k * m;
    let all: Vec<usize> = (0..size).collect();

    for r in 0..config.n0 {
        driver.step(r, &all)?;
    }
    if k == 1 {
        return Ok(driver.finish(0, StopReason::TwoStageComplete, Vec::new()));
    }

    let beta = error_allowance(config.rule, k, m, config.alpha)?;
    let h = student_t_quantile(1.0 - beta, config.n0 - 1)?;
    let iz = split_iz(config.delta)?;
    let h2 = h * h;

    let mut total = config.n0;
    for a in 0..size {
        for b in a + 1..size {
            let s2 = driver.table.pair_variance(a, b);
            let need = (h2 * s2 / (iz.delta_inner * iz.delta_inner))
                .ceil()
                .max((h2 * s2 / (iz.delta_outer * iz.delta_outer)).ceil());
            if !need.is_finite() || need > config.max_replications as f64 {
                return Err(SelectionError::Resource {
                    a: SystemId::from_flat(a, m),
                    b: SystemId::from_flat(b, m),
                    limit: config.max_replications,
                    detail: format!("h = {h:.6}, S² = {s2:.6e}, required {need:.6e}"),
                });
            }
            total = total.max(need as u64);
        }
    }

    for r in config.n0..total {
        driver.step_systems(r, &all)?;
    }

    let table = &driver.table;
    let selected = argmin_by((0..k).map(|i| {
        let worst = (0..m)
            .map(|j| table.mean(i * m + j))
            .fold(f64::NEG_INFINITY, f64::max);
        (i, worst)
    }))
    .expect("k ≥ 1");
    Ok(driver.finish(selected, StopReason::TwoStageComplete, Vec::new()))
}
