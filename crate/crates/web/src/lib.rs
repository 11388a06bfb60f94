//! WebAssembly bindings for the demo page in `www/`. Every export returns a
//! JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use robust_select::bench::{MeanConfig, MeanVarianceConfig, NormalBench, VarianceConfig};
use robust_select::boundary::{error_allowance, truncation_time, BoundaryParams, ErrorRule};
use robust_select::experiments::Procedure;
use robust_select::queueing::{path_cost, path_rng, simulate_path, QueueModel};
use robust_select::selection::ProcedureConfig;

fn fail(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

#[derive(Serialize)]
struct Curve {
    beta: f64,
    c: f64,
    truncation: f64,
    t: Vec<f64>,
    g: Vec<f64>,
    /// `δ·t/2`, the line that meets `g` at the truncation time.
    drift: Vec<f64>,
}

/// Boundary `g_c(t)` on `points` evenly spaced times up to 1.2 times the
/// truncation time, for the multiplicative allowance of a `k × m` problem.
pub fn boundary_curve_json(
    alpha: f64,
    k: usize,
    m: usize,
    delta: f64,
    points: usize,
) -> Result<String, String> {
    let beta =
        error_allowance(ErrorRule::Multiplicative, k, m, alpha).map_err(|e| e.to_string())?;
    let params = BoundaryParams::from_beta(beta).map_err(|e| e.to_string())?;
    let truncation = truncation_time(delta, &params).map_err(|e| e.to_string())?;
    let points = points.clamp(2, 2000);
    let t: Vec<f64> = (0..points)
        .map(|i| 1.2 * truncation * i as f64 / (points - 1) as f64)
        .collect();
    let curve = Curve {
        beta,
        c: params.c(),
        truncation,
        g: t.iter().map(|&x| params.g(x)).collect(),
        drift: t.iter().map(|&x| delta * x / 2.0).collect(),
        t,
    };
    Ok(serde_json::to_string(&curve).expect("plain data"))
}

#[wasm_bindgen]
pub fn boundary_curve(
    alpha: f64,
    k: usize,
    m: usize,
    delta: f64,
    points: usize,
) -> Result<String, JsError> {
    boundary_curve_json(alpha, k, m, delta, points).map_err(fail)
}

/// One run of a procedure on a synthetic normal bench.
#[allow(clippy::too_many_arguments)]
pub fn bench_select_json(
    k: usize,
    m: usize,
    means: &str,
    variances: &str,
    procedure: &str,
    delta: f64,
    alpha: f64,
    n0: u64,
    seed: u64,
) -> Result<String, String> {
    let means: MeanConfig = means
        .parse()
        .map_err(|e: robust_select::bench::BenchError| e.to_string())?;
    let variances: VarianceConfig = variances
        .parse()
        .map_err(|e: robust_select::bench::BenchError| e.to_string())?;
    let procedure: Procedure = procedure.parse()?;
    let cfg = MeanVarianceConfig::standard(means, variances, k, m).map_err(|e| e.to_string())?;
    let good = cfg.good_alternatives(delta);
    let rule = if procedure == Procedure::T {
        ErrorRule::Additive
    } else {
        ErrorRule::Multiplicative
    };
    let pc = ProcedureConfig::new(delta, alpha, n0)
        .with_rule(rule)
        .with_max_replications(1_000_000);
    let outcome = procedure
        .run(&mut NormalBench::new(cfg, seed, false), &pc)
        .map_err(|e| e.to_string())?;
    #[derive(Serialize)]
    struct Out {
        good: Vec<usize>,
        correct: bool,
        outcome: serde_json::Value,
    }
    let correct = good.contains(&outcome.selected);
    let out = Out {
        good: good.iter().map(|i| i + 1).collect(),
        correct,
        outcome: serde_json::from_str(&outcome.to_json()).expect("outcome JSON"),
    };
    Ok(serde_json::to_string(&out).expect("plain data"))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn bench_select(
    k: usize,
    m: usize,
    means: &str,
    variances: &str,
    procedure: &str,
    delta: f64,
    alpha: f64,
    n0: u32,
    seed: u32,
) -> Result<String, JsError> {
    bench_select_json(
        k,
        m,
        means,
        variances,
        procedure,
        delta,
        alpha,
        n0 as u64,
        seed as u64,
    )
    .map_err(fail)
}

#[derive(Serialize)]
struct Level {
    servers: usize,
    abandon_fraction: f64,
    mean_wait: f64,
    cost: f64,
}

#[derive(Serialize)]
struct QueueDemo {
    levels: Vec<Level>,
    /// Waits of the first customers at the cheapest level.
    sample_waits: Vec<f64>,
    best: usize,
}

/// Costs of staffing levels `from..=to` on common random numbers, for
/// lognormal service with log-sd `sigma`.
pub fn queue_levels_json(
    sigma: f64,
    from: usize,
    to: usize,
    customers: usize,
    seed: u64,
) -> Result<String, String> {
    if from == 0 || to < from || to > 200 {
        return Err(format!("staffing range {from}..={to} is not valid"));
    }
    if !(1..=200_000).contains(&customers) {
        return Err("customers must lie in 1..=200000".into());
    }
    let mut levels = Vec::new();
    let mut paths = Vec::new();
    for s in from..=to {
        let model = QueueModel {
            customers,
            ..QueueModel::paper_sec6(sigma, s)
        };
        model.validate().map_err(|e| e.to_string())?;
        let stats = simulate_path(&model, &model.service, &mut path_rng(seed, 0, 0));
        let summary = stats.summary();
        let served = summary.customers - summary.abandon_count;
        levels.push(Level {
            servers: s,
            abandon_fraction: summary.abandon_count as f64 / summary.customers as f64,
            mean_wait: if served > 0 {
                summary.served_wait_sum / served as f64
            } else {
                0.0
            },
            cost: path_cost(&summary, s, &model.cost).value,
        });
        paths.push(stats.waits);
    }
    let best = (0..levels.len())
        .min_by(|&a, &b| levels[a].cost.total_cmp(&levels[b].cost))
        .expect("at least one level");
    let demo = QueueDemo {
        sample_waits: paths[best].iter().take(300).copied().collect(),
        best: levels[best].servers,
        levels,
    };
    Ok(serde_json::to_string(&demo).expect("plain data"))
}

#[wasm_bindgen]
pub fn queue_levels(
    sigma: f64,
    from: usize,
    to: usize,
    customers: usize,
    seed: u32,
) -> Result<String, JsError> {
    queue_levels_json(sigma, from, to, customers, seed as u64).map_err(fail)
}
