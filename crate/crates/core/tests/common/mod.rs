//! Reference implementations and property checks shared by the
//! integration tests and the acceptance suite.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, Normal};
use statrs::distribution::{ContinuousCDF, StudentsT};

use robust_select::boundary::{truncation_time, BoundaryParams, ErrorRule};
use robust_select::queueing::{path_rng, simulate_path, CostParams, QueueModel};
use robust_select::sampler::{RecordedSampler, SystemId};
use robust_select::scheduling::{schedule_cost, waiting_chain};
use robust_select::selection::{
    run_sequential, run_two_stage, EliminationEvent, EliminationKind, Participant, ProcedureConfig,
    SelectionOutcome, StopReason,
};
use robust_select::stats::Distribution;

// ---------------------------------------------------------------------------
// Small recorded instances.

#[derive(Clone, Debug)]
pub struct Instance {
    pub k: usize,
    pub m: usize,
    /// Flat row-major series, all of length `len`.
    pub data: Vec<Vec<f64>>,
    pub delta: f64,
    pub alpha: f64,
    pub n0: u64,
    pub cap: u64,
    pub rule: ErrorRule,
}

impl Instance {
    pub fn sampler(&self) -> RecordedSampler {
        RecordedSampler::new(self.k, self.m, self.data.clone()).unwrap()
    }

    pub fn config(&self) -> ProcedureConfig {
        ProcedureConfig::new(self.delta, self.alpha, self.n0)
            .with_rule(self.rule)
            .with_max_replications(self.cap)
    }

    pub fn flat(&self, i: usize, j: usize) -> usize {
        i * self.m + j
    }
}

/// A random instance with `k, m ≤ 3` and `len` recorded replications.
/// Values sit on a grid of quarters so that shifts by integers are exact.
pub fn random_instance(seed: u64, len: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = rng.random_range(1..=3);
    let m = rng.random_range(1..=3);
    let spread = [0.0, 0.25, 0.5, 1.0, 2.0][rng.random_range(0..5)];
    let mut data = Vec::new();
    for _ in 0..k * m {
        let mu = spread * rng.random_range(-4..=4) as f64;
        let sd = [0.25, 0.5, 1.0, 2.0][rng.random_range(0..4)];
        let normal = Normal::new(mu, sd).unwrap();
        data.push(
            (0..len)
                .map(|_| (normal.sample(&mut rng) * 4.0).round() / 4.0)
                .collect::<Vec<f64>>(),
        );
    }
    // Occasionally clone a series so that some differences are constant.
    if k * m > 1 && rng.random_bool(0.15) {
        let src = rng.random_range(0..k * m);
        let dst = (src + 1) % (k * m);
        let offset = rng.random_range(-2..=2) as f64;
        data[dst] = data[src].iter().map(|v| v + offset).collect();
    }
    Instance {
        k,
        m,
        data,
        delta: [0.1, 0.25, 0.5, 1.0, 2.0][rng.random_range(0..5)],
        alpha: [0.05, 0.1, 0.2][rng.random_range(0..3)],
        n0: rng.random_range(2..=8),
        cap: len as u64,
        rule: if rng.random_bool(0.5) {
            ErrorRule::Multiplicative
        } else {
            ErrorRule::Additive
        },
    }
}

// ---------------------------------------------------------------------------
// Brute-force procedures recomputing everything from the raw prefix.

fn mean_of(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// `(mean of x_a − x_b, τ = n/S²)` over the first `n` values.
fn pair_stats(data: &[Vec<f64>], a: usize, b: usize, n: usize) -> (f64, f64) {
    let d: Vec<f64> = (0..n).map(|r| data[a][r] - data[b][r]).collect();
    let dm = mean_of(&d);
    let var = d.iter().map(|v| (v - dm).powi(2)).sum::<f64>() / (n - 1) as f64;
    let tau = if var == 0.0 {
        f64::INFINITY
    } else {
        n as f64 / var
    };
    (dm, tau)
}

fn g(c: f64, t: f64) -> f64 {
    ((c + t.ln_1p()) * (t + 1.0)).sqrt()
}

fn crosses(c: f64, t: f64, x: f64, strict: bool) -> bool {
    if t.is_infinite() {
        x > 0.0
    } else if strict {
        t * x > g(c, t)
    } else {
        t * x >= g(c, t)
    }
}

fn half_width(c: f64, t: f64) -> f64 {
    if t.is_infinite() {
        0.0
    } else {
        g(c, t) / t
    }
}

pub fn brute_sequential(inst: &Instance) -> SelectionOutcome {
    let (k, m) = (inst.k, inst.m);
    let mut counts = vec![inst.n0; k * m];
    if k == 1 {
        return SelectionOutcome {
            k,
            m,
            selected: 0,
            total_samples: counts.iter().sum(),
            per_system_counts: counts,
            stop_reason: StopReason::SingleSurvivor,
            trace: Vec::new(),
        };
    }
    let beta = inst.alpha / (k * m - 1) as f64;
    let c = -2.0 * (2.0 * beta).ln();
    let mut alive: Vec<usize> = (0..k).collect();
    let mut sets: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..m).map(|j| inst.flat(i, j)).collect())
        .collect();
    let mut trace = Vec::new();
    let mut n = inst.n0 as usize;
    let sys = |s: usize| Participant::system(SystemId::from_flat(s, m));
    loop {
        let means: Vec<f64> = inst.data.iter().map(|x| mean_of(&x[..n])).collect();
        for &i in &alive {
            let before = sets[i].clone();
            let mut after = Vec::new();
            for &s in &before {
                let hit = before.iter().copied().find(|&t| {
                    t != s && {
                        let (dm, tau) = pair_stats(&inst.data, t, s, n);
                        crosses(c, tau, dm, false)
                    }
                });
                match hit {
                    Some(t) => {
                        counts[s] = n as u64;
                        trace.push(EliminationEvent {
                            n: n as u64,
                            kind: EliminationKind::Inner,
                            victim: sys(s),
                            eliminator: sys(t),
                        });
                    }
                    None => after.push(s),
                }
            }
            sets[i] = after;
        }
        let mut cw = vec![0.0; k];
        let mut worst = vec![0.0; k];
        for &i in &alive {
            let mut widest = 0.0f64;
            for &a in &sets[i] {
                for &b in &sets[i] {
                    if a < b {
                        widest = widest.max(half_width(c, pair_stats(&inst.data, a, b, n).1));
                    }
                }
            }
            cw[i] = widest;
            worst[i] = sets[i]
                .iter()
                .map(|&s| means[s])
                .fold(f64::NEG_INFINITY, f64::max);
        }
        let min_tau = |i: usize, ip: usize| {
            let mut t = f64::INFINITY;
            for &a in &sets[i] {
                for &b in &sets[ip] {
                    t = t.min(pair_stats(&inst.data, a, b, n).1);
                }
            }
            t
        };
        let mut out = Vec::new();
        for &i in &alive {
            if let Some(ip) = alive.iter().copied().find(|&ip| {
                ip != i && crosses(c, min_tau(i, ip), worst[i] - worst[ip] - cw[i], true)
            }) {
                out.push((i, ip));
            }
        }
        for &(v, e) in &out {
            for &s in &sets[v] {
                counts[s] = n as u64;
            }
            trace.push(EliminationEvent {
                n: n as u64,
                kind: EliminationKind::Outer,
                victim: Participant::alternative(v),
                eliminator: Participant::alternative(e),
            });
        }
        alive.retain(|i| !out.iter().any(|&(v, _)| v == *i));
        let pick = |alive: &[usize]| {
            let mut best = alive[0];
            for &i in alive {
                if worst[i] < worst[best] {
                    best = i;
                }
            }
            best
        };
        let finish = |selected: usize,
                      stop: StopReason,
                      counts: Vec<u64>,
                      trace: Vec<EliminationEvent>| SelectionOutcome {
            k,
            m,
            selected,
            total_samples: counts.iter().sum(),
            per_system_counts: counts,
            stop_reason: stop,
            trace,
        };
        if alive.len() == 1 {
            return finish(alive[0], StopReason::SingleSurvivor, counts, trace);
        }
        let closed = alive.iter().all(|&i| {
            alive.iter().all(|&ip| {
                ip == i || {
                    let t = min_tau(i, ip);
                    crosses(c, t, inst.delta - cw[i], false)
                        && crosses(c, t, inst.delta - cw[ip], false)
                }
            })
        });
        if closed {
            return finish(pick(&alive), StopReason::IzClosure, counts, trace);
        }
        if n as u64 >= inst.cap {
            return finish(pick(&alive), StopReason::Truncation, counts, trace);
        }
        n += 1;
        for &i in &alive {
            for &s in &sets[i] {
                counts[s] = n as u64;
            }
        }
    }
}

/// `Err(())` when the required sample size exceeds the cap.
pub fn brute_two_stage(inst: &Instance) -> Result<SelectionOutcome, ()> {
    let (k, m) = (inst.k, inst.m);
    let size = k * m;
    let n0 = inst.n0 as usize;
    if k == 1 {
        let counts = vec![inst.n0; size];
        return Ok(SelectionOutcome {
            k,
            m,
            selected: 0,
            total_samples: counts.iter().sum(),
            per_system_counts: counts,
            stop_reason: StopReason::TwoStageComplete,
            trace: Vec::new(),
        });
    }
    let comparisons = match inst.rule {
        ErrorRule::Multiplicative => k * m - 1,
        ErrorRule::Additive => k + m - 2,
    };
    let beta = inst.alpha / comparisons as f64;
    let h = StudentsT::new(0.0, 1.0, (n0 - 1) as f64)
        .unwrap()
        .inverse_cdf(1.0 - beta);
    let half = inst.delta / 2.0;
    let mut big_n = n0;
    for a in 0..size {
        for b in a + 1..size {
            let d: Vec<f64> = (0..n0).map(|r| inst.data[a][r] - inst.data[b][r]).collect();
            let dm = mean_of(&d);
            let s2 = d.iter().map(|v| (v - dm).powi(2)).sum::<f64>() / (n0 - 1) as f64;
            let need = (h * h * s2 / (half * half)).ceil();
            if need > inst.cap as f64 {
                return Err(());
            }
            big_n = big_n.max(need as usize);
        }
    }
    let worst: Vec<f64> = (0..k)
        .map(|i| {
            (0..m)
                .map(|j| mean_of(&inst.data[inst.flat(i, j)][..big_n]))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let mut selected = 0;
    for i in 1..k {
        if worst[i] < worst[selected] {
            selected = i;
        }
    }
    let counts = vec![big_n as u64; size];
    Ok(SelectionOutcome {
        k,
        m,
        selected,
        total_samples: counts.iter().sum(),
        per_system_counts: counts,
        stop_reason: StopReason::TwoStageComplete,
        trace: Vec::new(),
    })
}

/// Runs both procedures against the references on `count` instances and
/// returns a description of the first mismatch.
pub fn oracle_equivalence(count: u64, base_seed: u64) -> Result<(), String> {
    for seed in base_seed..base_seed + count {
        let mut inst = random_instance(seed, 50);
        let t_lib = run_two_stage(&mut inst.sampler(), &inst.config());
        match (t_lib, brute_two_stage(&inst)) {
            (Ok(a), Ok(b)) if a == b => {}
            (Err(_), Err(())) => {}
            (a, b) => return Err(format!("two-stage mismatch on seed {seed}: {a:?} vs {b:?}")),
        }
        inst.rule = ErrorRule::Multiplicative;
        let s_lib = run_sequential(&mut inst.sampler(), &inst.config())
            .map_err(|e| format!("seed {seed}: {e}"))?;
        let s_ref = brute_sequential(&inst);
        if s_lib != s_ref {
            return Err(format!(
                "sequential mismatch on seed {seed}:\n{s_lib:?}\nvs\n{s_ref:?}"
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Student t quantile by quadrature.

const GL_X: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_W: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut s = 0.0;
    for (x, w) in GL_X.iter().zip(GL_W) {
        s += w * (f(mid - half * x) + f(mid + half * x));
    }
    s * half
}

fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss8(f, a, mid);
    let right = gauss8(f, mid, b);
    let both = left + right;
    if depth == 0 || (both - whole).abs() <= tol {
        return both;
    }
    adaptive(f, a, mid, left, tol / 2.0, depth - 1)
        + adaptive(f, mid, b, right, tol / 2.0, depth - 1)
}

/// `P(T > x)` for `x > 0`, integrating the density over `t = x/s`,
/// `s ∈ (0, 1]`, which keeps the integration range finite.
fn t_tail(x: f64, df: f64) -> f64 {
    let ln_norm = statrs::function::gamma::ln_gamma((df + 1.0) / 2.0)
        - statrs::function::gamma::ln_gamma(df / 2.0)
        - 0.5 * (df * std::f64::consts::PI).ln();
    let density = |t: f64| (ln_norm - 0.5 * (df + 1.0) * (t * t / df).ln_1p()).exp();
    let f = move |s: f64| {
        let t = x / s;
        density(t) * x / (s * s)
    };
    let rough = gauss8(&f, 0.0, 1.0);
    adaptive(&f, 0.0, 1.0, rough, 1e-14 * rough, 30)
}

/// Upper quantile by bisection on the quadrature tail.
pub fn t_quantile_by_quadrature(p: f64, df: f64) -> f64 {
    assert!(p > 0.5);
    let target = 1.0 - p;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while t_tail(hi, df) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if t_tail(mid, df) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// ---------------------------------------------------------------------------
// Erlang-A.

/// Long-run fraction of arrivals that abandon in M/M/s+M, from the
/// stationary law of the number in system.
pub fn erlang_a_abandon_fraction(lambda: f64, mu: f64, theta: f64, s: usize) -> f64 {
    let mut weights = vec![1.0f64];
    let mut n = 0usize;
    loop {
        n += 1;
        let death = (n.min(s) as f64) * mu + (n.saturating_sub(s) as f64) * theta;
        let w = weights[n - 1] * lambda / death;
        weights.push(w);
        if n > s && w < 1e-18 * weights.iter().sum::<f64>() {
            break;
        }
    }
    let total: f64 = weights.iter().sum();
    let queue: f64 = weights
        .iter()
        .enumerate()
        .map(|(n, w)| n.saturating_sub(s) as f64 * w)
        .sum::<f64>()
        / total;
    theta * queue / lambda
}

/// Simulated abandonment fraction over `paths` paths, dropping the first
/// `warmup` customers of each. Returns `(mean, standard error)`.
pub fn simulated_abandon_fraction(
    lambda: f64,
    mu: f64,
    theta: f64,
    s: usize,
    customers: usize,
    warmup: usize,
    paths: u64,
) -> (f64, f64) {
    let model = QueueModel {
        interarrival: Distribution::exponential_with_mean(1.0 / lambda),
        service: Distribution::exponential_with_mean(1.0 / mu),
        patience: Distribution::exponential_with_mean(1.0 / theta),
        servers: s,
        customers,
        cost: CostParams::paper_sec6(),
    };
    let fractions: Vec<f64> = (0..paths)
        .map(|r| {
            let stats = simulate_path(&model, &model.service, &mut path_rng(2024, s as u64, r));
            let kept = &stats.abandoned[warmup..];
            kept.iter().filter(|&&a| a).count() as f64 / kept.len() as f64
        })
        .collect();
    let mean = mean_of(&fractions);
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (paths - 1) as f64;
    (mean, (var / paths as f64).sqrt())
}

pub const ERLANG_A_CASES: [(f64, f64, f64, usize); 3] = [
    (10.0, 1.0, 0.2, 10),
    (10.0, 1.0, 1.0, 8),
    (4.0, 0.5, 0.5, 9),
];

// ---------------------------------------------------------------------------
// Property checks, each runnable with a given number of cases.

fn instance_strategy() -> impl Strategy<Value = Instance> {
    (any::<u64>(), 20usize..=40).prop_map(|(seed, len)| {
        let mut s = seed;
        loop {
            let mut inst = random_instance(s, len);
            if inst.k >= 2 {
                inst.rule = ErrorRule::Multiplicative;
                return inst;
            }
            s = s.wrapping_add(0x9e37_79b9_7f4a_7c15);
        }
    })
}

fn check_shift_invariance(inst: Instance, shift: i32) -> Result<(), TestCaseError> {
    let base = run_sequential(&mut inst.sampler(), &inst.config()).unwrap();
    let shifted = Instance {
        data: inst
            .data
            .iter()
            .map(|x| x.iter().map(|v| v + shift as f64).collect())
            .collect(),
        ..inst.clone()
    };
    let moved = run_sequential(&mut shifted.sampler(), &shifted.config()).unwrap();
    prop_assert_eq!(base, moved);
    Ok(())
}

fn check_column_permutation(inst: Instance, perm_seed: u64) -> Result<(), TestCaseError> {
    let m = inst.m;
    let mut perm: Vec<usize> = (0..m).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
    for i in (1..m).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    // Scenario j of the original becomes scenario perm[j].
    let mut data = inst.data.clone();
    for i in 0..inst.k {
        for j in 0..m {
            data[i * m + perm[j]] = inst.data[i * m + j].clone();
        }
    }
    let permuted = Instance {
        data,
        ..inst.clone()
    };
    let a = run_sequential(&mut inst.sampler(), &inst.config()).unwrap();
    let b = run_sequential(&mut permuted.sampler(), &permuted.config()).unwrap();
    prop_assert_eq!(a.selected, b.selected);
    prop_assert_eq!(a.stop_reason, b.stop_reason);
    prop_assert_eq!(a.total_samples, b.total_samples);
    for i in 0..inst.k {
        for (j, &pj) in perm.iter().enumerate() {
            prop_assert_eq!(
                a.per_system_counts[i * m + j],
                b.per_system_counts[i * m + pj]
            );
        }
    }
    // Inner eliminators depend on index order, so only victims are compared.
    let relabel = |p: Participant| Participant {
        alternative: p.alternative,
        scenario: p.scenario.map(|j| perm[j]),
    };
    let mut va: Vec<(u64, Participant)> =
        a.trace.iter().map(|e| (e.n, relabel(e.victim))).collect();
    let mut vb: Vec<(u64, Participant)> = b.trace.iter().map(|e| (e.n, e.victim)).collect();
    let key = |x: &(u64, Participant)| (x.0, x.1.alternative, x.1.scenario);
    va.sort_by_key(key);
    vb.sort_by_key(key);
    prop_assert_eq!(va, vb);
    let outer_a: Vec<_> = a
        .trace
        .iter()
        .filter(|e| e.kind == EliminationKind::Outer)
        .collect();
    let outer_b: Vec<_> = b
        .trace
        .iter()
        .filter(|e| e.kind == EliminationKind::Outer)
        .collect();
    prop_assert_eq!(outer_a, outer_b);
    Ok(())
}

/// Survivor sets only shrink, counts match the trace, and every recorded
/// elimination is reproduced from the raw samples. Events of one round are
/// judged on the sets as they stood before that round.
fn check_survivor_monotonicity(inst: Instance) -> Result<(), TestCaseError> {
    let config = inst.config().with_retained_samples(true);
    let out = run_sequential(&mut inst.sampler(), &config).unwrap();
    let (k, m) = (inst.k, inst.m);
    let c = -2.0 * (2.0 * inst.alpha / (k * m - 1) as f64).ln();
    let mut sys_alive = vec![true; k * m];
    let mut alt_alive = vec![true; k];
    let mut last = (0u64, EliminationKind::Inner);
    let mut start = 0;
    while start < out.trace.len() {
        let head = out.trace[start];
        let end = start
            + out.trace[start..]
                .iter()
                .take_while(|e| e.n == head.n && e.kind == head.kind)
                .count();
        let round = &out.trace[start..end];
        prop_assert!(head.n >= inst.n0);
        let in_order = head.n > last.0 || (head.n == last.0 && last.1 == EliminationKind::Inner);
        prop_assert!(start == 0 || in_order, "trace out of order");
        let n = head.n as usize;
        match head.kind {
            EliminationKind::Inner => {
                for e in round {
                    let v = e.victim.alternative * m + e.victim.scenario.unwrap();
                    let t = e.eliminator.alternative * m + e.eliminator.scenario.unwrap();
                    prop_assert!(alt_alive[e.victim.alternative] && sys_alive[v] && sys_alive[t]);
                    prop_assert_eq!(e.victim.alternative, e.eliminator.alternative);
                    let (dm, tau) = pair_stats(&inst.data, t, v, n);
                    prop_assert!(
                        crosses(c, tau, dm, false),
                        "inner event at n={} not reproduced",
                        n
                    );
                    prop_assert_eq!(out.per_system_counts[v], e.n);
                }
                for e in round {
                    sys_alive[e.victim.alternative * m + e.victim.scenario.unwrap()] = false;
                }
            }
            EliminationKind::Outer => {
                let live = |a: usize| -> Vec<usize> {
                    (0..m)
                        .map(|j| a * m + j)
                        .filter(|&s| sys_alive[s])
                        .collect()
                };
                let worst = |set: &[usize]| {
                    set.iter()
                        .map(|&s| mean_of(&inst.data[s][..n]))
                        .fold(f64::NEG_INFINITY, f64::max)
                };
                for e in round {
                    let (i, ip) = (e.victim.alternative, e.eliminator.alternative);
                    prop_assert!(alt_alive[i] && alt_alive[ip]);
                    let si = live(i);
                    let sip = live(ip);
                    let mut ci = 0.0f64;
                    for &a in &si {
                        for &b in &si {
                            if a < b {
                                ci = ci.max(half_width(c, pair_stats(&inst.data, a, b, n).1));
                            }
                        }
                    }
                    let mut tau = f64::INFINITY;
                    for &a in &si {
                        for &b in &sip {
                            tau = tau.min(pair_stats(&inst.data, a, b, n).1);
                        }
                    }
                    prop_assert!(
                        crosses(c, tau, worst(&si) - worst(&sip) - ci, true),
                        "outer event at n={} not reproduced",
                        n
                    );
                    for &s in &si {
                        prop_assert_eq!(out.per_system_counts[s], e.n);
                    }
                }
                for e in round {
                    alt_alive[e.victim.alternative] = false;
                    for j in 0..m {
                        sys_alive[e.victim.alternative * m + j] = false;
                    }
                }
            }
        }
        last = (head.n, head.kind);
        start = end;
    }
    let survivors: Vec<usize> = (0..k).filter(|&i| alt_alive[i]).collect();
    prop_assert!(!survivors.is_empty());
    prop_assert!(survivors.contains(&out.selected));
    if out.stop_reason == StopReason::SingleSurvivor {
        prop_assert_eq!(survivors.len(), 1);
    }
    let top = *out.per_system_counts.iter().max().unwrap();
    prop_assert!(top >= last.0);
    for (s, _) in sys_alive.iter().enumerate().filter(|(_, &alive)| alive) {
        prop_assert_eq!(out.per_system_counts[s], top);
    }
    Ok(())
}

fn check_waiting_chain(
    psi_seed: u64,
    d: Vec<f64>,
    t: Vec<f64>,
    bump: f64,
    which: usize,
) -> Result<(), TestCaseError> {
    let n = d.len();
    let mut psi: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(psi_seed);
    for i in (1..n).rev() {
        psi.swap(i, rng.random_range(0..=i));
    }
    let i = which % n;
    let w = waiting_chain(&psi, &d, &t);
    prop_assert_eq!(w[0], 0.0);
    let mut d2 = d.clone();
    d2[i] += bump;
    let mut t2 = t.clone();
    t2[i] += bump;
    let wd = waiting_chain(&psi, &d2, &t);
    let wt = waiting_chain(&psi, &d, &t2);
    for x in 0..=n {
        prop_assert!(wd[x] >= w[x], "longer duration shortened a wait");
        prop_assert!(wt[x] <= w[x], "longer allowance lengthened a wait");
    }
    let sum_d: f64 = d.iter().sum();
    let sum_t: f64 = t.iter().sum();
    let cost = schedule_cost(&psi, &d, &t, 1.0, 0.5);
    prop_assert!(cost >= 0.5 * (sum_d - sum_t).max(0.0) - 1e-9 * sum_d.max(1.0));
    Ok(())
}

fn check_boundary_monotone(
    c1: f64,
    dc: f64,
    t1: f64,
    dt: f64,
    delta: f64,
) -> Result<(), TestCaseError> {
    let p1 = BoundaryParams::from_c(c1).unwrap();
    let p2 = BoundaryParams::from_c(c1 + dc).unwrap();
    let t2 = t1 + dt;
    prop_assert!(p1.g(t1) <= p1.g(t2));
    prop_assert!(p1.g(t1) <= p2.g(t1));
    if c1 > 0.0 {
        let tt = truncation_time(delta, &p1).unwrap();
        let resid = tt * delta / 2.0 - p1.g(tt);
        prop_assert!(resid.abs() < 1e-8 * p1.g(tt).max(1.0), "residual {}", resid);
    }
    Ok(())
}

pub const PROPERTY_NAMES: [&str; 5] = [
    "shift invariance",
    "column-permutation invariance",
    "survivor-set monotonicity",
    "waiting-chain monotonicity",
    "g_c monotonicity",
];

/// Runs property `index` of [`PROPERTY_NAMES`] with `cases` generated cases.
pub fn run_property(index: usize, cases: u32) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let result = match index {
        0 => runner
            .run(&(instance_strategy(), -1000i32..1000), |(inst, shift)| {
                check_shift_invariance(inst, shift)
            })
            .map_err(|e| e.to_string()),
        1 => runner
            .run(&(instance_strategy(), any::<u64>()), |(inst, s)| {
                check_column_permutation(inst, s)
            })
            .map_err(|e| e.to_string()),
        2 => runner
            .run(&instance_strategy(), check_survivor_monotonicity)
            .map_err(|e| e.to_string()),
        3 => {
            let strat = (1usize..=6).prop_flat_map(|n| {
                (
                    any::<u64>(),
                    prop::collection::vec(0.0f64..10.0, n),
                    prop::collection::vec(0.0f64..10.0, n),
                    0.0f64..5.0,
                    any::<usize>(),
                )
            });
            runner
                .run(&strat, |(s, d, t, b, w)| check_waiting_chain(s, d, t, b, w))
                .map_err(|e| e.to_string())
        }
        4 => runner
            .run(
                &(
                    0.0f64..60.0,
                    0.0f64..10.0,
                    0.0f64..1e6,
                    0.0f64..1e6,
                    0.01f64..5.0,
                ),
                |(c, dc, t, dt, delta)| check_boundary_monotone(c, dc, t, dt, delta),
            )
            .map_err(|e| e.to_string()),
        _ => panic!("unknown property {index}"),
    };
    result
}
