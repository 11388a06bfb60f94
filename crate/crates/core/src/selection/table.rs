//! Running means and paired-difference variances for a grid of systems.

/// Welford accumulator for the differences of one system pair. The mean is
/// reported as `sum/n` so that exactly tied data give exactly tied means.
#[derive(Clone, Copy, Debug, Default)]
struct PairStat {
    n: u64,
    sum: f64,
    mean: f64,
    m2: f64,
}

impl PairStat {
    #[inline]
    fn push(&mut self, d: f64) {
        self.n += 1;
        self.sum += d;
        let delta = d - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (d - self.mean);
    }
}

/// Per-system means and per-pair difference statistics over common
/// replication indices. Systems are flat row-major indices `i·m + j`.
///
/// Pair statistics are updated only for pairs that are recorded together,
/// so a pair is current as long as both systems were passed to every
/// [`SystemTable::record`] call since the pair was last rebuilt.
#[derive(Clone, Debug)]
pub struct SystemTable {
    k: usize,
    m: usize,
    counts: Vec<u64>,
    sums: Vec<f64>,
    pairs: Vec<PairStat>,
    raw: Option<Vec<Vec<f64>>>,
}

impl SystemTable {
    pub fn new(k: usize, m: usize, retain_raw: bool) -> Self {
        let size = k * m;
        SystemTable {
            k,
            m,
            counts: vec![0; size],
            sums: vec![0.0; size],
            pairs: vec![PairStat::default(); size * size.saturating_sub(1) / 2],
            raw: retain_raw.then(|| vec![Vec::new(); size]),
        }
    }

    pub fn alternatives(&self) -> usize {
        self.k
    }

    pub fn scenarios(&self) -> usize {
        self.m
    }

    #[inline]
    fn pair_index(&self, a: usize, b: usize) -> usize {
        debug_assert!(a < b);
        let size = self.k * self.m;
        a * size - a * (a + 1) / 2 + (b - a - 1)
    }

    /// Adds one replication of each listed system and updates every pair
    /// among them.
    pub fn record(&mut self, systems: &[usize], values: &[f64]) {
        self.record_systems(systems, values);
        for (x, (&a, &va)) in systems.iter().zip(values).enumerate() {
            for (&b, &vb) in systems[x + 1..].iter().zip(&values[x + 1..]) {
                let (lo, hi, d) = if a < b {
                    (a, b, va - vb)
                } else {
                    (b, a, vb - va)
                };
                let idx = self.pair_index(lo, hi);
                self.pairs[idx].push(d);
            }
        }
    }

    /// Adds one replication of each listed system without touching pairs.
    pub fn record_systems(&mut self, systems: &[usize], values: &[f64]) {
        debug_assert_eq!(systems.len(), values.len());
        for (&s, &v) in systems.iter().zip(values) {
            self.counts[s] += 1;
            self.sums[s] += v;
            if let Some(raw) = self.raw.as_mut() {
                raw[s].push(v);
            }
        }
    }

    /// Recomputes the statistics of pair `(a, b)` from retained raw samples
    /// over their common replications.
    ///
    /// # Panics
    /// If raw samples are not retained.
    pub fn rebuild_pair(&mut self, a: usize, b: usize) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let raw = self
            .raw
            .as_ref()
            .expect("rebuild_pair requires retained samples");
        let mut stat = PairStat::default();
        for (x, y) in raw[lo].iter().zip(&raw[hi]) {
            stat.push(x - y);
        }
        let idx = self.pair_index(lo, hi);
        self.pairs[idx] = stat;
    }

    pub fn count(&self, s: usize) -> u64 {
        self.counts[s]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn mean(&self, s: usize) -> f64 {
        self.sums[s] / self.counts[s] as f64
    }

    pub fn raw(&self, s: usize) -> Option<&[f64]> {
        self.raw.as_ref().map(|r| r[s].as_slice())
    }

    /// Number of common replications behind the pair statistics.
    pub fn pair_count(&self, a: usize, b: usize) -> u64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.pairs[self.pair_index(lo, hi)].n
    }

    /// `X̄_a − X̄_b` over the pair's common replications.
    pub fn diff_mean(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = &self.pairs[self.pair_index(lo, hi)];
        let mean = p.sum / p.n as f64;
        if a < b {
            mean
        } else {
            -mean
        }
    }

    /// Sample variance of `X_a − X_b`.
    pub fn pair_variance(&self, a: usize, b: usize) -> f64 {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = &self.pairs[self.pair_index(lo, hi)];
        if p.n < 2 {
            f64::NAN
        } else {
            (p.m2 / (p.n - 1) as f64).max(0.0)
        }
    }

    /// `τ = n/S²`; infinite when the differences have zero sample variance.
    pub fn tau(&self, a: usize, b: usize) -> f64 {
        let v = self.pair_variance(a, b);
        let n = self.pair_count(a, b) as f64;
        if v == 0.0 {
            f64::INFINITY
        } else {
            n / v
        }
    }
}
