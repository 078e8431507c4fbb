//! Compensated summation and deterministic block-parallel reduction.
//!
//! Outer loops are split into fixed-size blocks. Each block is reduced
//! sequentially in index order; block results are merged in block order with
//! Neumaier compensation. Block boundaries do not depend on the worker count,
//! so results are bit-identical for any number of workers.

use rayon::prelude::*;

/// Number of outer items per reduction block.
pub const BLOCK: usize = 64;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated sum of a slice in index order.
pub fn neumaier_sum(xs: &[f64]) -> f64 {
    let mut acc = Neumaier::new();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Sum with four plain lanes; vectorizes well for long inner loops.
/// The lane split is fixed, so the result is deterministic.
#[inline]
pub fn lane_sum<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: F) -> f64 {
    let mut a = [0.0f64; 4];
    let mut i = lo;
    while i + 4 <= hi {
        a[0] += f(i);
        a[1] += f(i + 1);
        a[2] += f(i + 2);
        a[3] += f(i + 3);
        i += 4;
    }
    while i < hi {
        a[0] += f(i);
        i += 1;
    }
    (a[0] + a[1]) + (a[2] + a[3])
}

/// Worker pool with a fixed thread count.
pub struct Workers {
    pool: rayon::ThreadPool,
    n: usize,
}

impl std::fmt::Debug for Workers {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Workers").field("n", &self.n).finish()
    }
}

impl Workers {
    /// Pool with `n` threads (`n = 0` is treated as 1).
    pub fn new(n: usize) -> Self {
        let n = n.max(1);
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("failed to build worker pool");
        Self { pool, n }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// Reduce `n_items` outer items into `K` compensated totals.
    ///
    /// `body(i, out)` adds the contribution of item `i` into `out`. Items of a
    /// block are visited in ascending order with plain accumulation; blocks
    /// are merged in ascending order with compensation.
    pub fn reduce<const K: usize, F>(&self, n_items: usize, body: F) -> [f64; K]
    where
        F: Fn(usize, &mut [f64; K]) + Sync,
    {
        let n_blocks = n_items.div_ceil(BLOCK);
        let partial: Vec<[f64; K]> = self.pool.install(|| {
            (0..n_blocks)
                .into_par_iter()
                .map(|b| {
                    let mut acc = [Neumaier::new(); K];
                    let lo = b * BLOCK;
                    let hi = (lo + BLOCK).min(n_items);
                    for i in lo..hi {
                        let mut out = [0.0; K];
                        body(i, &mut out);
                        for k in 0..K {
                            acc[k].add(out[k]);
                        }
                    }
                    let mut r = [0.0; K];
                    for k in 0..K {
                        r[k] = acc[k].value();
                    }
                    r
                })
                .collect()
        });
        let mut acc = [Neumaier::new(); K];
        for block in &partial {
            for k in 0..K {
                acc[k].add(block[k]);
            }
        }
        let mut r = [0.0; K];
        for k in 0..K {
            r[k] = acc[k].value();
        }
        r
    }

    /// Per-item map evaluated in parallel, returned in index order.
    pub fn map<T, F>(&self, n_items: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        self.pool
            .install(|| (0..n_items).into_par_iter().map(&f).collect())
    }
}

impl Default for Workers {
    fn default() -> Self {
        Self::new(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neumaier_recovers_cancelled_terms() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(&xs), 2.0);
    }

    #[test]
    fn lane_sum_matches_plain_for_integers() {
        let s = lane_sum(0, 103, |i| i as f64);
        assert_eq!(s, (0..103).sum::<usize>() as f64);
    }

    #[test]
    fn reduce_is_worker_independent() {
        let body = |i: usize, out: &mut [f64; 2]| {
            let x = (i as f64 * 0.37).sin() * 1e-3 + 1.0 / (i as f64 + 1.0);
            out[0] = x;
            out[1] = x * x;
        };
        let a = Workers::new(1).reduce(10_001, body);
        let b = Workers::new(2).reduce(10_001, body);
        let c = Workers::new(8).reduce(10_001, body);
        assert_eq!(a[0].to_bits(), b[0].to_bits());
        assert_eq!(a[0].to_bits(), c[0].to_bits());
        assert_eq!(a[1].to_bits(), c[1].to_bits());
    }
}
