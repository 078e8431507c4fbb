//! Gauss-Legendre rules and panel helpers for the continuum engine.

use std::f64::consts::PI;

/// Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule; nodes by Newton iteration on P_n.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrate `f` over [a, b].
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if b <= a {
            return 0.0;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Visit the mapped nodes and weights of [a, b].
    #[inline]
    pub fn for_each<F: FnMut(f64, f64)>(&self, a: f64, b: f64, mut f: F) {
        if b <= a {
            return;
        }
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            f(c + h * x, w * h);
        }
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sorted, deduplicated breakpoints clipped to [a, b], including a and b.
pub fn clean_points(a: f64, b: f64, pts: &mut Vec<f64>) {
    pts.retain(|t| *t > a && *t < b);
    pts.push(a);
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (1.0 + y.abs()));
}

/// Panels of [a, b] refined geometrically toward `a` (if `at_a`) or `b`.
///
/// Panel lengths shrink by `ratio` until they fall below `min_len`; the last
/// panel touches the end point.
pub fn graded(a: f64, b: f64, at_a: bool, ratio: f64, min_len: f64, out: &mut Vec<(f64, f64)>) {
    if b <= a {
        return;
    }
    let len = b - a;
    let mut cuts = vec![0.0];
    let mut t = len;
    while t * ratio > min_len && cuts.len() < 200 {
        t *= ratio;
        cuts.push(t);
    }
    // cuts are distances from the graded end, descending after the first.
    let mut d: Vec<f64> = cuts[1..].to_vec();
    d.push(0.0);
    let mut prev = len;
    for &x in &d {
        if at_a {
            out.push((a + x, a + prev));
        } else {
            out.push((b - prev, b - x));
        }
        prev = x;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_on_polynomials() {
        let g = GaussLegendre::new(8);
        let v = g.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn graded_panels_cover_interval() {
        let mut out = Vec::new();
        graded(1.0, 3.0, true, 0.25, 1e-6, &mut out);
        let total: f64 = out.iter().map(|(l, h)| h - l).sum();
        assert!((total - 2.0).abs() < 1e-14);
        assert!(out.iter().any(|(l, _)| *l == 1.0));
        let g = GaussLegendre::new(12);
        let v: f64 = out.iter().map(|&(l, h)| g.integrate(l, h, |x| (x - 1.0).sqrt())).sum();
        let exact = 2.0 / 3.0 * 2f64.powf(1.5);
        assert!((v - exact).abs() < 1e-10);
    }
}
