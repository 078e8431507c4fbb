//! Discretized metric measure spaces: weighted unit intervals and the unit
//! square grid, with exact ball measures and doubling/Ahlfors audits.

use crate::{Error, Result};
use std::ops::Range;

/// Point in the model space. One-dimensional spaces use only `[0]`.
pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    Interval,
    Planar,
}

/// Piecewise-constant density on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightProfile {
    breaks: Vec<f64>,
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl WeightProfile {
    /// `breaks` ascending from 0 to 1; `values[k]` is the density on
    /// `[breaks[k], breaks[k+1]]`.
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::Breakpoints);
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Breakpoints);
        }
        if values.len() + 1 != breaks.len() {
            return Err(Error::LengthMismatch {
                what: "weights",
                got: values.len(),
                expected: breaks.len() - 1,
            });
        }
        if values.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::param("weights", "every weight must be positive and finite"));
        }
        let mut cum = Vec::with_capacity(breaks.len());
        cum.push(0.0);
        for k in 0..values.len() {
            let c = cum[k] + values[k] * (breaks[k + 1] - breaks[k]);
            cum.push(c);
        }
        Ok(Self { breaks, values, cum })
    }

    pub fn uniform(c: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![c])
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Index of the piece containing `x` (right-continuous, last piece closed).
    pub fn piece(&self, x: f64) -> usize {
        let k = self.breaks.partition_point(|b| *b <= x);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn density(&self, x: f64) -> f64 {
        self.values[self.piece(x)]
    }

    /// Cumulative mass `W(x) = ∫_0^x w`, with `x` clamped to [0, 1].
    pub fn cumulative(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = self.piece(x);
        self.cum[k] + self.values[k] * (x - self.breaks[k])
    }

    pub fn total(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// Mass of `[a, b] ∩ [0, 1]`.
    pub fn mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        (self.cumulative(b) - self.cumulative(a)).max(0.0)
    }
}

/// A discretized metric measure space.
#[derive(Debug, Clone)]
pub struct Space {
    kind: SpaceKind,
    xs: Vec<f64>,
    ys: Vec<f64>,
    mass: Vec<f64>,
    density: Vec<f64>,
    /// Cell edges (1D only), `len = n + 1`.
    edges: Vec<f64>,
    nx: usize,
    ny: usize,
    weight: Option<WeightProfile>,
    total: f64,
}

/// Nodes inside an open ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighbors {
    Range(Range<usize>),
    Set(Vec<usize>),
}

impl Neighbors {
    pub fn len(&self) -> usize {
        match self {
            Neighbors::Range(r) => r.len(),
            Neighbors::Set(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_vec(&self) -> Vec<usize> {
        match self {
            Neighbors::Range(r) => r.clone().collect(),
            Neighbors::Set(v) => v.clone(),
        }
    }

    pub fn contains(&self, i: usize) -> bool {
        match self {
            Neighbors::Range(r) => r.contains(&i),
            Neighbors::Set(v) => v.binary_search(&i).is_ok(),
        }
    }
}

/// Build a weighted interval: uniform cells of width `1/n_cells`, with every
/// cell that straddles a breakpoint split there.
pub fn build_weighted_interval(
    breakpoints: &[f64],
    weights: &[f64],
    n_cells: usize,
) -> Result<Space> {
    if n_cells < 2 {
        return Err(Error::param("n_cells", "need at least 2 cells"));
    }
    let profile = WeightProfile::new(breakpoints.to_vec(), weights.to_vec())?;
    Ok(Space::from_profile(profile, n_cells))
}

/// Build the unit square grid with `nx * ny` cell-centered nodes.
pub fn build_planar_grid(nx: usize, ny: usize) -> Result<Space> {
    if nx < 2 || ny < 2 {
        return Err(Error::param("nx/ny", "need at least 2 cells per axis"));
    }
    let n = nx * ny;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for j in 0..ny {
        for i in 0..nx {
            xs.push((i as f64 + 0.5) / nx as f64);
            ys.push((j as f64 + 0.5) / ny as f64);
        }
    }
    let m = 1.0 / (nx as f64 * ny as f64);
    Ok(Space {
        kind: SpaceKind::Planar,
        xs,
        ys,
        mass: vec![m; n],
        density: vec![1.0; n],
        edges: Vec::new(),
        nx,
        ny,
        weight: None,
        total: 1.0,
    })
}

impl Space {
    pub(crate) fn from_profile(profile: WeightProfile, n_cells: usize) -> Space {
        let h = 1.0 / n_cells as f64;
        let mut edges: Vec<f64> = (0..=n_cells).map(|k| k as f64 * h).collect();
        edges[n_cells] = 1.0;
        let inner: Vec<f64> = profile.breaks()[1..profile.breaks().len() - 1].to_vec();
        edges.extend(inner);
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        let n = edges.len() - 1;
        let mut xs = Vec::with_capacity(n);
        let mut mass = Vec::with_capacity(n);
        let mut density = Vec::with_capacity(n);
        for k in 0..n {
            let (a, b) = (edges[k], edges[k + 1]);
            let mid = 0.5 * (a + b);
            let w = profile.density(mid);
            xs.push(mid);
            density.push(w);
            mass.push(w * (b - a));
        }
        let total = profile.total();
        Space {
            kind: SpaceKind::Interval,
            xs,
            ys: Vec::new(),
            mass,
            density,
            edges,
            nx: n,
            ny: 1,
            weight: Some(profile),
            total,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Node x-coordinates (the only coordinates in 1D).
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    /// Node y-coordinates (empty in 1D).
    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn point(&self, i: usize) -> Point {
        match self.kind {
            SpaceKind::Interval => [self.xs[i], 0.0],
            SpaceKind::Planar => [self.xs[i], self.ys[i]],
        }
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn weight(&self) -> Option<&WeightProfile> {
        self.weight.as_ref()
    }

    /// Analytic total mass.
    pub fn total_mass(&self) -> f64 {
        self.total
    }

    pub fn diam(&self) -> f64 {
        match self.kind {
            SpaceKind::Interval => 1.0,
            SpaceKind::Planar => std::f64::consts::SQRT_2,
        }
    }

    /// Largest cell extent.
    pub fn max_spacing(&self) -> f64 {
        match self.kind {
            SpaceKind::Interval => self
                .edges
                .windows(2)
                .map(|w| w[1] - w[0])
                .fold(0.0, f64::max),
            SpaceKind::Planar => (1.0 / self.nx as f64).max(1.0 / self.ny as f64),
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match self.kind {
            SpaceKind::Interval => (self.xs[i] - self.xs[j]).abs(),
            SpaceKind::Planar => {
                let dx = self.xs[i] - self.xs[j];
                let dy = self.ys[i] - self.ys[j];
                (dx * dx + dy * dy).sqrt()
            }
        }
    }

    /// μ(B(node, r)), exact.
    pub fn ball_measure(&self, center: usize, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::param("r", "radius must be positive"));
        }
        Ok(self.ball_measure_at(self.point(center), r))
    }

    /// μ(B(c, r) ∩ X) for an arbitrary point `c`, exact; `r > 0` assumed.
    pub fn ball_measure_at(&self, c: Point, r: f64) -> f64 {
        match self.kind {
            SpaceKind::Interval => {
                let w = self.weight.as_ref().expect("interval has a weight");
                w.mass(c[0] - r, c[0] + r)
            }
            SpaceKind::Planar => disc_rect_area(c, r, 0.0, 1.0, 0.0, 1.0),
        }
    }

    /// μ(cell_i ∩ B(c, r)), exact.
    pub fn cell_ball_mass(&self, i: usize, c: Point, r: f64) -> f64 {
        match self.kind {
            SpaceKind::Interval => {
                let a = self.edges[i].max(c[0] - r);
                let b = self.edges[i + 1].min(c[0] + r);
                if b > a {
                    (b - a) * self.density[i]
                } else {
                    0.0
                }
            }
            SpaceKind::Planar => {
                let (ix, iy) = (i % self.nx, i / self.nx);
                let hx = 1.0 / self.nx as f64;
                let hy = 1.0 / self.ny as f64;
                disc_rect_area(
                    c,
                    r,
                    ix as f64 * hx,
                    (ix + 1) as f64 * hx,
                    iy as f64 * hy,
                    (iy + 1) as f64 * hy,
                )
            }
        }
    }

    /// Index range of 1D nodes with `|x - c| < r`.
    pub fn range_within(&self, c: f64, r: f64) -> Range<usize> {
        debug_assert_eq!(self.kind, SpaceKind::Interval);
        let xs = &self.xs;
        let inside = |x: f64| (x - c).abs() < r;
        let mut lo = xs.partition_point(|x| *x <= c - r);
        while lo > 0 && inside(xs[lo - 1]) {
            lo -= 1;
        }
        while lo < xs.len() && xs[lo] < c && !inside(xs[lo]) {
            lo += 1;
        }
        let mut hi = xs.partition_point(|x| *x < c + r).max(lo);
        while hi < xs.len() && inside(xs[hi]) {
            hi += 1;
        }
        while hi > lo && !inside(xs[hi - 1]) {
            hi -= 1;
        }
        lo..hi
    }

    /// Nodes `j` with `d(j, center) < r`, the center included.
    pub fn neighbors_within(&self, center: usize, r: f64) -> Neighbors {
        match self.kind {
            SpaceKind::Interval => Neighbors::Range(self.range_within(self.xs[center], r)),
            SpaceKind::Planar => {
                let mut out = Vec::new();
                self.for_each_planar_within(center, r, |j| out.push(j));
                Neighbors::Set(out)
            }
        }
    }

    /// Visit planar nodes with `d < r` in ascending index order.
    pub fn for_each_planar_within<F: FnMut(usize)>(&self, center: usize, r: f64, mut f: F) {
        let (nx, ny) = (self.nx, self.ny);
        let (cx, cy) = (self.xs[center], self.ys[center]);
        let r2 = r * r;
        let jlo = (((cy - r) * ny as f64).floor().max(0.0)) as usize;
        let jhi = ((((cy + r) * ny as f64).ceil()) as usize).min(ny);
        let ilo = (((cx - r) * nx as f64).floor().max(0.0)) as usize;
        let ihi = ((((cx + r) * nx as f64).ceil()) as usize).min(nx);
        for j in jlo..jhi {
            let dy = self.ys[j * nx] - cy;
            if dy * dy >= r2 {
                continue;
            }
            for i in ilo..ihi {
                let k = j * nx + i;
                let dx = self.xs[k] - cx;
                if dx * dx + dy * dy < r2 {
                    f(k);
                }
            }
        }
    }

    /// Evenly spaced node indices, `count` of them.
    pub fn spread_nodes(&self, count: usize) -> Vec<usize> {
        let n = self.len();
        let count = count.clamp(1, n);
        (0..count)
            .map(|k| ((k as f64 + 0.5) * n as f64 / count as f64) as usize)
            .map(|k| k.min(n - 1))
            .collect()
    }

    /// Default audit sample: spread centers, geometric radii in
    /// `[4 h, diam/2]` with ratio 2^(1/2).
    pub fn default_sample(&self, n_centers: usize) -> Vec<(usize, f64)> {
        let centers = self.spread_nodes(n_centers);
        let rmax = self.diam() / 2.0;
        let mut radii = Vec::new();
        let mut r = rmax;
        let rmin = 4.0 * self.max_spacing();
        while r >= rmin {
            radii.push(r);
            r /= std::f64::consts::SQRT_2;
        }
        let mut out = Vec::new();
        for &c in &centers {
            for &r in &radii {
                out.push((c, r));
            }
        }
        out
    }
}

/// Area of `B(c, r) ∩ [x0, x1] × [y0, y1]`.
pub fn disc_rect_area(c: Point, r: f64, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let tlo = (x0 - c[0]).max(-r);
    let thi = (x1 - c[0]).min(r);
    if thi <= tlo {
        return 0.0;
    }
    let b1 = y1 - c[1];
    let b0 = y0 - c[1];
    let h = |b: f64| -> f64 {
        if b >= 0.0 {
            clipped_chord(r, b, tlo, thi)
        } else {
            -clipped_chord(r, -b, tlo, thi)
        }
    };
    (h(b1) - h(b0)).max(0.0)
}

/// `∫_{tlo}^{thi} min(s(t), a) dt` with `s(t) = sqrt(r² - t²)`, `a ≥ 0`.
fn clipped_chord(r: f64, a: f64, tlo: f64, thi: f64) -> f64 {
    let g = |t: f64| -> f64 {
        let t = t.clamp(-r, r);
        let s = (r * r - t * t).max(0.0).sqrt();
        0.5 * (t * s + r * r * (t / r).clamp(-1.0, 1.0).asin())
    };
    let arc = |u: f64, v: f64| if v > u { g(v) - g(u) } else { 0.0 };
    if a >= r {
        return arc(tlo, thi);
    }
    let w = (r * r - a * a).sqrt();
    let flat_lo = tlo.max(-w);
    let flat_hi = thi.min(w);
    let flat = if flat_hi > flat_lo { a * (flat_hi - flat_lo) } else { 0.0 };
    arc(tlo, thi.min(-w)) + flat + arc(tlo.max(w), thi)
}

/// Doubling audit: max of μ(B(x, 2r)) / μ(B(x, r)) over the sample.
pub fn audit_doubling(space: &Space, sample: &[(usize, f64)]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut best: f64 = 0.0;
    for &(c, r) in sample {
        if !(r > 0.0) || r > space.diam() / 2.0 * (1.0 + 1e-12) {
            return Err(Error::param("radius", format!("{r} outside (0, diam/2]")));
        }
        let p = space.point(c);
        let small = space.ball_measure_at(p, r);
        let big = space.ball_measure_at(p, 2.0 * r);
        best = best.max(big / small);
    }
    Ok(best)
}

/// Fit of the upper mass bound μ(B(x,r))/μ(B(x,R)) ≤ C0 (r/R)^σ.
#[derive(Debug, Clone, PartialEq)]
pub struct MassBoundFit {
    /// Envelope constant: smallest C0 valid on the sample for the fitted σ.
    pub c0: f64,
    /// Least-squares exponent.
    pub sigma: f64,
    /// Least-squares intercept constant (before enveloping).
    pub ls_c0: f64,
    /// Max relative violation of the envelope fit over the sample.
    pub residual: f64,
    /// Whether σ lies in (0, 1).
    pub in_paper_range: bool,
    pub pairs: usize,
}

/// Fit `(C0, σ)` on triples `(center, r, R)` with `r < R`.
pub fn audit_upper_mass_bound(space: &Space, sample: &[(usize, f64, f64)]) -> Result<MassBoundFit> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut pts = Vec::with_capacity(sample.len());
    for &(c, r, big_r) in sample {
        if !(r > 0.0 && r <= big_r && big_r < space.diam() / 2.0 * (1.0 + 1e-12)) {
            return Err(Error::DegenerateSample(format!("pair r={r}, R={big_r}")));
        }
        let p = space.point(c);
        let q = space.ball_measure_at(p, r) / space.ball_measure_at(p, big_r);
        pts.push(((r / big_r).ln(), q.ln(), r / big_r, q));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSample("all pairs share one radius ratio".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sigma = sxy / sxx;
    let ls_c0 = (my - sigma * mx).exp();
    let c0 = pts
        .iter()
        .map(|p| p.3 / p.2.powf(sigma))
        .fold(0.0, f64::max);
    let residual = pts
        .iter()
        .map(|p| (p.3 - c0 * p.2.powf(sigma)) / (c0 * p.2.powf(sigma)))
        .fold(0.0, f64::max);
    Ok(MassBoundFit {
        c0,
        sigma,
        ls_c0,
        residual,
        in_paper_range: sigma > 0.0 && sigma < 1.0,
        pairs: pts.len(),
    })
}

/// Smallest C0 with μ(B(x,r))/μ(B(x,R)) ≤ C0 (r/R)^σ on the sample, for a
/// given σ.
pub fn min_c0_for_sigma(space: &Space, sample: &[(usize, f64, f64)], sigma: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(sample
        .iter()
        .map(|&(c, r, big_r)| {
            let p = space.point(c);
            let q = space.ball_measure_at(p, r) / space.ball_measure_at(p, big_r);
            q / (r / big_r).powf(sigma)
        })
        .fold(0.0, f64::max))
}

/// Pairs `(r, R)` from a center/radius sample: every `R` in the sample with
/// every smaller radius of the same center.
pub fn nested_pairs(sample: &[(usize, f64)]) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for &(c, big_r) in sample {
        for &(c2, r) in sample {
            if c2 == c && r < big_r {
                out.push((c, r, big_r));
            }
        }
    }
    out
}

/// Ahlfors audit result.
#[derive(Debug, Clone, PartialEq)]
pub struct AhlforsFit {
    /// Smallest C_A with C_A⁻¹ r^Q ≤ μ(B) ≤ C_A r^Q on the sample.
    pub c_a: f64,
    /// max μ(B)/r^Q.
    pub upper: f64,
    /// max r^Q/μ(B).
    pub lower: f64,
    /// Set when Q ≤ 1, outside the regime the lower bounds are stated for.
    pub note: Option<String>,
}

pub fn audit_ahlfors(space: &Space, q: f64, sample: &[(usize, f64)]) -> Result<AhlforsFit> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(q >= 1.0) {
        return Err(Error::param("Q", "exponent must be at least 1"));
    }
    let mut upper: f64 = 0.0;
    let mut lower: f64 = 0.0;
    for &(c, r) in sample {
        let m = space.ball_measure_at(space.point(c), r);
        let rq = r.powf(q);
        upper = upper.max(m / rq);
        lower = lower.max(rq / m);
    }
    let note = if q <= 1.0 {
        Some("Q = 1: heuristic, results for Ahlfors-regular spaces assume Q > 1".to_string())
    } else {
        None
    };
    Ok(AhlforsFit {
        c_a: upper.max(lower),
        upper,
        lower,
        note,
    })
}
