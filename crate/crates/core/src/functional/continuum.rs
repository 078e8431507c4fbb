//! Composite Gauss-Legendre evaluation for piecewise-linear functions on a
//! weighted interval.
//!
//! Both integrals are split wherever the integrand loses smoothness: knots
//! of `f`, weight breaks, the outer point `y`, kernel support edges and the
//! level crossings of `φ`. Panels next to a knot are refined geometrically,
//! because the difference quotient changes on the scale of the distance to
//! that knot. The fractional kernel is integrated in `ln d` away from `y`
//! and in closed form on the first panel, where the integrand is exactly
//! `c d^(β-1)`.

use super::{Anchor, Evaluator, Moments, Region};
use crate::funcspace::{Pl, SampledFunction};
use crate::mollifier::{Family, MollifierSpec, RadialProfile};
use crate::phi::PhiSpec;
use crate::quad::{self, GaussLegendre};
use crate::space::{Space, SpaceKind, WeightProfile};
use crate::sum::Neumaier;
use crate::{Error, Result};

use super::nodes::MAX_EXPONENTS;

const GRADE_RATIO: f64 = 0.25;
/// Outer panels at a knot are refined down to this fraction of their length.
const OUTER_GRADE: f64 = 1e-3;
/// Panels touching `y` in `Λ` are refined down to this fraction.
const DIAG_GRADE: f64 = 1e-12;
/// Width of the `ln d` panels of the fractional kernel.
const LOG_PANEL: f64 = 0.5;

/// A piecewise-linear function on a weighted interval with outer and inner
/// integration ranges.
#[derive(Debug, Clone)]
pub struct Problem {
    pl: Pl,
    weight: WeightProfile,
    outer: (f64, f64),
    inner: (f64, f64),
    features: Vec<f64>,
    slopes: Vec<f64>,
}

impl Problem {
    pub fn new(pl: Pl, weight: WeightProfile, outer: (f64, f64), inner: (f64, f64)) -> Result<Self> {
        for (a, b) in [outer, inner] {
            if !(0.0 <= a && a < b && b <= 1.0) {
                return Err(Error::param("range", "need 0 <= a < b <= 1"));
            }
        }
        let mut features: Vec<f64> = pl.knots().to_vec();
        features.extend_from_slice(weight.breaks());
        features.extend_from_slice(&[0.0, 1.0, outer.0, outer.1, inner.0, inner.1]);
        quad::clean_points(0.0, 1.0, &mut features);
        let mut slopes: Vec<f64> = (0..pl.pieces()).map(|k| pl.slope_of(k).abs()).filter(|s| *s > 0.0).collect();
        slopes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        slopes.dedup();
        Ok(Self { pl, weight, outer, inner, features, slopes })
    }

    /// The exact form behind `f` on the space's weight, with the ranges
    /// taken from a contiguous region mask.
    pub fn from_space(space: &Space, f: &SampledFunction, region: &Region) -> Result<Self> {
        if space.kind() != SpaceKind::Interval {
            return Err(Error::Unsupported("the continuum route is one-dimensional".into()));
        }
        let weight = space.weight().ok_or(Error::MissingData("weight profile"))?.clone();
        let pl = f
            .pl()
            .ok_or_else(|| Error::Unsupported("the continuum route needs a piecewise-linear function".into()))?
            .clone();
        let e = space.edges();
        let range = |m: &[bool]| -> Result<(f64, f64)> {
            let first = m.iter().position(|b| *b).ok_or(Error::EmptySample)?;
            let last = m.iter().rposition(|b| *b).unwrap();
            if m[first..=last].iter().any(|b| !*b) {
                return Err(Error::Unsupported("the continuum route needs a contiguous region".into()));
            }
            Ok((e[first], e[last + 1]))
        };
        let outer = match region.outer() {
            Some(m) => range(m)?,
            None => (0.0, 1.0),
        };
        let inner = match region.inner() {
            Some(m) => range(m)?,
            None => (0.0, 1.0),
        };
        Self::new(pl, weight, outer, inner)
    }

    fn ball(&self, c: f64, r: f64) -> f64 {
        self.weight.mass(c - r, c + r)
    }

    /// `|f(x) - f(y)| / |x - y|`, exact on a shared piece.
    #[inline]
    fn quotient(&self, x: f64, y: f64, ky: usize) -> f64 {
        let kx = self.pl.piece(x);
        if kx == ky {
            self.pl.slope_of(ky).abs()
        } else {
            ((self.pl.eval(x) - self.pl.eval(y)) / (x - y)).abs()
        }
    }

    fn features_in(&self, a: f64, b: f64) -> &[f64] {
        let lo = self.features.partition_point(|t| *t <= a);
        let hi = self.features.partition_point(|t| *t < b);
        &self.features[lo..hi.max(lo)]
    }

    fn feature_distance(&self, t: f64) -> f64 {
        let k = self.features.partition_point(|s| *s < t);
        let right = self.features.get(k).map_or(f64::INFINITY, |s| s - t);
        let left = if k > 0 { t - self.features[k - 1] } else { f64::INFINITY };
        left.min(right)
    }
}

/// Split `[a, b]` into panels, refined toward `a` and/or `b` down to the
/// given minimal lengths.
fn refine(a: f64, b: f64, ga: Option<f64>, gb: Option<f64>, out: &mut Vec<(f64, f64)>) {
    if b <= a {
        return;
    }
    match (ga, gb) {
        (None, None) => out.push((a, b)),
        (Some(m), None) => quad::graded(a, b, true, GRADE_RATIO, m, out),
        (None, Some(m)) => quad::graded(a, b, false, GRADE_RATIO, m, out),
        (Some(ma), Some(mb)) => {
            let c = 0.5 * (a + b);
            quad::graded(a, c, true, GRADE_RATIO, ma, out);
            quad::graded(c, b, false, GRADE_RATIO, mb, out);
        }
    }
}

/// Inner panels from sorted cut points: panels touching `y` are refined
/// toward `y` only when `diag` is set; others are refined toward their end
/// nearest `y` down to that distance.
fn inner_panels(cuts: &[f64], y: f64, diag: Option<f64>, out: &mut Vec<(f64, f64)>) {
    for w in cuts.windows(2) {
        let (u, v) = (w[0], w[1]);
        if v <= y {
            let g = y - v;
            if g == 0.0 {
                refine(u, v, None, diag.map(|m| m * (v - u)), out);
            } else if v - u > g {
                refine(u, v, None, Some(g), out);
            } else {
                out.push((u, v));
            }
        } else {
            let g = u - y;
            if g <= 0.0 {
                refine(u, v, diag.map(|m| m * (v - u)), None, out);
            } else if v - u > g {
                refine(u, v, Some(g), None, out);
            } else {
                out.push((u, v));
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Ker<'a> {
    Window { r: f64, q: Option<f64> },
    Radial(&'a RadialProfile),
    Fractional { s: f64, beta: f64 },
}

#[derive(Clone, Copy, Default)]
struct RowSum {
    s: [f64; MAX_EXPONENTS],
    mass: f64,
    n: u64,
}

struct Engine<'a> {
    prob: &'a Problem,
    gl: GaussLegendre,
    ker: Ker<'a>,
    exps: &'a [f64],
}

impl Engine<'_> {
    fn support(&self) -> Option<f64> {
        match self.ker {
            Ker::Window { r, .. } => Some(r),
            Ker::Radial(p) => Some(p.support()),
            Ker::Fractional { .. } => None,
        }
    }

    fn row(&self, y: f64) -> RowSum {
        match self.ker {
            Ker::Fractional { s, beta } => self.row_fractional(y, s, beta),
            _ => self.row_supported(y),
        }
    }

    fn row_supported(&self, y: f64) -> RowSum {
        let pr = self.prob;
        let big_r = self.support().unwrap();
        let lo = pr.inner.0.max(y - big_r);
        let hi = pr.inner.1.min(y + big_r);
        let mut cuts: Vec<f64> = pr.features_in(lo, hi).to_vec();
        cuts.push(y);
        if let Ker::Radial(p) = self.ker {
            for &(t, _) in p.steps() {
                cuts.push(y - t);
                cuts.push(y + t);
            }
        }
        quad::clean_points(lo, hi, &mut cuts);
        let mut panels = Vec::new();
        inner_panels(&cuts, y, None, &mut panels);
        let ky = pr.pl.piece(y);
        let mut acc = RowSum::default();
        for (u, v) in panels {
            let wx = pr.weight.density(0.5 * (u + v));
            self.gl.for_each(u, v, |x, wt| {
                let d = (x - y).abs();
                let k = match self.ker {
                    Ker::Window { r, q } => match q {
                        Some(q) => (d / r).powf(q),
                        None => 1.0,
                    },
                    Ker::Radial(p) => p.eval(d),
                    Ker::Fractional { .. } => unreachable!(),
                };
                if k == 0.0 {
                    return;
                }
                let a = pr.quotient(x, y, ky);
                let w = wt * wx * k;
                for (e, slot) in self.exps.iter().zip(acc.s.iter_mut()) {
                    *slot += w * a.powf(*e);
                }
                acc.mass += w;
                acc.n += 1;
            });
        }
        if let Ker::Window { r, .. } = self.ker {
            let norm = pr.ball(y, r);
            for v in acc.s.iter_mut() {
                *v /= norm;
            }
            acc.mass /= norm;
        }
        acc
    }

    /// `(1-s) d^β / μ(B(y,d))` with `β = p(1-s)`, integrated over distance
    /// on each side of `y`.
    fn row_fractional(&self, y: f64, s: f64, beta: f64) -> RowSum {
        let pr = self.prob;
        let ky = pr.pl.piece(y);
        let slope = pr.pl.slope_of(ky).abs();
        // distances where μ(B(y, d)) or the quotient change form
        let mut dcuts: Vec<f64> = pr.features.iter().map(|t| (t - y).abs()).collect();
        dcuts.push(y);
        dcuts.push(1.0 - y);
        dcuts.retain(|d| *d > 0.0);
        dcuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d_first = dcuts[0];
        let mut acc = RowSum::default();
        for side in [-1.0f64, 1.0] {
            let reach = if side < 0.0 { y - pr.inner.0 } else { pr.inner.1 - y };
            if reach <= 0.0 {
                continue;
            }
            // closed form on [0, d_first]: μ(B) = 2 w_y d, quotient = |slope|
            let d0 = d_first.min(reach);
            let base = (1.0 - s) * d0.powf(beta) / (2.0 * beta);
            for (e, slot) in self.exps.iter().zip(acc.s.iter_mut()) {
                *slot += base * slope.powf(*e);
            }
            acc.mass += base;
            let mut cuts: Vec<f64> = dcuts.iter().copied().filter(|d| *d > d0 && *d < reach).collect();
            cuts.insert(0, d0);
            cuts.push(reach);
            cuts.dedup();
            for w in cuts.windows(2) {
                let (ta, tb) = (w[0].ln(), w[1].ln());
                if !(tb > ta) {
                    continue;
                }
                let n_sub = ((tb - ta) / LOG_PANEL).ceil().max(1.0) as usize;
                let wx = pr.weight.density(y + side * 0.5 * (w[0] + w[1]));
                for k in 0..n_sub {
                    let a = ta + (tb - ta) * k as f64 / n_sub as f64;
                    let b = ta + (tb - ta) * (k + 1) as f64 / n_sub as f64;
                    self.gl.for_each(a, b, |t, wt| {
                        let d = t.exp();
                        let x = y + side * d;
                        let kern = (1.0 - s) * d.powf(beta) / pr.ball(y, d);
                        let q = pr.quotient(x, y, ky);
                        // dd = d dt
                        let w = wt * d * wx * kern;
                        for (e, slot) in self.exps.iter().zip(acc.s.iter_mut()) {
                            *slot += w * q.powf(*e);
                        }
                        acc.mass += w;
                        acc.n += 1;
                    });
                }
            }
        }
        acc
    }

    /// Outer panels between features and `extra` cut points. Ends at a
    /// feature are refined down to a fixed fraction of the panel; with
    /// `near` set, other ends are refined down to their distance from the
    /// nearest feature, where the row integral changes on that scale.
    fn outer_panels(&self, extra: &[f64], near: bool) -> Vec<(f64, f64)> {
        let pr = self.prob;
        let (a, b) = pr.outer;
        let mut cuts: Vec<f64> = pr.features_in(a, b).to_vec();
        cuts.extend_from_slice(extra);
        quad::clean_points(a, b, &mut cuts);
        let grade = |t: f64, len: f64| -> Option<f64> {
            let g = pr.feature_distance(t);
            if g == 0.0 {
                Some(OUTER_GRADE * len)
            } else if near && g < len {
                Some(g.max(OUTER_GRADE * len))
            } else {
                None
            }
        };
        let mut out = Vec::new();
        for w in cuts.windows(2) {
            let (u, v) = (w[0], w[1]);
            let len = v - u;
            refine(u, v, grade(u, len), grade(v, len), &mut out);
        }
        out
    }
}

#[derive(Clone, Copy, Default)]
struct PanelSum {
    s: [f64; MAX_EXPONENTS],
    roots: [f64; MAX_EXPONENTS],
    kmass: f64,
    omass: f64,
    max_row: f64,
    n: u64,
}

pub fn moments(
    ev: &Evaluator,
    prob: &Problem,
    moll: &MollifierSpec,
    exponents: &[f64],
    root_q: Option<f64>,
) -> Result<Moments> {
    let ker = match &moll.family {
        Family::FlatWindow { r } => Ker::Window { r: *r, q: None },
        Family::WindowPower { r, q } => Ker::Window { r: *r, q: Some(*q) },
        Family::EuclideanRadial(p) | Family::Custom(p) => {
            if p.dim() != 1 {
                return Err(Error::Unsupported("planar profile on an interval".into()));
            }
            Ker::Radial(p)
        }
        Family::Fractional { s } => Ker::Fractional { s: *s, beta: moll.p * (1.0 - s) },
    };
    let eng = Engine { prob, gl: GaussLegendre::new(ev.gl_points), ker, exps: exponents };
    let mut extra = Vec::new();
    let offsets: Vec<f64> = match ker {
        Ker::Window { r, .. } => vec![r],
        Ker::Radial(p) => p.steps().iter().map(|s| s.0).collect(),
        Ker::Fractional { .. } => Vec::new(),
    };
    for t in &prob.features {
        for o in &offsets {
            extra.push(t - o);
            extra.push(t + o);
        }
    }
    let near = matches!(ker, Ker::Fractional { .. });
    let panels = eng.outer_panels(&extra, near);
    let ne = exponents.len();
    let sums = ev.workers().map(panels.len(), |k| {
        let (u, v) = panels[k];
        let wy = prob.weight.density(0.5 * (u + v));
        let mut ps = PanelSum::default();
        eng.gl.for_each(u, v, |y, wt| {
            let row = eng.row(y);
            let m = wt * wy;
            for e in 0..ne {
                ps.s[e] += m * row.s[e];
                if let Some(q) = root_q {
                    ps.roots[e] += m * row.s[e].powf(1.0 / q);
                }
            }
            ps.kmass += m * row.mass;
            ps.omass += m;
            ps.max_row = ps.max_row.max(row.mass);
            ps.n += row.n;
        });
        ps
    });
    let mut s = vec![Neumaier::new(); ne];
    let mut r = vec![Neumaier::new(); ne];
    let mut km = Neumaier::new();
    let mut max_row: f64 = 0.0;
    let mut n = 0;
    for ps in &sums {
        for e in 0..ne {
            s[e].add(ps.s[e]);
            r[e].add(ps.roots[e]);
        }
        km.add(ps.kmass);
        max_row = max_row.max(ps.max_row);
        n += ps.n;
    }
    Ok(Moments {
        exponents: exponents.to_vec(),
        sums: s.iter().map(|a| a.value()).collect(),
        root_sums: if root_q.is_some() { r.iter().map(|a| a.value()).collect() } else { vec![0.0; ne] },
        kernel_mass: km.value(),
        max_row_mass: max_row,
        outer_mass: prob.weight.mass(prob.outer.0, prob.outer.1),
        pairs: n,
        diag: 0,
    })
}

pub fn lambda(
    ev: &Evaluator,
    prob: &Problem,
    p: f64,
    delta: f64,
    phi: &PhiSpec,
    anchor: Anchor,
) -> Result<(f64, u64, u64)> {
    let gl = GaussLegendre::new(ev.gl_points);
    let levels: Vec<f64> = phi.features().iter().map(|t| delta * t).filter(|l| *l > 0.0).collect();
    let pl = &prob.pl;
    let dp = delta.powf(p);
    let row = |y: f64| -> (f64, u64) {
        let ky = pl.piece(y);
        let fy = pl.eval(y);
        let (lo, hi) = prob.inner;
        let mut cuts: Vec<f64> = prob.features_in(lo, hi).to_vec();
        cuts.push(y);
        for k in 0..pl.pieces() {
            let s = pl.slope_of(k);
            if s == 0.0 {
                continue;
            }
            let (x0, x1) = (pl.knots()[k], pl.knots()[k + 1]);
            let v0 = pl.values()[k];
            for l in &levels {
                for target in [fy - l, fy + l] {
                    let x = x0 + (target - v0) / s;
                    if x > x0 && x < x1 {
                        cuts.push(x);
                    }
                }
            }
        }
        quad::clean_points(lo, hi, &mut cuts);
        let mut panels = Vec::new();
        inner_panels(&cuts, y, Some(DIAG_GRADE), &mut panels);
        let mut acc = 0.0;
        let mut n = 0;
        for (u, v) in panels {
            let wx = prob.weight.density(0.5 * (u + v));
            gl.for_each(u, v, |x, wt| {
                n += 1;
                let d = (x - y).abs();
                let ph = phi.eval(prob.quotient(x, y, ky) * d / delta);
                if ph == 0.0 {
                    return;
                }
                let norm = match anchor {
                    Anchor::XBall => prob.ball(x, d),
                    Anchor::YBall => prob.ball(y, d),
                    Anchor::AhlforsPower { q } => d.powf(q),
                };
                acc += wt * wx * dp * ph / (norm * d.powf(p));
            });
        }
        (acc, n)
    };
    let mut extra = Vec::new();
    for t in &prob.features {
        for s in &prob.slopes {
            for l in &levels {
                extra.push(t - l / s);
                extra.push(t + l / s);
            }
        }
    }
    let eng = Engine { prob, gl: GaussLegendre::new(ev.gl_points), ker: Ker::Window { r: 1.0, q: None }, exps: &[] };
    let panels = eng.outer_panels(&extra, true);
    let sums = ev.workers().map(panels.len(), |k| {
        let (u, v) = panels[k];
        let wy = prob.weight.density(0.5 * (u + v));
        let mut s = 0.0;
        let mut n = 0;
        gl.for_each(u, v, |y, wt| {
            let (r, c) = row(y);
            s += wt * wy * r;
            n += c;
        });
        (s, n)
    });
    let mut acc = Neumaier::new();
    let mut n = 0;
    for (s, c) in sums {
        acc.add(s);
        n += c;
    }
    Ok((acc.value(), n, 0))
}

/// `φ` as monomials in `t` on consecutive ranges: `(t0, t1, [(c, e)])`.
fn phi_pieces(phi: &PhiSpec) -> Vec<(f64, f64, Vec<(f64, f64)>)> {
    use crate::phi::PhiKind;
    let s = phi.scale;
    match &phi.kind {
        PhiKind::Step => vec![(1.0, f64::INFINITY, vec![(s, 0.0)])],
        PhiKind::Clamp { power } => vec![(0.0, 1.0, vec![(s, *power)]), (1.0, f64::INFINITY, vec![(s, 0.0)])],
        PhiKind::Table(k) => {
            let mut out = Vec::with_capacity(k.len());
            for w in k.windows(2) {
                let (a, b) = (w[0], w[1]);
                let slope = (b.1 - a.1) / (b.0 - a.0);
                out.push((a.0, b.0, vec![(s * (a.1 - slope * a.0), 0.0), (s * slope, 1.0)]));
            }
            let last = k[k.len() - 1];
            out.push((last.0, f64::INFINITY, vec![(s * last.1, 0.0)]));
            out
        }
    }
}

/// `∫_a^b r^e dr`.
fn power_integral(a: f64, b: f64, e: f64) -> Result<f64> {
    if (e + 1.0).abs() < 1e-12 {
        if a <= 0.0 {
            return Err(Error::Divergent("Lambda kernel is not integrable at the diagonal".into()));
        }
        return Ok((b / a).ln());
    }
    if a <= 0.0 && e + 1.0 < 0.0 {
        return Err(Error::Divergent("Lambda kernel is not integrable at the diagonal".into()));
    }
    Ok((b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0))
}

/// `Λ` for the affine map `x ↦ a · x` on the unit square with the
/// translation-invariant normalizer `d^Q`.
///
/// The double integral reduces to `∫ K(h) A(h) dh` over `[-1, 1]²`, where
/// `A(h) = (1 - |h₁|)(1 - |h₂|)` is the overlap area of the square with its
/// translate. The radial integral is closed form piece by piece in `φ`;
/// the angle is integrated by Gauss-Legendre between the directions where
/// the radial integrand changes form.
pub fn lambda_planar_affine(ev: &Evaluator, a: [f64; 2], p: f64, delta: f64, phi: &PhiSpec, q: f64) -> Result<f64> {
    use std::f64::consts::{FRAC_PI_4, TAU};
    if !(delta > 0.0) || !(q > 0.0) || !(p >= 1.0) {
        return Err(Error::param("delta/Q/p", "need delta > 0, Q > 0, p >= 1"));
    }
    let norm_a = a[0].hypot(a[1]);
    if norm_a == 0.0 {
        return Ok(0.0);
    }
    let pieces = phi_pieces(phi);
    let dp = delta.powf(p);
    let base = 1.0 - q - p;
    let radial = |theta: f64| -> Result<f64> {
        let (s, c) = theta.sin_cos();
        let u = (a[0] * c + a[1] * s).abs();
        let (ac, as_) = (c.abs(), s.abs());
        let rmax = 1.0 / ac.max(as_);
        if u == 0.0 {
            return Ok(0.0);
        }
        let mut total = 0.0;
        for (t0, t1, terms) in &pieces {
            let r0 = (delta * t0 / u).min(rmax);
            let r1 = if t1.is_finite() { (delta * t1 / u).min(rmax) } else { rmax };
            if r1 <= r0 {
                continue;
            }
            for &(coef, e) in terms {
                if coef == 0.0 {
                    continue;
                }
                let k = coef * (u / delta).powf(e);
                let ex = e + base;
                let poly = power_integral(r0, r1, ex)? - (ac + as_) * power_integral(r0, r1, ex + 1.0)?
                    + ac * as_ * power_integral(r0, r1, ex + 2.0)?;
                total += k * poly;
            }
        }
        Ok(dp * total)
    };
    // angles where the radial integrand changes form
    let mut cuts: Vec<f64> = (0..=8).map(|k| k as f64 * FRAC_PI_4).collect();
    let perp = a[1].atan2(a[0]) + 0.5 * std::f64::consts::PI;
    let wrap = |t: f64| t.rem_euclid(TAU);
    cuts.push(wrap(perp));
    cuts.push(wrap(perp + std::f64::consts::PI));
    let levels: Vec<f64> = pieces.iter().flat_map(|(t0, t1, _)| [*t0, *t1]).filter(|t| t.is_finite() && *t > 0.0).collect();
    for l in levels {
        // u = δ l max(|cos|, |sin|): solve on each branch of the max
        let k = delta * l;
        for (sgn_a, sgn_b) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            // a₁ cos + a₂ sin = ±k cos  and  = ±k sin
            let t1 = (sgn_a * k - a[0]).atan2(a[1]);
            let t2 = (-a[0]).atan2(a[1] - sgn_b * k);
            for t in [t1, t1 + std::f64::consts::PI, t2, t2 + std::f64::consts::PI] {
                cuts.push(wrap(t));
            }
        }
    }
    quad::clean_points(0.0, TAU, &mut cuts);
    let gl = GaussLegendre::new(ev.gl_points.max(12));
    let mut acc = Neumaier::new();
    for w in cuts.windows(2) {
        let panels = 16;
        let hw = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let (lo, hi) = (w[0] + k as f64 * hw, w[0] + (k + 1) as f64 * hw);
            let mut err = None;
            let v = gl.integrate(lo, hi, |t| match radial(t) {
                Ok(v) => v,
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
            acc.add(v);
        }
    }
    Ok(acc.value())
}
