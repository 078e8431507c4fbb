//! Naive all-pairs reference for the functional engines.
//!
//! Written as plain double loops over node pairs, with the same
//! discretization rules the engines document: open balls for the window
//! families, cell-averaged radial weights on intervals, closed discs for
//! planar radial kernels, all pairs for the fractional kernel and `Λ`.

#![allow(dead_code)]

use nonlocal_core::functional::nodes::DISC_TIE;
use nonlocal_core::functional::{Anchor, Normalizer};
use nonlocal_core::mollifier::{Family, MollifierSpec, RadialProfile};
use nonlocal_core::phi::PhiSpec;
use nonlocal_core::space::{Space, SpaceKind};

/// μ of the interval ball `(c - r, c + r)` straight from the weight pieces.
pub fn interval_ball(space: &Space, c: f64, r: f64) -> f64 {
    let w = space.weight().expect("weight");
    let (b, v) = (w.breaks(), w.values());
    let (lo, hi) = (c - r, c + r);
    let mut total = 0.0;
    for k in 0..v.len() {
        let a = b[k].max(lo);
        let e = b[k + 1].min(hi);
        if e > a {
            total += v[k] * (e - a);
        }
    }
    total
}

fn ball(space: &Space, c: [f64; 2], r: f64) -> f64 {
    match space.kind() {
        SpaceKind::Interval => interval_ball(space, c[0], r),
        SpaceKind::Planar => space.ball_measure_at(c, r),
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1])
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    dist2(a, b).sqrt()
}

/// `∫_a^b ρ*(|x - y|) dx` for a step profile.
fn profile_on(prof: &RadialProfile, y: f64, a: f64, b: f64) -> f64 {
    let mut total = 0.0;
    let mut prev = 0.0;
    for &(t, v) in prof.steps() {
        // |x - y| in [prev, t): x in (y - t, y - prev] ∪ [y + prev, y + t)
        for (lo, hi) in [(y - t, y - prev), (y + prev, y + t)] {
            let l = lo.max(a);
            let h = hi.min(b);
            if h > l {
                total += v * (h - l);
            }
        }
        prev = t;
    }
    total
}

/// Row moments `M_e(y)` and row mass for every node.
pub struct NaiveRows {
    pub m: Vec<Vec<f64>>,
    pub mass: Vec<f64>,
}

pub fn rows(
    space: &Space,
    vals: &[f64],
    moll: &MollifierSpec,
    exps: &[f64],
    inner: Option<&[bool]>,
    norm: Normalizer,
) -> NaiveRows {
    let n = space.len();
    let ms = space.masses();
    let mut out = NaiveRows { m: vec![vec![0.0; exps.len()]; n], mass: vec![0.0; n] };
    for i in 0..n {
        let y = space.point(i);
        let mut window_mass = 0.0;
        let mut sums = vec![0.0; exps.len()];
        let mut mass = 0.0;
        for j in 0..n {
            if j == i {
                continue;
            }
            let x = space.point(j);
            let d2 = dist2(x, y);
            let d = match space.kind() {
                SpaceKind::Interval => (x[0] - y[0]).abs(),
                SpaceKind::Planar => d2.sqrt(),
            };
            let w = match &moll.family {
                Family::FlatWindow { r } | Family::WindowPower { r, .. } => {
                    let outside = match space.kind() {
                        SpaceKind::Interval => d >= *r,
                        SpaceKind::Planar => d2 >= r * r,
                    };
                    if outside {
                        continue;
                    }
                    window_mass += ms[j];
                    let k = match moll.family {
                        Family::WindowPower { q, .. } => d.powf(q),
                        _ => 1.0,
                    };
                    ms[j] * k
                }
                Family::EuclideanRadial(p) | Family::Custom(p) => match space.kind() {
                    SpaceKind::Interval => {
                        let e = space.edges();
                        space.densities()[j] * profile_on(p, y[0], e[j], e[j + 1])
                    }
                    SpaceKind::Planar => {
                        let big = p.support();
                        if d2 > big * big * (1.0 + DISC_TIE) {
                            continue;
                        }
                        ms[j] * p.eval(d.min(big))
                    }
                },
                Family::Fractional { s } => ms[j] * (1.0 - s) * d.powf(moll.p * (1.0 - s)) / ball(space, y, d),
            };
            if inner.is_some_and(|m| !m[j]) || w == 0.0 {
                continue;
            }
            let a = (vals[j] - vals[i]).abs() / d;
            for (k, e) in exps.iter().enumerate() {
                sums[k] += w * a.powf(*e);
            }
            mass += w;
        }
        let scale = match &moll.family {
            Family::FlatWindow { r } | Family::WindowPower { r, .. } => {
                let nm = match norm {
                    Normalizer::Discrete => window_mass,
                    Normalizer::Analytic => ball(space, y, *r),
                };
                let rq = match moll.family {
                    Family::WindowPower { q, .. } => r.powf(q),
                    _ => 1.0,
                };
                if nm > 0.0 {
                    1.0 / (rq * nm)
                } else {
                    0.0
                }
            }
            _ => 1.0,
        };
        out.m[i] = sums.iter().map(|s| s * scale).collect();
        out.mass[i] = mass * scale;
    }
    out
}

/// `Σ_y m_y M_e(y)` and `Σ_y m_y M_e(y)^{1/q}` over the outer mask.
pub fn totals(space: &Space, r: &NaiveRows, outer: Option<&[bool]>, q: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let ne = r.m.first().map_or(0, |v| v.len());
    let mut s = vec![0.0; ne];
    let mut t = vec![0.0; ne];
    for i in 0..space.len() {
        if outer.is_some_and(|m| !m[i]) {
            continue;
        }
        for k in 0..ne {
            s[k] += space.masses()[i] * r.m[i][k];
            if let Some(q) = q {
                t[k] += space.masses()[i] * r.m[i][k].powf(1.0 / q);
            }
        }
    }
    (s, t)
}

#[allow(clippy::too_many_arguments)]
pub fn lambda(
    space: &Space,
    vals: &[f64],
    p: f64,
    delta: f64,
    phi: &PhiSpec,
    anchor: Anchor,
    outer: Option<&[bool]>,
    inner: Option<&[bool]>,
) -> f64 {
    let ms = space.masses();
    let mut total = 0.0;
    for i in 0..space.len() {
        if outer.is_some_and(|m| !m[i]) {
            continue;
        }
        let y = space.point(i);
        for j in 0..space.len() {
            if j == i || inner.is_some_and(|m| !m[j]) {
                continue;
            }
            let x = space.point(j);
            let d = dist(x, y);
            let norm = match anchor {
                Anchor::XBall => ball(space, x, d),
                Anchor::YBall => ball(space, y, d),
                Anchor::AhlforsPower { q } => d.powf(q),
            };
            let ph = phi.eval((vals[j] - vals[i]).abs() / delta);
            total += ms[i] * ms[j] * delta.powf(p) * ph / (norm * d.powf(p));
        }
    }
    total
}

/// Relative difference with a floor for values near zero.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
