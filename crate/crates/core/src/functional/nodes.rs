//! Node-pair quadrature: `∫∫ F dμ dμ ≈ Σ_y Σ_{x ≠ y} F(x, y) m_x m_y`.
//!
//! Self pairs are skipped (points carry no mass). Window and radial kernels
//! iterate only over nodes in their support. Radial kernels on intervals use
//! the exact cell average of the profile, so support edges carry fractional
//! weight instead of depending on floating ties at `d = R`.

use super::{Anchor, Evaluator, Moments, Normalizer, Region};
use crate::funcspace::SampledFunction;
use crate::mollifier::{Family, MollifierSpec, RadialProfile};
use crate::phi::PhiSpec;
use crate::space::{Space, SpaceKind};
use crate::sum::{Neumaier, BLOCK};
use crate::Result;

pub const MAX_EXPONENTS: usize = 4;

#[derive(Debug, Clone, Copy)]
enum Pow {
    Zero,
    One,
    Two,
    Three,
    Four,
    Int(i32),
    Real(f64),
}

impl Pow {
    fn of(e: f64) -> Pow {
        if e == 0.0 {
            Pow::Zero
        } else if e == 1.0 {
            Pow::One
        } else if e == 2.0 {
            Pow::Two
        } else if e == 3.0 {
            Pow::Three
        } else if e == 4.0 {
            Pow::Four
        } else if e.fract() == 0.0 && e.abs() < 64.0 {
            Pow::Int(e as i32)
        } else {
            Pow::Real(e)
        }
    }

    #[inline(always)]
    fn apply(self, a: f64) -> f64 {
        match self {
            Pow::Zero => 1.0,
            Pow::One => a,
            Pow::Two => a * a,
            Pow::Three => a * a * a,
            Pow::Four => (a * a) * (a * a),
            Pow::Int(n) => a.powi(n),
            Pow::Real(e) => a.powf(e),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Row {
    m: [f64; MAX_EXPONENTS],
    mass: f64,
    pairs: u64,
    diag: u64,
}

/// Accumulator for the general path.
#[derive(Clone, Copy, Default)]
struct Acc {
    s: [f64; MAX_EXPONENTS],
    kw: f64,
    km: f64,
    n: u64,
}

impl Acc {
    #[inline(always)]
    fn add(&mut self, pows: &[Pow], a: f64, w: f64) {
        for (k, p) in pows.iter().enumerate() {
            self.s[k] += w * p.apply(a);
        }
        self.kw += w;
        self.n += 1;
    }
}

/// Σ over a contiguous 1D slice with plain lanes; returns
/// `[Σ m k(d) pw(a), Σ m k(d), Σ m]`.
#[inline(always)]
fn pass_1d<K: Fn(f64) -> f64, P: Fn(f64) -> f64>(
    xs: &[f64],
    vs: &[f64],
    ms: &[f64],
    xi: f64,
    vi: f64,
    k: K,
    pw: P,
) -> [f64; 3] {
    let n = xs.len().min(vs.len()).min(ms.len());
    let (xs, vs, ms) = (&xs[..n], &vs[..n], &ms[..n]);
    let mut s = [0.0f64; 4];
    let mut kw = [0.0f64; 4];
    let mut km = [0.0f64; 4];
    let cx = xs.chunks_exact(4);
    let cv = vs.chunks_exact(4);
    let cm = ms.chunks_exact(4);
    let (rx, rv, rm) = (cx.remainder(), cv.remainder(), cm.remainder());
    for ((x, v), m) in cx.zip(cv).zip(cm) {
        for l in 0..4 {
            let d = (x[l] - xi).abs();
            let a = (v[l] - vi).abs() / d;
            let w = m[l] * k(d);
            s[l] += w * pw(a);
            kw[l] += w;
            km[l] += m[l];
        }
    }
    for ((x, v), m) in rx.iter().zip(rv).zip(rm) {
        let d = (x - xi).abs();
        let a = (v - vi).abs() / d;
        let w = m * k(d);
        s[0] += w * pw(a);
        kw[0] += w;
        km[0] += m;
    }
    [
        (s[0] + s[1]) + (s[2] + s[3]),
        (kw[0] + kw[1]) + (kw[2] + kw[3]),
        (km[0] + km[1]) + (km[2] + km[3]),
    ]
}

/// `pass_1d` on both sides of node `i` within `lo..hi`.
#[inline(always)]
fn window_sides<K: Fn(f64) -> f64 + Copy, P: Fn(f64) -> f64 + Copy>(
    xs: &[f64],
    vs: &[f64],
    ms: &[f64],
    i: usize,
    lo: usize,
    hi: usize,
    k: K,
    pw: P,
) -> [f64; 3] {
    let (xi, vi) = (xs[i], vs[i]);
    let a = pass_1d(&xs[lo..i], &vs[lo..i], &ms[lo..i], xi, vi, k, pw);
    let b = pass_1d(&xs[i + 1..hi], &vs[i + 1..hi], &ms[i + 1..hi], xi, vi, k, pw);
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn window_dispatch<K: Fn(f64) -> f64 + Copy>(
    xs: &[f64],
    vs: &[f64],
    ms: &[f64],
    i: usize,
    lo: usize,
    hi: usize,
    k: K,
    p: Pow,
) -> [f64; 3] {
    match p {
        Pow::Zero => window_sides(xs, vs, ms, i, lo, hi, k, |_| 1.0),
        Pow::One => window_sides(xs, vs, ms, i, lo, hi, k, |a| a),
        Pow::Two => window_sides(xs, vs, ms, i, lo, hi, k, |a| a * a),
        Pow::Three => window_sides(xs, vs, ms, i, lo, hi, k, |a| a * a * a),
        Pow::Four => window_sides(xs, vs, ms, i, lo, hi, k, |a| (a * a) * (a * a)),
        Pow::Int(n) => window_sides(xs, vs, ms, i, lo, hi, k, move |a: f64| a.powi(n)),
        Pow::Real(e) => window_sides(xs, vs, ms, i, lo, hi, k, move |a: f64| a.powf(e)),
    }
}

#[derive(Clone, Copy)]
enum Kernel<'a> {
    Flat { r: f64 },
    Power { r: f64, q: f64 },
    Radial(&'a RadialProfile),
    Fractional { s: f64, p: f64 },
}

/// Offsets of a closed disc on a regular grid, one row per `dj`, with
/// precomputed `1/d` and kernel values. The center entry has both set to 0.
struct Stencil {
    rows: Vec<StencilRow>,
}

struct StencilRow {
    dj: isize,
    w: isize,
    inv_d: Vec<f64>,
    k: Vec<f64>,
}

/// Relative slack on `d ≤ R`, so lattice points exactly on the circle are
/// kept regardless of rounding in the coordinates.
pub const DISC_TIE: f64 = 1e-12;

impl Stencil {
    fn new(space: &Space, prof: &RadialProfile) -> Stencil {
        let (nx, ny) = space.grid_shape();
        let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
        let big_r = prof.support();
        let r2 = big_r * big_r * (1.0 + DISC_TIE);
        let jmax = (big_r / hy).floor() as isize + 1;
        let mut rows = Vec::new();
        for dj in -jmax..=jmax {
            let y = dj as f64 * hy;
            if y * y > r2 {
                continue;
            }
            let mut w = 0isize;
            while ((w + 1) as f64 * hx).powi(2) + y * y <= r2 {
                w += 1;
            }
            let mut inv_d = Vec::with_capacity((2 * w + 1) as usize);
            let mut k = Vec::with_capacity((2 * w + 1) as usize);
            for di in -w..=w {
                if di == 0 && dj == 0 {
                    inv_d.push(0.0);
                    k.push(0.0);
                    continue;
                }
                let d = (di as f64 * hx).hypot(y);
                inv_d.push(1.0 / d);
                k.push(prof.eval(d.min(big_r)));
            }
            rows.push(StencilRow { dj, w, inv_d, k });
        }
        Stencil { rows }
    }
}

#[inline(always)]
fn stencil_pass<P: Fn(f64) -> f64>(vs: &[f64], ms: &[f64], inv_d: &[f64], k: &[f64], vi: f64, pw: P) -> [f64; 2] {
    let n = vs.len().min(ms.len()).min(inv_d.len()).min(k.len());
    let (vs, ms, inv_d, k) = (&vs[..n], &ms[..n], &inv_d[..n], &k[..n]);
    let mut s = [0.0f64; 4];
    let mut kw = [0.0f64; 4];
    let mut t = 0;
    while t + 4 <= n {
        for l in 0..4 {
            let a = (vs[t + l] - vi).abs() * inv_d[t + l];
            let w = ms[t + l] * k[t + l];
            s[l] += w * pw(a);
            kw[l] += w;
        }
        t += 4;
    }
    while t < n {
        let a = (vs[t] - vi).abs() * inv_d[t];
        let w = ms[t] * k[t];
        s[0] += w * pw(a);
        kw[0] += w;
        t += 1;
    }
    [(s[0] + s[1]) + (s[2] + s[3]), (kw[0] + kw[1]) + (kw[2] + kw[3])]
}

struct Ctx<'a> {
    stencil: Option<Stencil>,
    space: &'a Space,
    vs: &'a [f64],
    kernel: Kernel<'a>,
    pows: Vec<Pow>,
    inner: Option<&'a [bool]>,
    normalizer: Normalizer,
}

impl Ctx<'_> {
    fn row(&self, i: usize) -> Row {
        match (self.kernel, self.space.kind()) {
            (Kernel::Flat { r } | Kernel::Power { r, .. }, SpaceKind::Interval) if self.inner.is_none() => {
                self.row_window_1d_fast(i, r)
            }
            (Kernel::Radial(prof), SpaceKind::Interval) => self.row_radial_1d(i, prof),
            (Kernel::Radial(_), SpaceKind::Planar) if self.inner.is_none() => self.row_radial_2d(i),
            _ => self.row_general(i),
        }
    }

    fn finish_window(&self, i: usize, r: f64, acc: Acc) -> Row {
        let norm = match self.normalizer {
            Normalizer::Discrete => acc.km,
            Normalizer::Analytic => self.space.ball_measure_at(self.space.point(i), r),
        };
        let mut row = Row { pairs: acc.n, diag: 1, ..Row::default() };
        if norm <= 0.0 {
            return row;
        }
        let scale = match self.kernel {
            Kernel::Power { q, .. } => 1.0 / (r.powf(q) * norm),
            _ => 1.0 / norm,
        };
        for k in 0..self.pows.len() {
            row.m[k] = acc.s[k] * scale;
        }
        row.mass = acc.kw * scale;
        row
    }

    fn row_window_1d_fast(&self, i: usize, r: f64) -> Row {
        let sp = self.space;
        let (xs, ms) = (sp.xs(), sp.masses());
        let range = sp.range_within(xs[i], r);
        let (lo, hi) = (range.start, range.end);
        let mut acc = Acc { n: (hi - lo).saturating_sub(1) as u64, ..Acc::default() };
        for (k, &p) in self.pows.iter().enumerate() {
            let out = match self.kernel {
                Kernel::Flat { .. } => window_dispatch(xs, self.vs, ms, i, lo, hi, |_| 1.0, p),
                Kernel::Power { q, .. } => match Pow::of(q) {
                    Pow::One => window_dispatch(xs, self.vs, ms, i, lo, hi, |d| d, p),
                    Pow::Two => window_dispatch(xs, self.vs, ms, i, lo, hi, |d| d * d, p),
                    _ => window_dispatch(xs, self.vs, ms, i, lo, hi, move |d: f64| d.powf(q), p),
                },
                _ => unreachable!(),
            };
            acc.s[k] = out[0];
            acc.kw = out[1];
            acc.km = out[2];
        }
        self.finish_window(i, r, acc)
    }

    fn row_radial_1d(&self, i: usize, prof: &RadialProfile) -> Row {
        let sp = self.space;
        let (e, dens, vs) = (sp.edges(), sp.densities(), self.vs);
        let y = sp.xs()[i];
        let big_r = prof.support();
        let lo = e.partition_point(|t| *t <= y - big_r).saturating_sub(1);
        let hi = e.partition_point(|t| *t < y + big_r).min(sp.len());
        let single = prof.steps().len() == 1;
        let (t0, v0) = prof.steps()[0];
        let prim = |u: f64| if single { v0 * u.clamp(0.0, t0) } else { prof.primitive(u.max(0.0)) };
        let mut acc = Acc::default();
        let mut diag = 0;
        for j in lo..hi {
            if j == i {
                diag += 1;
                continue;
            }
            if let Some(m) = self.inner {
                if !m[j] {
                    continue;
                }
            }
            let (a0, b0) = (e[j], e[j + 1]);
            let integral = if a0 >= y {
                prim(b0 - y) - prim(a0 - y)
            } else {
                prim(y - a0) - prim(y - b0)
            };
            if integral <= 0.0 {
                continue;
            }
            let w = dens[j] * integral;
            let d = (sp.xs()[j] - y).abs();
            let a = (vs[j] - vs[i]).abs() / d;
            acc.add(&self.pows, a, w);
        }
        let mut row = Row { pairs: acc.n, diag, mass: acc.kw, ..Row::default() };
        row.m[..self.pows.len()].copy_from_slice(&acc.s[..self.pows.len()]);
        row
    }

    fn row_radial_2d(&self, i: usize) -> Row {
        let sp = self.space;
        let st = self.stencil.as_ref().expect("stencil");
        let (nx, ny) = sp.grid_shape();
        let (ix, jy) = ((i % nx) as isize, (i / nx) as isize);
        let (vs, ms) = (self.vs, sp.masses());
        let vi = vs[i];
        let mut row = Row { diag: 1, ..Row::default() };
        let mut count = 0u64;
        for (e, &p) in self.pows.iter().enumerate() {
            let mut s = 0.0;
            let mut kw = 0.0;
            for r in &st.rows {
                let jj = jy + r.dj;
                if jj < 0 || jj >= ny as isize {
                    continue;
                }
                let lo = (-r.w).max(-ix);
                let hi = r.w.min(nx as isize - 1 - ix);
                let base = (jj * nx as isize + ix) as usize;
                let (a, b) = ((base as isize + lo) as usize, (base as isize + hi) as usize + 1);
                let (ta, tb) = ((lo + r.w) as usize, (hi + r.w) as usize + 1);
                let (v, m, idn, k) = (&vs[a..b], &ms[a..b], &r.inv_d[ta..tb], &r.k[ta..tb]);
                let out = match p {
                    Pow::Zero => stencil_pass(v, m, idn, k, vi, |_| 1.0),
                    Pow::One => stencil_pass(v, m, idn, k, vi, |a| a),
                    Pow::Two => stencil_pass(v, m, idn, k, vi, |a| a * a),
                    Pow::Three => stencil_pass(v, m, idn, k, vi, |a| a * a * a),
                    Pow::Four => stencil_pass(v, m, idn, k, vi, |a| (a * a) * (a * a)),
                    Pow::Int(n) => stencil_pass(v, m, idn, k, vi, move |a: f64| a.powi(n)),
                    Pow::Real(x) => stencil_pass(v, m, idn, k, vi, move |a: f64| a.powf(x)),
                };
                s += out[0];
                kw += out[1];
                if e == 0 {
                    count += (tb - ta) as u64;
                }
            }
            row.m[e] = s;
            row.mass = kw;
        }
        row.pairs = count - 1;
        row
    }

    fn row_general(&self, i: usize) -> Row {
        let sp = self.space;
        let ms = sp.masses();
        let vs = self.vs;
        let yp = sp.point(i);
        let mut acc = Acc::default();
        let mut diag = 0u64;
        let inner = self.inner;
        let mut visit = |j: usize, d: f64, w_kernel: f64| {
            let m = ms[j];
            acc.km += m;
            if inner.is_some_and(|mk| !mk[j]) {
                return;
            }
            let a = (vs[j] - vs[i]).abs() / d;
            acc.add(&self.pows, a, m * w_kernel);
        };
        match self.kernel {
            Kernel::Flat { r } | Kernel::Power { r, .. } => {
                let q = match self.kernel {
                    Kernel::Power { q, .. } => Some(q),
                    _ => None,
                };
                let kfun = |d: f64| q.map_or(1.0, |q| d.powf(q));
                match sp.kind() {
                    SpaceKind::Interval => {
                        for j in sp.range_within(yp[0], r) {
                            if j == i {
                                diag += 1;
                                continue;
                            }
                            let d = (sp.xs()[j] - yp[0]).abs();
                            visit(j, d, kfun(d));
                        }
                    }
                    SpaceKind::Planar => {
                        sp.for_each_planar_within(i, r, |j| {
                            if j == i {
                                diag += 1;
                                return;
                            }
                            let d = sp.dist(i, j);
                            visit(j, d, kfun(d));
                        });
                    }
                }
                let mut row = self.finish_window(i, r, acc);
                row.diag = diag;
                return row;
            }
            Kernel::Radial(prof) => {
                // planar: point evaluation on the closed support
                let big_r = prof.support();
                let r2 = big_r * big_r * (1.0 + DISC_TIE);
                let (nx, ny) = sp.grid_shape();
                let (xs, ys) = (sp.xs(), sp.ys());
                let jlo = ((yp[1] - big_r) * ny as f64).floor().max(0.0) as usize;
                let jhi = (((yp[1] + big_r) * ny as f64).ceil() as usize + 1).min(ny);
                let ilo = ((yp[0] - big_r) * nx as f64).floor().max(0.0) as usize;
                let ihi = (((yp[0] + big_r) * nx as f64).ceil() as usize + 1).min(nx);
                let single = prof.steps().len() == 1;
                let v0 = prof.steps()[0].1;
                for jy in jlo..jhi {
                    let dy = ys[jy * nx] - yp[1];
                    let dy2 = dy * dy;
                    if dy2 > r2 {
                        continue;
                    }
                    for ix in ilo..ihi {
                        let j = jy * nx + ix;
                        let dx = xs[j] - yp[0];
                        let d2 = dx * dx + dy2;
                        if d2 > r2 {
                            continue;
                        }
                        if j == i {
                            diag += 1;
                            continue;
                        }
                        let d = d2.sqrt();
                        let kv = if single { v0 } else { prof.eval(d.min(big_r)) };
                        visit(j, d, kv);
                    }
                }
            }
            Kernel::Fractional { s, p } => {
                let e = p * (1.0 - s);
                for j in 0..sp.len() {
                    if j == i {
                        diag += 1;
                        continue;
                    }
                    let d = sp.dist(i, j);
                    let kv = (1.0 - s) * d.powf(e) / sp.ball_measure_at(yp, d);
                    visit(j, d, kv);
                }
            }
        }
        let mut row = Row { pairs: acc.n, diag, mass: acc.kw, ..Row::default() };
        row.m[..self.pows.len()].copy_from_slice(&acc.s[..self.pows.len()]);
        row
    }
}

fn kernel_of(moll: &MollifierSpec) -> Kernel<'_> {
    match &moll.family {
        Family::FlatWindow { r } => Kernel::Flat { r: *r },
        Family::WindowPower { r, q } => Kernel::Power { r: *r, q: *q },
        Family::EuclideanRadial(p) | Family::Custom(p) => Kernel::Radial(p),
        Family::Fractional { s } => Kernel::Fractional { s: *s, p: moll.p },
    }
}

/// Compute rows in parallel blocks, then reduce in index order.
fn collect_rows<F: Fn(usize) -> Row + Sync>(ev: &Evaluator, n: usize, outer: Option<&[bool]>, row: F) -> Vec<Row> {
    let n_blocks = n.div_ceil(BLOCK);
    let blocks: Vec<Vec<Row>> = ev.workers().map(n_blocks, |b| {
        let lo = b * BLOCK;
        let hi = (lo + BLOCK).min(n);
        (lo..hi)
            .map(|i| if outer.map_or(true, |m| m[i]) { row(i) } else { Row::default() })
            .collect()
    });
    blocks.into_iter().flatten().collect()
}

pub(super) fn moments(
    ev: &Evaluator,
    space: &Space,
    f: &SampledFunction,
    moll: &MollifierSpec,
    exponents: &[f64],
    root_q: Option<f64>,
    region: &Region,
) -> Result<Moments> {
    let kernel = kernel_of(moll);
    let stencil = match (kernel, space.kind()) {
        (Kernel::Radial(prof), SpaceKind::Planar) => Some(Stencil::new(space, prof)),
        _ => None,
    };
    let ctx = Ctx {
        stencil,
        space,
        vs: &f.values,
        kernel,
        pows: exponents.iter().map(|e| Pow::of(*e)).collect(),
        inner: region.inner(),
        normalizer: ev.normalizer,
    };
    let outer = region.outer();
    let rows = collect_rows(ev, space.len(), outer, |i| ctx.row(i));
    let ne = exponents.len();
    let ms = space.masses();
    let mut sums = vec![Neumaier::new(); ne];
    let mut roots = vec![Neumaier::new(); ne];
    let mut kmass = Neumaier::new();
    let mut omass = Neumaier::new();
    let mut max_row: f64 = 0.0;
    let (mut pairs, mut diag) = (0u64, 0u64);
    for (i, row) in rows.iter().enumerate() {
        if outer.is_some_and(|m| !m[i]) {
            continue;
        }
        let m = ms[i];
        for k in 0..ne {
            sums[k].add(m * row.m[k]);
            if let Some(q) = root_q {
                roots[k].add(m * row.m[k].powf(1.0 / q));
            }
        }
        kmass.add(m * row.mass);
        omass.add(m);
        max_row = max_row.max(row.mass);
        pairs += row.pairs;
        diag += row.diag;
    }
    Ok(Moments {
        exponents: exponents.to_vec(),
        sums: sums.iter().map(|a| a.value()).collect(),
        root_sums: if root_q.is_some() { roots.iter().map(|a| a.value()).collect() } else { vec![0.0; ne] },
        kernel_mass: kmass.value(),
        max_row_mass: max_row,
        outer_mass: omass.value(),
        pairs,
        diag,
    })
}

#[allow(clippy::too_many_arguments)]
pub(super) fn lambda(
    ev: &Evaluator,
    space: &Space,
    f: &SampledFunction,
    p: f64,
    delta: f64,
    phi: &PhiSpec,
    anchor: Anchor,
    region: &Region,
) -> Result<(f64, u64, u64)> {
    let vs = &f.values;
    let ms = space.masses();
    let inner = region.inner();
    let outer = region.outer();
    let dp = delta.powf(p);
    let pw = Pow::of(p);
    let rows = collect_rows(ev, space.len(), outer, |i| {
        let yp = space.point(i);
        let mut s = 0.0;
        let mut n = 0u64;
        for j in 0..space.len() {
            if j == i || inner.is_some_and(|m| !m[j]) {
                continue;
            }
            n += 1;
            let ph = phi.eval((vs[j] - vs[i]).abs() / delta);
            if ph == 0.0 {
                continue;
            }
            let d = space.dist(i, j);
            let norm = match anchor {
                Anchor::XBall => space.ball_measure_at(space.point(j), d),
                Anchor::YBall => space.ball_measure_at(yp, d),
                Anchor::AhlforsPower { q } => d.powf(q),
            };
            s += ms[j] * dp * ph / (norm * pw.apply(d));
        }
        Row { m: [s, 0.0, 0.0, 0.0], mass: 0.0, pairs: n, diag: 1 }
    });
    let mut acc = Neumaier::new();
    let (mut pairs, mut diag) = (0, 0);
    for (i, row) in rows.iter().enumerate() {
        if outer.is_some_and(|m| !m[i]) {
            continue;
        }
        acc.add(ms[i] * row.m[0]);
        pairs += row.pairs;
        diag += row.diag;
    }
    Ok((acc.value(), pairs, diag))
}
