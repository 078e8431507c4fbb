//! Functions on a [`Space`]: analytic descriptors, sampling, energies, the
//! weight envelope, `Lip_r`, restricted maximal functions, and the
//! telescope audit.

use crate::cantor;
use crate::quad::GaussLegendre;
use crate::space::{Point, Space, SpaceKind, WeightProfile};
use crate::{Error, Result};
use std::collections::VecDeque;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

/// Continuous piecewise-linear function on [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Pl {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl Pl {
    /// Knots must start at 0, end at 1 and be nondecreasing; repeated knots
    /// are dropped.
    pub fn new(xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if xs.len() != vs.len() {
            return Err(Error::LengthMismatch {
                what: "knot values",
                got: vs.len(),
                expected: xs.len(),
            });
        }
        if xs.len() < 2 || xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return Err(Error::param("knots", "must start at 0 and end at 1"));
        }
        if xs.windows(2).any(|w| !(w[1] >= w[0])) || vs.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("knots", "positions must ascend and values be finite"));
        }
        let mut kx = Vec::with_capacity(xs.len());
        let mut kv = Vec::with_capacity(vs.len());
        for (x, v) in xs.into_iter().zip(vs) {
            if kx.last() == Some(&x) {
                continue;
            }
            kx.push(x);
            kv.push(v);
        }
        Ok(Self { xs: kx, vs: kv })
    }

    pub fn knots(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.vs
    }

    /// Piece index containing `x` (clamped).
    #[inline]
    pub fn piece(&self, x: f64) -> usize {
        let k = self.xs.partition_point(|t| *t <= x);
        k.saturating_sub(1).min(self.xs.len() - 2)
    }

    #[inline]
    pub fn slope_of(&self, k: usize) -> f64 {
        (self.vs[k + 1] - self.vs[k]) / (self.xs[k + 1] - self.xs[k])
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = self.piece(x);
        self.vs[k] + self.slope_of(k) * (x - self.xs[k])
    }

    pub fn slope(&self, x: f64) -> f64 {
        self.slope_of(self.piece(x.clamp(0.0, 1.0)))
    }

    pub fn pieces(&self) -> usize {
        self.xs.len() - 1
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        (0..self.pieces()).map(|k| self.slope_of(k).abs()).fold(0.0, f64::max)
    }
}

/// Analytic function descriptors.
#[derive(Debug, Clone, PartialEq)]
pub enum Descriptor {
    /// `a x + b` on [0, 1].
    Affine { a: f64, b: f64 },
    /// `a · p + b` on the unit square.
    Affine2 { a: [f64; 2], b: f64 },
    /// `amp sin(2π freq x + phase)`.
    Sine { amp: f64, freq: f64, phase: f64 },
    /// `c x^k`, `k ≥ 1`.
    Power { c: f64, k: f64 },
    /// Continuous piecewise-linear through the given knots.
    PiecewiseLinear(Pl),
    /// `height · χ_[lo, hi]`.
    Indicator { lo: f64, hi: f64, height: f64 },
    /// Primitive of `2 χ_{A_m}` for the depth-`m` fat Cantor set.
    CantorPrimitive { depth: u32 },
    /// Tent on `(lo, hi)` peaking at `amp` in the middle.
    Bump { lo: f64, hi: f64, amp: f64 },
}

impl Descriptor {
    pub fn is_planar(&self) -> bool {
        matches!(self, Descriptor::Affine2 { .. })
    }

    /// Exact piecewise-linear form when one exists.
    pub fn to_pl(&self) -> Result<Option<Pl>> {
        Ok(match self {
            Descriptor::Affine { a, b } => Some(Pl::new(vec![0.0, 1.0], vec![*b, a + b])?),
            Descriptor::PiecewiseLinear(pl) => Some(pl.clone()),
            Descriptor::CantorPrimitive { depth } => {
                Some(cantor::build_cantor_model(*depth)?.primitive())
            }
            Descriptor::Bump { lo, hi, amp } => {
                let mid = 0.5 * (lo + hi);
                Some(Pl::new(vec![0.0, *lo, mid, *hi, 1.0], vec![0.0, 0.0, *amp, 0.0, 0.0])?)
            }
            _ => None,
        })
    }

    fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Descriptor::Affine { a, b } if !finite(&[*a, *b]) => Err(Error::param("affine", "non-finite")),
            Descriptor::Affine2 { a, b } if !finite(&[a[0], a[1], *b]) => {
                Err(Error::param("affine2", "non-finite"))
            }
            Descriptor::Sine { amp, freq, phase } if !finite(&[*amp, *freq, *phase]) => {
                Err(Error::param("sin", "non-finite"))
            }
            Descriptor::Power { c, k } if !finite(&[*c, *k]) || *k < 1.0 => {
                Err(Error::param("power", "exponent must be at least 1"))
            }
            Descriptor::Indicator { lo, hi, height }
                if !finite(&[*lo, *hi, *height]) || !(0.0 <= *lo && lo < hi && *hi <= 1.0) =>
            {
                Err(Error::param("indicator", "need 0 <= lo < hi <= 1"))
            }
            Descriptor::Bump { lo, hi, amp }
                if !finite(&[*lo, *hi, *amp]) || !(0.0 <= *lo && lo < hi && *hi <= 1.0) =>
            {
                Err(Error::param("bump", "need 0 <= lo < hi <= 1"))
            }
            Descriptor::CantorPrimitive { depth } if !(1..=cantor::MAX_DEPTH).contains(depth) => {
                Err(Error::param("cantor", "depth out of range"))
            }
            _ => Ok(()),
        }
    }

    /// Value at a 1D point (non-PL kinds).
    fn eval_smooth(&self, x: f64) -> f64 {
        match *self {
            Descriptor::Sine { amp, freq, phase } => amp * (2.0 * PI * freq * x + phase).sin(),
            Descriptor::Power { c, k } => c * x.powf(k),
            Descriptor::Indicator { lo, hi, height } => {
                if x >= lo && x <= hi {
                    height
                } else {
                    0.0
                }
            }
            _ => unreachable!(),
        }
    }

    fn deriv_smooth(&self, x: f64) -> f64 {
        match *self {
            Descriptor::Sine { amp, freq, phase } => {
                amp * 2.0 * PI * freq * (2.0 * PI * freq * x + phase).cos()
            }
            Descriptor::Power { c, k } => c * k * x.powf(k - 1.0),
            Descriptor::Indicator { .. } => 0.0,
            _ => unreachable!(),
        }
    }

    /// Points where the 1D derivative is discontinuous or vanishes.
    fn split_points(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        match *self {
            Descriptor::Sine { freq, phase, .. } if freq != 0.0 => {
                // zeros of cos(2π f x + φ): x = (π/2 + kπ - φ) / (2π f)
                let w = 2.0 * PI * freq;
                let (t0, t1) = if w > 0.0 { (w * a + phase, w * b + phase) } else { (w * b + phase, w * a + phase) };
                let k0 = ((t0 - PI / 2.0) / PI).ceil() as i64;
                let k1 = ((t1 - PI / 2.0) / PI).floor() as i64;
                for k in k0..=k1 {
                    pts.push((PI / 2.0 + k as f64 * PI - phase) / w);
                }
            }
            Descriptor::Indicator { lo, hi, .. } => {
                pts.push(lo);
                pts.push(hi);
            }
            _ => {}
        }
        pts
    }

    /// Panel width cap for the smooth kinds.
    fn panel_cap(&self) -> f64 {
        match *self {
            Descriptor::Sine { freq, .. } => 1.0 / (16.0 * freq.abs().max(1.0)),
            Descriptor::Power { k, .. } => 1.0 / (8.0 * k.max(1.0)),
            _ => 1.0,
        }
    }

    /// Jumps `(position, |jump|)` inside (0, 1).
    pub fn jumps(&self) -> Vec<(f64, f64)> {
        match *self {
            Descriptor::Indicator { lo, hi, height } => [lo, hi]
                .into_iter()
                .filter(|t| *t > 0.0 && *t < 1.0)
                .map(|t| (t, height.abs()))
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn parse_list(s: &str, n: usize, what: &str) -> std::result::Result<Vec<f64>, String> {
    let v: std::result::Result<Vec<f64>, _> = s.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| format!("{what}: {e}"))?;
    if v.len() != n {
        return Err(format!("{what}: expected {n} numbers, got {}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(format!("{what}: non-finite number"));
    }
    Ok(v)
}

impl FromStr for Descriptor {
    type Err = Error;

    /// Text forms: `affine:a,b`, `affine2:a1,a2,b`, `sin:amp,freq,phase`,
    /// `power:c,k`, `pl:x0:v0;x1:v1;...`, `indicator:lo,hi,height`,
    /// `cantor:m`, `bump:lo,hi,amp`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, args) = s.split_once(':').unwrap_or((s, ""));
        let cfg = |e: String| Error::Config(format!("function `{s}`: {e}"));
        let d = match kind.trim() {
            "affine" => {
                let v = parse_list(args, 2, "affine").map_err(cfg)?;
                Descriptor::Affine { a: v[0], b: v[1] }
            }
            "affine2" => {
                let v = parse_list(args, 3, "affine2").map_err(cfg)?;
                Descriptor::Affine2 { a: [v[0], v[1]], b: v[2] }
            }
            "sin" => {
                let v = parse_list(args, 3, "sin").map_err(cfg)?;
                Descriptor::Sine { amp: v[0], freq: v[1], phase: v[2] }
            }
            "power" => {
                let v = parse_list(args, 2, "power").map_err(cfg)?;
                Descriptor::Power { c: v[0], k: v[1] }
            }
            "indicator" => {
                let v = parse_list(args, 3, "indicator").map_err(cfg)?;
                Descriptor::Indicator { lo: v[0], hi: v[1], height: v[2] }
            }
            "bump" => {
                let v = parse_list(args, 3, "bump").map_err(cfg)?;
                Descriptor::Bump { lo: v[0], hi: v[1], amp: v[2] }
            }
            "cantor" => {
                let m: u32 = args.trim().parse().map_err(|e| cfg(format!("cantor: {e}")))?;
                Descriptor::CantorPrimitive { depth: m }
            }
            "pl" => {
                let mut xs = Vec::new();
                let mut vs = Vec::new();
                for pair in args.split(';').filter(|t| !t.trim().is_empty()) {
                    let (x, v) = pair
                        .split_once(':')
                        .ok_or_else(|| cfg(format!("pl: knot `{pair}` is not x:v")))?;
                    let x: f64 = x.trim().parse().map_err(|e| cfg(format!("pl: {e}")))?;
                    let v: f64 = v.trim().parse().map_err(|e| cfg(format!("pl: {e}")))?;
                    xs.push(x);
                    vs.push(v);
                }
                Descriptor::PiecewiseLinear(Pl::new(xs, vs)?)
            }
            other => return Err(Error::Config(format!("unknown function kind `{other}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for Descriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Descriptor::Affine { a, b } => write!(f, "affine:{a},{b}"),
            Descriptor::Affine2 { a, b } => write!(f, "affine2:{},{},{b}", a[0], a[1]),
            Descriptor::Sine { amp, freq, phase } => write!(f, "sin:{amp},{freq},{phase}"),
            Descriptor::Power { c, k } => write!(f, "power:{c},{k}"),
            Descriptor::Indicator { lo, hi, height } => write!(f, "indicator:{lo},{hi},{height}"),
            Descriptor::Bump { lo, hi, amp } => write!(f, "bump:{lo},{hi},{amp}"),
            Descriptor::CantorPrimitive { depth } => write!(f, "cantor:{depth}"),
            Descriptor::PiecewiseLinear(pl) => {
                write!(f, "pl:")?;
                for (k, (x, v)) in pl.knots().iter().zip(pl.values()).enumerate() {
                    if k > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{x}:{v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Exact evaluator behind a descriptor.
#[derive(Debug, Clone)]
enum Exact {
    Pl(Pl),
    Smooth(Descriptor),
    Planar([f64; 2], f64),
}

impl Exact {
    fn eval(&self, p: Point) -> f64 {
        match self {
            Exact::Pl(pl) => pl.eval(p[0]),
            Exact::Smooth(d) => d.eval_smooth(p[0]),
            Exact::Planar(a, b) => a[0] * p[0] + a[1] * p[1] + b,
        }
    }

    fn deriv(&self, x: f64) -> f64 {
        match self {
            Exact::Pl(pl) => pl.slope(x),
            Exact::Smooth(d) => d.deriv_smooth(x),
            Exact::Planar(a, _) => a[0].hypot(a[1]),
        }
    }

    fn kinks(&self, a: f64, b: f64) -> Vec<f64> {
        match self {
            Exact::Pl(pl) => {
                let ks = pl.knots();
                let lo = ks.partition_point(|t| *t <= a);
                let hi = ks.partition_point(|t| *t < b);
                ks[lo..hi.max(lo)].to_vec()
            }
            Exact::Smooth(d) => d.split_points(a, b),
            Exact::Planar(..) => Vec::new(),
        }
    }

    fn cap(&self) -> f64 {
        match self {
            Exact::Smooth(d) => d.panel_cap(),
            _ => 1.0,
        }
    }
}

/// Node values plus derivative and jump data.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub values: Vec<f64>,
    /// `|f'|` (1D) or `|∇f|` (2D) at each node.
    pub derivative: Option<Vec<f64>>,
    /// `(position, |jump|)` pairs.
    pub jumps: Vec<(f64, f64)>,
    descriptor: Option<Descriptor>,
    exact: Option<Exact>,
}

impl SampledFunction {
    /// Raw node values without analytic data.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("values", "must be finite"));
        }
        Ok(Self {
            values,
            derivative: None,
            jumps: Vec::new(),
            descriptor: None,
            exact: None,
        })
    }

    pub fn descriptor(&self) -> Option<&Descriptor> {
        self.descriptor.as_ref()
    }

    /// Exact piecewise-linear form, when the descriptor has one.
    pub fn pl(&self) -> Option<&Pl> {
        match &self.exact {
            Some(Exact::Pl(pl)) => Some(pl),
            _ => None,
        }
    }

    /// Exact value at a point, when a descriptor is attached.
    pub fn eval_at(&self, p: Point) -> Option<f64> {
        self.exact.as_ref().map(|e| e.eval(p))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `c f`.
    pub fn scaled(&self, c: f64) -> SampledFunction {
        SampledFunction {
            values: self.values.iter().map(|v| c * v).collect(),
            derivative: self.derivative.as_ref().map(|d| d.iter().map(|v| c.abs() * v).collect()),
            jumps: self.jumps.iter().map(|&(x, j)| (x, c.abs() * j)).collect(),
            descriptor: None,
            exact: None,
        }
    }

    /// `f + c`.
    pub fn shifted(&self, c: f64) -> SampledFunction {
        SampledFunction {
            values: self.values.iter().map(|v| v + c).collect(),
            derivative: self.derivative.clone(),
            jumps: self.jumps.clone(),
            descriptor: None,
            exact: None,
        }
    }
}

/// Sample a descriptor on the nodes of `space`.
pub fn sample_function(space: &Space, spec: &Descriptor) -> Result<SampledFunction> {
    spec.validate()?;
    match (space.kind(), spec.is_planar()) {
        (SpaceKind::Interval, true) => {
            return Err(Error::Unsupported("planar descriptor on an interval".into()))
        }
        (SpaceKind::Planar, false) => {
            return Err(Error::Unsupported("interval descriptor on a planar grid".into()))
        }
        _ => {}
    }
    let exact = match spec {
        Descriptor::Affine2 { a, b } => Exact::Planar(*a, *b),
        _ => match spec.to_pl()? {
            Some(pl) => Exact::Pl(pl),
            None => Exact::Smooth(spec.clone()),
        },
    };
    let n = space.len();
    let mut values = Vec::with_capacity(n);
    let mut deriv = Vec::with_capacity(n);
    for i in 0..n {
        let p = space.point(i);
        values.push(exact.eval(p));
        deriv.push(exact.deriv(p[0]).abs());
    }
    Ok(SampledFunction {
        values,
        derivative: Some(deriv),
        jumps: spec.jumps(),
        descriptor: Some(spec.clone()),
        exact: Some(exact),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnergyKind {
    Variation,
    PEnergy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyValue {
    pub p: f64,
    pub value: f64,
    pub kind: EnergyKind,
}

/// Weight envelope at a point: the smaller adjacent density at a
/// breakpoint, the density elsewhere.
pub fn envelope_at(w: &WeightProfile, x: f64) -> f64 {
    let b = w.breaks();
    let k = b.partition_point(|t| *t < x);
    if k < b.len() && b[k] == x {
        let left = if k > 0 { w.values()[k - 1] } else { f64::INFINITY };
        let right = if k < w.values().len() { w.values()[k] } else { f64::INFINITY };
        left.min(right)
    } else {
        w.density(x)
    }
}

/// Per-node weight envelope of a 1D space.
pub fn weight_envelope(space: &Space) -> Result<Vec<f64>> {
    let w = match (space.kind(), space.weight()) {
        (SpaceKind::Interval, Some(w)) => w,
        _ => return Err(Error::Unsupported("weight envelope needs a 1D space".into())),
    };
    Ok(space.xs().iter().map(|&x| envelope_at(w, x)).collect())
}

/// `∫_a^b h(f(x), f'(x)) w(x) dx` for a 1D exact function, split at every
/// weight break and derivative kink.
fn integrate_exact<H: Fn(f64, f64) -> f64>(
    exact: &Exact,
    w: &WeightProfile,
    a: f64,
    b: f64,
    gl: &GaussLegendre,
    h: H,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mut pts = exact.kinks(a, b);
    let br = w.breaks();
    let lo = br.partition_point(|t| *t <= a);
    let hi = br.partition_point(|t| *t < b);
    pts.extend_from_slice(&br[lo..hi.max(lo)]);
    crate::quad::clean_points(a, b, &mut pts);
    let cap = exact.cap();
    let mut total = 0.0;
    for seg in pts.windows(2) {
        let (u, v) = (seg[0], seg[1]);
        let dens = w.density(0.5 * (u + v));
        let m = ((v - u) / cap).ceil().max(1.0) as usize;
        let step = (v - u) / m as f64;
        let mut s = 0.0;
        for j in 0..m {
            let (pu, pv) = (u + j as f64 * step, if j + 1 == m { v } else { u + (j + 1) as f64 * step });
            let mid = 0.5 * (pu + pv);
            // evaluate the derivative on the open piece to avoid knot ties
            s += gl.integrate(pu, pv, |x| {
                let xd = if x == pu || x == pv { mid } else { x };
                h(exact.eval([x, 0.0]), exact.deriv(xd))
            });
        }
        total += dens * s;
    }
    total
}

/// Maximal runs of consecutive masked cells as coordinate intervals.
fn mask_intervals(space: &Space, mask: Option<&[bool]>) -> Vec<(f64, f64)> {
    let e = space.edges();
    match mask {
        None => vec![(0.0, 1.0)],
        Some(m) => {
            let mut out = Vec::new();
            let mut i = 0;
            while i < m.len() {
                if m[i] {
                    let start = i;
                    while i < m.len() && m[i] {
                        i += 1;
                    }
                    out.push((e[start], e[i]));
                } else {
                    i += 1;
                }
            }
            out
        }
    }
}

/// `E_p(f)` over the whole space.
pub fn energy(space: &Space, f: &SampledFunction, p: f64) -> Result<EnergyValue> {
    energy_on(space, f, p, None)
}

/// `E_p(f, Ω)` with Ω given as a node mask (cells in 1D).
pub fn energy_on(space: &Space, f: &SampledFunction, p: f64, mask: Option<&[bool]>) -> Result<EnergyValue> {
    if !(p >= 1.0) {
        return Err(Error::param("p", "exponent must be at least 1"));
    }
    if let Some(m) = mask {
        if m.len() != space.len() {
            return Err(Error::LengthMismatch { what: "mask", got: m.len(), expected: space.len() });
        }
    }
    let kind = if p == 1.0 { EnergyKind::Variation } else { EnergyKind::PEnergy };
    let value = match (&f.exact, space.kind()) {
        (Some(exact @ (Exact::Pl(_) | Exact::Smooth(_))), SpaceKind::Interval) => {
            let w = space.weight().expect("interval weight");
            let gl = GaussLegendre::new(12);
            let intervals = mask_intervals(space, mask);
            let mut total = 0.0;
            for &(a, b) in &intervals {
                total += integrate_exact(exact, w, a, b, &gl, |_, d| d.abs().powf(p));
            }
            let jumps = jumps_inside(&f.jumps, &intervals);
            if !jumps.is_empty() {
                if p > 1.0 {
                    return Err(Error::Divergent("p-energy of a function with jumps".into()));
                }
                total += jumps.iter().map(|&(x, j)| j * envelope_at(w, x)).sum::<f64>();
            }
            total
        }
        _ => {
            let d = f.derivative.as_ref().ok_or(Error::MissingData("derivative"))?;
            if d.len() != space.len() {
                return Err(Error::LengthMismatch { what: "derivative", got: d.len(), expected: space.len() });
            }
            let mut acc = crate::sum::Neumaier::new();
            for i in 0..space.len() {
                if mask.map_or(true, |m| m[i]) {
                    acc.add(space.masses()[i] * d[i].powf(p));
                }
            }
            let mut total = acc.value();
            if !f.jumps.is_empty() {
                if p > 1.0 {
                    return Err(Error::Divergent("p-energy of a function with jumps".into()));
                }
                if let Some(w) = space.weight() {
                    let intervals = mask_intervals(space, mask);
                    total += jumps_inside(&f.jumps, &intervals)
                        .iter()
                        .map(|&(x, j)| j * envelope_at(w, x))
                        .sum::<f64>();
                }
            }
            total
        }
    };
    Ok(EnergyValue { p, value, kind })
}

fn jumps_inside(jumps: &[(f64, f64)], intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    jumps
        .iter()
        .copied()
        .filter(|&(x, _)| intervals.iter().any(|&(a, b)| x > a && x < b))
        .collect()
}

/// Total variation of a 1D function against a caller-supplied envelope
/// (for limit weights that no finite profile represents).
pub fn variation_with_envelope<E: Fn(f64) -> f64>(f: &SampledFunction, envelope: E) -> Result<f64> {
    let exact = f.exact.as_ref().ok_or(Error::MissingData("descriptor"))?;
    let unit = WeightProfile::uniform(1.0)?;
    let gl = GaussLegendre::new(12);
    let mut pts = exact.kinks(0.0, 1.0);
    crate::quad::clean_points(0.0, 1.0, &mut pts);
    let mut total = 0.0;
    for seg in pts.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        total += envelope(mid) * integrate_exact(exact, &unit, seg[0], seg[1], &gl, |_, d| d.abs());
    }
    total += f.jumps.iter().map(|&(x, j)| j * envelope(x)).sum::<f64>();
    Ok(total)
}

/// `Lip_r f(x) = sup_{y ∈ B(x, r)} |f(y) - f(x)| / r` over nodes.
pub fn lip_field(space: &Space, f: &SampledFunction, r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(Error::param("r", "radius must be positive"));
    }
    let v = &f.values;
    let n = space.len();
    match space.kind() {
        SpaceKind::Interval => {
            // sliding-window max and min; window bounds are monotone in x
            let mut out = vec![0.0; n];
            let mut maxq: VecDeque<usize> = VecDeque::new();
            let mut minq: VecDeque<usize> = VecDeque::new();
            let mut next = 0usize;
            for i in 0..n {
                let range = space.range_within(space.xs()[i], r);
                while next < range.end {
                    while maxq.back().is_some_and(|&j| v[j] <= v[next]) {
                        maxq.pop_back();
                    }
                    maxq.push_back(next);
                    while minq.back().is_some_and(|&j| v[j] >= v[next]) {
                        minq.pop_back();
                    }
                    minq.push_back(next);
                    next += 1;
                }
                while maxq.front().is_some_and(|&j| j < range.start) {
                    maxq.pop_front();
                }
                while minq.front().is_some_and(|&j| j < range.start) {
                    minq.pop_front();
                }
                let hi = v[*maxq.front().unwrap()];
                let lo = v[*minq.front().unwrap()];
                out[i] = (hi - v[i]).max(v[i] - lo) / r;
            }
            Ok(out)
        }
        SpaceKind::Planar => Ok((0..n)
            .map(|i| {
                let mut m: f64 = 0.0;
                space.for_each_planar_within(i, r, |j| m = m.max((v[j] - v[i]).abs()));
                m / r
            })
            .collect()),
    }
}

/// Exact μ-average of a per-cell constant field over `B(c, r)`.
pub fn ball_average_cells(space: &Space, g: &[f64], c: Point, r: f64) -> f64 {
    let (num, den) = ball_moments_cells(space, g, c, r);
    num / den
}

fn ball_moments_cells(space: &Space, g: &[f64], c: Point, r: f64) -> (f64, f64) {
    let mut num = 0.0;
    let mut den = 0.0;
    match space.kind() {
        SpaceKind::Interval => {
            let e = space.edges();
            let lo = e.partition_point(|t| *t <= c[0] - r).saturating_sub(1);
            let hi = e.partition_point(|t| *t < c[0] + r).min(space.len());
            for i in lo..hi {
                let m = space.cell_ball_mass(i, c, r);
                num += m * g[i];
                den += m;
            }
        }
        SpaceKind::Planar => {
            let (nx, ny) = space.grid_shape();
            let ilo = ((c[0] - r) * nx as f64).floor().max(0.0) as usize;
            let ihi = (((c[0] + r) * nx as f64).ceil() as usize).min(nx);
            let jlo = ((c[1] - r) * ny as f64).floor().max(0.0) as usize;
            let jhi = (((c[1] + r) * ny as f64).ceil() as usize).min(ny);
            for j in jlo..jhi {
                for i in ilo..ihi {
                    let k = j * nx + i;
                    let m = space.cell_ball_mass(k, c, r);
                    num += m * g[k];
                    den += m;
                }
            }
        }
    }
    (num, den)
}

/// Exact μ-average of `f` over `B(c, r)`: analytic when a 1D descriptor is
/// attached, cell-constant otherwise.
pub fn ball_average(space: &Space, f: &SampledFunction, c: Point, r: f64) -> f64 {
    match (&f.exact, space.kind()) {
        (Some(exact @ (Exact::Pl(_) | Exact::Smooth(_))), SpaceKind::Interval) => {
            let w = space.weight().expect("interval weight");
            let gl = GaussLegendre::new(8);
            let (a, b) = ((c[0] - r).max(0.0), (c[0] + r).min(1.0));
            integrate_exact(exact, w, a, b, &gl, |v, _| v) / w.mass(a, b)
        }
        _ => ball_average_cells(space, &f.values, c, r),
    }
}

const LADDER: f64 = 1.189_207_115_002_721; // 2^(1/4)

/// `M_R g` at every node: sup of ball averages over `0 < r ≤ R`.
///
/// The radius set is a geometric ladder with ratio 2^(1/4) from `R` down to
/// the cell size, plus (1D) every radius where the ball boundary crosses a
/// cell edge; between such radii a 1D ball average is monotone, so the 1D
/// supremum is exact. The `r → 0` value `g(x)` is included.
pub fn restricted_maximal(space: &Space, g: &[f64], big_r: f64) -> Result<Vec<f64>> {
    if !(big_r > 0.0) {
        return Err(Error::param("R", "radius must be positive"));
    }
    if g.len() != space.len() {
        return Err(Error::LengthMismatch { what: "g", got: g.len(), expected: space.len() });
    }
    if g.iter().any(|v| !(*v >= 0.0)) {
        return Err(Error::param("g", "must be nonnegative"));
    }
    let ladder = radius_ladder(big_r, space.max_spacing() * 0.5);
    let e = space.edges();
    Ok((0..space.len())
        .map(|i| {
            let c = space.point(i);
            let mut best = g[i];
            for &r in &ladder {
                best = best.max(ball_average_cells(space, g, c, r));
            }
            if space.kind() == SpaceKind::Interval {
                let lo = e.partition_point(|t| *t <= c[0] - big_r);
                let hi = e.partition_point(|t| *t < c[0] + big_r);
                for &t in &e[lo..hi] {
                    let r = (t - c[0]).abs();
                    if r > 0.0 && r <= big_r {
                        best = best.max(ball_average_cells(space, g, c, r));
                    }
                }
            }
            best
        })
        .collect())
}

/// Geometric ladder `R, R 2^(-1/4), ...` down to `rmin`.
pub fn radius_ladder(big_r: f64, rmin: f64) -> Vec<f64> {
    let mut out = vec![big_r];
    let mut r = big_r;
    while r / LADDER >= rmin && out.len() < 400 {
        r /= LADDER;
        out.push(r);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TelescopeAudit {
    /// max over sampled y of |f(y) - f_B(y,r)| / (r (M_{λr} g^e(y))^{1/e}).
    pub constant: f64,
    pub sampled: usize,
    /// Centers skipped because the maximal function vanished there.
    pub skipped: usize,
}

/// Measured constant in the telescope estimate at one radius.
pub fn audit_telescope(
    space: &Space,
    f: &SampledFunction,
    g: &[f64],
    r: f64,
    lambda: f64,
    exponent: f64,
    centers: &[usize],
) -> Result<TelescopeAudit> {
    if !(r > 0.0) || !(lambda >= 1.0) || !(exponent >= 1.0) {
        return Err(Error::param("telescope", "need r > 0, lambda >= 1, exponent >= 1"));
    }
    if g.len() != space.len() {
        return Err(Error::LengthMismatch { what: "g", got: g.len(), expected: space.len() });
    }
    let ge: Vec<f64> = g.iter().map(|v| v.abs().powf(exponent)).collect();
    let lad = radius_ladder(lambda * r, space.max_spacing() * 0.5);
    let mut constant: f64 = 0.0;
    let mut skipped = 0;
    for &i in centers {
        let c = space.point(i);
        let fy = f.eval_at(c).unwrap_or(f.values[i]);
        let avg = ball_average(space, f, c, r);
        let mut m = ge[i];
        for &rr in &lad {
            m = m.max(ball_average_cells(space, &ge, c, rr));
        }
        if space.kind() == SpaceKind::Interval {
            let e = space.edges();
            let lo = e.partition_point(|t| *t <= c[0] - lambda * r);
            let hi = e.partition_point(|t| *t < c[0] + lambda * r);
            for &t in &e[lo..hi] {
                let rr = (t - c[0]).abs();
                if rr > 0.0 {
                    m = m.max(ball_average_cells(space, &ge, c, rr));
                }
            }
        }
        if m <= 0.0 {
            if (fy - avg).abs() > 0.0 {
                skipped += 1;
            }
            continue;
        }
        constant = constant.max((fy - avg).abs() / (r * m.powf(1.0 / exponent)));
    }
    Ok(TelescopeAudit { constant, sampled: centers.len(), skipped })
}

/// `∫_a^b |f'|^p w dx` for a piecewise-linear `f`, exact per piece.
pub fn pl_energy(pl: &Pl, w: &WeightProfile, a: f64, b: f64, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::param("p", "exponent must be at least 1"));
    }
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::param("range", "need 0 <= a < b <= 1"));
    }
    let mut cuts: Vec<f64> = pl.knots().to_vec();
    cuts.extend_from_slice(w.breaks());
    cuts.extend_from_slice(&[a, b]);
    crate::quad::clean_points(a, b, &mut cuts);
    let mut acc = crate::sum::Neumaier::new();
    for seg in cuts.windows(2) {
        let mid = 0.5 * (seg[0] + seg[1]);
        let s = pl.slope(mid).abs();
        if s > 0.0 {
            acc.add(s.powf(p) * w.mass(seg[0], seg[1]));
        }
    }
    Ok(acc.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{build_planar_grid, build_weighted_interval};

    fn unit(n: usize) -> Space {
        build_weighted_interval(&[0.0, 1.0], &[1.0], n).unwrap()
    }

    #[test]
    fn parse_roundtrip() {
        for s in ["affine:1,0", "sin:1,2,0.5", "power:1,2", "indicator:0.2,0.4,1", "cantor:3", "bump:0.375,0.625,1", "pl:0:0;0.5:1;1:0", "affine2:1,2,0"] {
            let d: Descriptor = s.parse().unwrap();
            let again: Descriptor = d.to_string().parse().unwrap();
            assert_eq!(d, again);
        }
        for bad in ["", "affine:1", "nope:1", "pl:0:0;0.5", "power:1,0.5", "cantor:99", "indicator:0.5,0.4,1", "sin:1,NaN,0"] {
            assert!(bad.parse::<Descriptor>().is_err(), "{bad}");
        }
    }

    #[test]
    fn sampled_values() {
        let s = unit(1000);
        let f = sample_function(&s, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
        assert!(f.derivative.as_ref().unwrap().iter().all(|d| *d == 1.0));
        let f0 = sample_function(&s, &cantor::bump_descriptor(1.0)).unwrap();
        for (x, v) in s.xs().iter().zip(&f0.values) {
            if *x <= 0.375 || *x >= 0.625 {
                assert_eq!(*v, 0.0);
            }
        }
        let m = cantor::build_cantor_model(3).unwrap();
        let sp = cantor::cantor_space(&m, 512).unwrap();
        let f = sample_function(&sp, &Descriptor::CantorPrimitive { depth: 3 }).unwrap();
        assert_eq!(f.eval_at([1.0, 0.0]).unwrap(), 2.0 * m.l(3));
        let g = build_planar_grid(4, 4).unwrap();
        assert!(sample_function(&g, &Descriptor::Affine { a: 1.0, b: 0.0 }).is_err());
    }

    #[test]
    fn energies() {
        let s = unit(1000);
        let id = sample_function(&s, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
        let e = energy(&s, &id, 1.0).unwrap();
        assert_eq!(e.kind, EnergyKind::Variation);
        assert!((e.value - 1.0).abs() < 1e-14);
        let sq = sample_function(&s, &Descriptor::Power { c: 1.0, k: 2.0 }).unwrap();
        let e = energy(&s, &sq, 2.0).unwrap();
        assert_eq!(e.kind, EnergyKind::PEnergy);
        assert!((e.value - 4.0 / 3.0).abs() < 1e-12);
        assert!(energy(&s, &id, 0.5).is_err());
        let sn = sample_function(&s, &Descriptor::Sine { amp: 1.0, freq: 1.0, phase: 0.0 }).unwrap();
        assert!((energy(&s, &sn, 1.0).unwrap().value - 4.0).abs() < 1e-12);
        let ind = sample_function(&s, &Descriptor::Indicator { lo: 0.25, hi: 0.5, height: 3.0 }).unwrap();
        assert!((energy(&s, &ind, 1.0).unwrap().value - 6.0).abs() < 1e-14);
        assert!(energy(&s, &ind, 2.0).is_err());
        let raw = SampledFunction::from_values(vec![0.0; s.len()]).unwrap();
        assert!(matches!(energy(&s, &raw, 1.0), Err(Error::MissingData(_))));
    }

    #[test]
    fn energy_of_cantor_primitive_and_bump() {
        let m = cantor::build_cantor_model(3).unwrap();
        let sp = cantor::cantor_space(&m, 512).unwrap();
        let f = sample_function(&sp, &Descriptor::CantorPrimitive { depth: 3 }).unwrap();
        let e = energy(&sp, &f, 1.0).unwrap().value;
        assert!((e - m.envelope_tv()).abs() < 1e-13);
        let lim = variation_with_envelope(&f, |_| 1.0).unwrap();
        assert!((lim - m.limit_envelope_tv()).abs() < 1e-13);
        let b = cantor::bump_f0(&sp, 1.0).unwrap();
        assert!((energy(&sp, &b, 1.0).unwrap().value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn envelope_rules() {
        let s = build_weighted_interval(&[0.0, 0.5, 1.0], &[2.0, 1.0], 100).unwrap();
        let w = s.weight().unwrap();
        assert_eq!(envelope_at(w, 0.5), 1.0);
        assert_eq!(envelope_at(w, 0.25), 2.0);
        let env = weight_envelope(&s).unwrap();
        assert!(env.iter().zip(s.densities()).all(|(a, b)| a <= b));
        let c = build_weighted_interval(&[0.0, 1.0], &[3.0], 10).unwrap();
        assert!(weight_envelope(&c).unwrap().iter().all(|v| *v == 3.0));
        assert!(weight_envelope(&build_planar_grid(3, 3).unwrap()).is_err());
    }

    #[test]
    fn lip_field_examples() {
        let s = unit(200);
        let id = sample_function(&s, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
        let l = lip_field(&s, &id, 0.047).unwrap();
        assert!(l.iter().all(|v| *v <= 1.0 + 1e-12));
        // nine cells of width 0.005 fit strictly inside the ball
        assert!((l[100] - 0.045 / 0.047).abs() < 1e-12);
        let c = SampledFunction::from_values(vec![2.0; s.len()]).unwrap();
        assert!(lip_field(&s, &c, 0.1).unwrap().iter().all(|v| *v == 0.0));
        // brute force comparison
        let f = sample_function(&s, &Descriptor::Sine { amp: 1.0, freq: 3.0, phase: 0.1 }).unwrap();
        let l = lip_field(&s, &f, 0.037).unwrap();
        for i in 0..s.len() {
            let mut m: f64 = 0.0;
            for j in 0..s.len() {
                if s.dist(i, j) < 0.037 {
                    m = m.max((f.values[j] - f.values[i]).abs());
                }
            }
            assert_eq!(l[i], m / 0.037);
        }
    }

    #[test]
    fn maximal_examples() {
        let s = unit(100);
        let one = vec![1.0; s.len()];
        let m = restricted_maximal(&s, &one, 0.2).unwrap();
        assert!(m.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let half: Vec<f64> = s.xs().iter().map(|x| if *x < 0.5 { 1.0 } else { 0.0 }).collect();
        let m = restricted_maximal(&s, &half, 0.3).unwrap();
        assert!(m[49] >= 0.5 - 1e-12);
        assert!(restricted_maximal(&s, &vec![-1.0; 100], 0.1).is_err());
    }

    #[test]
    fn telescope_examples() {
        let s = unit(400);
        let id = sample_function(&s, &Descriptor::Affine { a: 1.0, b: 0.0 }).unwrap();
        let centers: Vec<usize> = (0..400).step_by(7).collect();
        let t = audit_telescope(&s, &id, &vec![1.0; 400], 0.05, 2.0, 2.0, &centers).unwrap();
        assert!(t.constant <= 0.5 + 1e-12);
        let c = SampledFunction::from_values(vec![1.0; 400]).unwrap();
        let t = audit_telescope(&s, &c, &vec![1.0; 400], 0.05, 2.0, 2.0, &centers).unwrap();
        assert_eq!(t.constant, 0.0);
    }
}
