//! Mollifier families and audits of the minorize/majorize conditions.

use crate::space::{self, Space};
use crate::{Error, Result};

/// Piecewise-constant radial profile `ρ*(t)`: value `steps[k].1` on
/// `(steps[k-1].0, steps[k].0]`, zero beyond the last radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    dim: u32,
    steps: Vec<(f64, f64)>,
}

impl RadialProfile {
    pub fn new(dim: u32, steps: Vec<(f64, f64)>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::param("dim", "radial profiles live in dimension 1 or 2"));
        }
        if steps.is_empty() {
            return Err(Error::param("profile", "needs at least one step"));
        }
        if steps.iter().any(|(t, v)| !(*t > 0.0) || !(*v >= 0.0) || !t.is_finite() || !v.is_finite()) {
            return Err(Error::param("profile", "radii must be positive and values nonnegative"));
        }
        if steps.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::param("profile", "radii must strictly ascend"));
        }
        Ok(Self { dim, steps })
    }

    /// `i χ_[0, 1/i]` on the line.
    pub fn indicator_1d(i: f64) -> Result<Self> {
        if !(i > 0.0) || !i.is_finite() {
            return Err(Error::param("i", "must be positive"));
        }
        Self::new(1, vec![(1.0 / i, i)])
    }

    /// `(2 / R²) χ_[0, R]` in the plane.
    pub fn disc_2d(radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param("radius", "must be positive"));
        }
        Self::new(2, vec![(radius, 2.0 / (radius * radius))])
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn steps(&self) -> &[(f64, f64)] {
        &self.steps
    }

    pub fn support(&self) -> f64 {
        self.steps[self.steps.len() - 1].0
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        if self.steps.len() == 1 {
            let (r, v) = self.steps[0];
            return if t <= r { v } else { 0.0 };
        }
        let k = self.steps.partition_point(|s| s.0 < t);
        if k < self.steps.len() {
            self.steps[k].1
        } else {
            0.0
        }
    }

    /// `∫_0^u ρ*(t) dt`.
    pub fn primitive(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        let mut prev = 0.0;
        for &(t, v) in &self.steps {
            if u <= t {
                return acc + v * (u - prev).max(0.0);
            }
            acc += v * (t - prev);
            prev = t;
        }
        acc
    }

    /// `∫_0^∞ ρ*(r) r^(n-1) dr`.
    pub fn moment(&self) -> f64 {
        let n = self.dim as i32;
        let mut prev: f64 = 0.0;
        let mut acc = 0.0;
        for &(t, v) in &self.steps {
            acc += v * (t.powi(n) - prev.powi(n)) / n as f64;
            prev = t;
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `(1 - s) d^(p(1-s)) / μ(B(y, d))`.
    Fractional { s: f64 },
    /// `(d / r)^q χ_B(y,r)(x) / μ(B(y, r))`.
    WindowPower { r: f64, q: f64 },
    /// `χ_B(y,r)(x) / μ(B(y, r))`.
    FlatWindow { r: f64 },
    /// `ρ*(|x - y|)` with unit radial moment.
    EuclideanRadial(RadialProfile),
    /// `ρ*(|x - y|)` without a normalization requirement.
    Custom(RadialProfile),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MollifierSpec {
    pub family: Family,
    /// Exponent the fractional family and the minorize audit refer to.
    pub p: f64,
}

pub fn make_mollifier(family: Family, p: f64) -> Result<MollifierSpec> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::param("p", "exponent must be at least 1"));
    }
    match &family {
        Family::Fractional { s } => {
            if !(*s > 0.0 && *s < 1.0) {
                return Err(Error::param("s", "must lie in (0, 1)"));
            }
        }
        Family::WindowPower { r, q } => {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(Error::param("r", "window radius must be positive"));
            }
            if !(*q > 0.0) || !q.is_finite() {
                return Err(Error::param("q", "window power must be positive"));
            }
        }
        Family::FlatWindow { r } => {
            if !(*r > 0.0) || !r.is_finite() {
                return Err(Error::param("r", "window radius must be positive"));
            }
        }
        Family::EuclideanRadial(prof) => {
            let m = prof.moment();
            if (m - 1.0).abs() > 1e-6 {
                return Err(Error::param("profile", format!("radial moment is {m}, expected 1")));
            }
        }
        Family::Custom(_) => {}
    }
    Ok(MollifierSpec { family, p })
}

impl MollifierSpec {
    /// Kernel support radius, when bounded.
    pub fn support(&self) -> Option<f64> {
        match &self.family {
            Family::Fractional { .. } => None,
            Family::WindowPower { r, .. } | Family::FlatWindow { r } => Some(*r),
            Family::EuclideanRadial(p) | Family::Custom(p) => Some(p.support()),
        }
    }

    /// Whether the kernel is normalized by a μ-ball at `y`.
    pub fn is_window(&self) -> bool {
        matches!(self.family, Family::WindowPower { .. } | Family::FlatWindow { .. })
    }

    pub fn radial(&self) -> Option<&RadialProfile> {
        match &self.family {
            Family::EuclideanRadial(p) | Family::Custom(p) => Some(p),
            _ => None,
        }
    }

    /// `ρ(x, y)` at distance `d` from the node `y`, with exact ball measures.
    pub fn eval_at(&self, space: &Space, d: f64, y: space::Point) -> f64 {
        match &self.family {
            Family::Fractional { s } => {
                (1.0 - s) * d.powf(self.p * (1.0 - s)) / space.ball_measure_at(y, d)
            }
            Family::WindowPower { r, q } => {
                if d < *r {
                    (d / r).powf(*q) / space.ball_measure_at(y, *r)
                } else {
                    0.0
                }
            }
            Family::FlatWindow { r } => {
                if d < *r {
                    1.0 / space.ball_measure_at(y, *r)
                } else {
                    0.0
                }
            }
            Family::EuclideanRadial(p) | Family::Custom(p) => p.eval(d),
        }
    }
}

/// `ρ(x, y)` for nodes `x`, `y`.
pub fn eval(spec: &MollifierSpec, space: &Space, x: usize, y: usize) -> Result<f64> {
    if x == y && matches!(spec.family, Family::Fractional { .. }) {
        return Err(Error::SingularPair { x, y });
    }
    Ok(spec.eval_at(space, space.dist(x, y), space.point(y)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinorizeAudit {
    /// `max(1, max ratio)`: the smallest admissible `C_ρ ≥ 1`.
    pub c_rho: f64,
    pub max_ratio: f64,
    pub pairs: usize,
    /// `(probe radius, max ratio)` per probe.
    pub per_radius: Vec<(f64, f64)>,
    /// Pairs where the kernel vanished while the window did not.
    pub unbounded: usize,
}

impl MinorizeAudit {
    pub fn finite(&self) -> bool {
        self.unbounded == 0 && self.c_rho.is_finite()
    }
}

/// Max over pairs with `0 < d(x, y) < r` of
/// `[(d/r)^p / μ(B(y, r))] / ρ(x, y)`, for each probe radius.
pub fn audit_minorize(
    spec: &MollifierSpec,
    space: &Space,
    p: f64,
    probes: &[f64],
    centers: &[usize],
) -> Result<MinorizeAudit> {
    if probes.is_empty() || centers.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut max_ratio: f64 = 0.0;
    let mut pairs = 0;
    let mut unbounded = 0;
    let mut per_radius = Vec::with_capacity(probes.len());
    for &r in probes {
        if !(r > 0.0) {
            return Err(Error::param("r_probe", "must be positive"));
        }
        let mut local: f64 = 0.0;
        for &y in centers {
            let yp = space.point(y);
            let mu = space.ball_measure_at(yp, r);
            for x in space.neighbors_within(y, r).to_vec() {
                if x == y {
                    continue;
                }
                let d = space.dist(x, y);
                let window = (d / r).powf(p) / mu;
                let rho = spec.eval_at(space, d, yp);
                pairs += 1;
                if rho <= 0.0 {
                    if window > 0.0 {
                        unbounded += 1;
                    }
                    continue;
                }
                local = local.max(window / rho);
            }
        }
        per_radius.push((r, local));
        max_ratio = max_ratio.max(local);
    }
    let c_rho = if unbounded > 0 { f64::INFINITY } else { max_ratio.max(1.0) };
    Ok(MinorizeAudit { c_rho, max_ratio, pairs, per_radius, unbounded })
}

/// Probe radius of the minorize audit for families with an intrinsic scale.
pub fn intrinsic_probe(spec: &MollifierSpec) -> Option<f64> {
    spec.support()
}

#[derive(Debug, Clone, PartialEq)]
enum MajorantKind {
    WindowPower { cd: f64, q: f64 },
    Flat { c0: f64, sigma: f64, cd: f64 },
}

/// Dyadic majorant coefficients `d_j`, nonzero exactly for `j ≤ log2 r`.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicMajorant {
    kind: MajorantKind,
    r: f64,
    /// Largest `j` with `2^j ≤ r`.
    pub j_top: i32,
    /// Audited constants used in the coefficients.
    pub c_d: f64,
    pub c0: Option<f64>,
    pub sigma: Option<f64>,
    /// Pointwise domination audit.
    pub checked_pairs: usize,
    pub violations: usize,
    /// max of ρ / majorant over checked pairs.
    pub max_ratio: f64,
}

impl DyadicMajorant {
    pub fn d(&self, j: i32) -> f64 {
        if j > self.j_top {
            return 0.0;
        }
        let t = 2f64.powi(j + 1) / self.r;
        match self.kind {
            MajorantKind::WindowPower { cd, q } => cd * t.powf(q),
            MajorantKind::Flat { c0, sigma, cd } => {
                if j == self.j_top && t > 1.0 {
                    (c0 * t.powf(sigma)).max(cd)
                } else {
                    c0 * t.powf(sigma)
                }
            }
        }
    }

    /// `Σ_{j ≥ m} d_j`.
    pub fn tail(&self, m: i32) -> f64 {
        if m < self.j_top - 1000 {
            return self.sum();
        }
        (m..=self.j_top).rev().map(|j| self.d(j)).sum()
    }

    /// `Σ_j d_j` over all `j ≤ j_top`.
    pub fn sum(&self) -> f64 {
        let (ratio, top_geo) = match self.kind {
            MajorantKind::WindowPower { q, .. } => (2f64.powf(-q), self.d(self.j_top)),
            MajorantKind::Flat { c0, sigma, .. } => {
                (2f64.powf(-sigma), c0 * (2f64.powi(self.j_top + 1) / self.r).powf(sigma))
            }
        };
        // top term (possibly raised to C_d) plus the geometric series below it
        self.d(self.j_top) + top_geo * ratio / (1.0 - ratio)
    }

    /// Bound depending only on the audited constants.
    pub fn declared_bound(&self) -> f64 {
        match self.kind {
            MajorantKind::WindowPower { cd, q } => 2f64.powf(q + 1.0) * cd,
            MajorantKind::Flat { c0, sigma, cd } => {
                let ratio = 2f64.powf(-sigma);
                (c0 * 2f64.powf(sigma)).max(cd) + c0 / (1.0 - ratio)
            }
        }
    }

    /// `Σ_j d_j χ_{annulus j}(x) / μ(B(y, 2^(j+1)))` at distance `d > 0`.
    pub fn bound_at(&self, space: &Space, y: space::Point, d: f64) -> f64 {
        let j = dyadic_index(d);
        self.d(j) / space.ball_measure_at(y, 2f64.powi(j + 1))
    }
}

/// `j` with `2^j ≤ d < 2^(j+1)`.
pub fn dyadic_index(d: f64) -> i32 {
    let mut j = d.log2().floor() as i32;
    while 2f64.powi(j) > d {
        j -= 1;
    }
    while 2f64.powi(j + 1) <= d {
        j += 1;
    }
    j
}

/// Build the dyadic majorant from audited space constants and check the
/// pointwise domination on all pairs `(x, y)`, `y` in `centers`, `x ≠ y`
/// inside the support.
pub fn dyadic_majorant(spec: &MollifierSpec, space: &Space, centers: &[usize]) -> Result<DyadicMajorant> {
    if centers.is_empty() {
        return Err(Error::EmptySample);
    }
    let (r, wp_q) = match spec.family {
        Family::WindowPower { r, q } => (r, Some(q)),
        Family::FlatWindow { r } => (r, None),
        _ => {
            return Err(Error::Unsupported(
                "dyadic majorant is defined for the window families only".into(),
            ))
        }
    };
    if r > space.diam() / 4.0 {
        return Err(Error::param("r", "window radius must be below diam/4"));
    }
    let j_top = dyadic_index(r);
    // doubling on the radii the domination uses: r itself and all annuli
    let h = space.max_spacing();
    let mut j_min = j_top;
    while 2f64.powi(j_min) > h / 4.0 && j_min > j_top - 60 {
        j_min -= 1;
    }
    let mut dsample = Vec::new();
    let mut msample = Vec::new();
    for &c in centers {
        dsample.push((c, r));
        for j in j_min..=j_top {
            let rr = 2f64.powi(j + 1);
            if rr < r {
                msample.push((c, rr, r));
                dsample.push((c, rr));
            }
        }
    }
    let c_d = space::audit_doubling(space, &dsample)?;
    let (kind, c0, sigma) = match wp_q {
        Some(q) => (MajorantKind::WindowPower { cd: c_d, q }, None, None),
        None => {
            let fit = if msample.len() >= 2 {
                Some(space::audit_upper_mass_bound(space, &msample)?)
            } else {
                None
            };
            let sigma = fit.as_ref().map_or(1.0, |f| f.sigma.max(1e-3));
            let c0 = if msample.is_empty() {
                1.0
            } else {
                space::min_c0_for_sigma(space, &msample, sigma)?.max(1.0)
            };
            (MajorantKind::Flat { c0, sigma, cd: c_d }, Some(c0), Some(sigma))
        }
    };
    let mut maj = DyadicMajorant {
        kind,
        r,
        j_top,
        c_d,
        c0,
        sigma,
        checked_pairs: 0,
        violations: 0,
        max_ratio: 0.0,
    };
    let mut checked = 0;
    let mut violations = 0;
    let mut max_ratio: f64 = 0.0;
    for &y in centers {
        let yp = space.point(y);
        for x in space.neighbors_within(y, r).to_vec() {
            if x == y {
                continue;
            }
            let d = space.dist(x, y);
            let rho = spec.eval_at(space, d, yp);
            let b = maj.bound_at(space, yp, d);
            checked += 1;
            let ratio = rho / b;
            max_ratio = max_ratio.max(ratio);
            if rho > b * (1.0 + 1e-12) {
                violations += 1;
            }
        }
    }
    maj.checked_pairs = checked;
    maj.violations = violations;
    maj.max_ratio = max_ratio;
    Ok(maj)
}
