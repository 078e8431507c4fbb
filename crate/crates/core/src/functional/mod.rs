//! The four nonlocal functionals `I`, `Psi`, `Phi`, `Lambda`.
//!
//! Every evaluation reduces to row moments: for each outer point `y`,
//! `M_e(y) = ∫ (|f(x) - f(y)| / d(x, y))^e ρ(x, y) dμ(x)` for a few
//! exponents `e`. Then
//!
//! - `I_p = ∫ M_p dμ(y)`,
//! - `Psi_{p,ε} = (∫ M_{p+ε} dμ(y))^{p/(p+ε)}`,
//! - `Phi_{p,q} = ∫ M_{pq}^{1/q} dμ(y)`.
//!
//! Requesting several exponents in one pass evaluates them on the same
//! quadrature, which is what makes the Hölder and interpolation checks
//! exact discrete inequalities.

pub mod continuum;
pub mod nodes;

use crate::funcspace::SampledFunction;
use crate::mollifier::MollifierSpec;
use crate::phi::PhiSpec;
use crate::space::{Space, SpaceKind};
use crate::sum::Workers;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    I,
    Psi,
    Phi,
    Lambda,
}

impl Which {
    pub fn name(self) -> &'static str {
        match self {
            Which::I => "I",
            Which::Psi => "Psi",
            Which::Phi => "Phi",
            Which::Lambda => "Lambda",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalValue {
    pub which: Which,
    pub value: f64,
    pub p: f64,
    pub eps: Option<f64>,
    pub q: Option<f64>,
    pub delta: Option<f64>,
    /// Pairs (or quadrature node pairs) that entered the sum.
    pub pair_count: u64,
    /// Self pairs skipped.
    pub diag_excluded: u64,
}

/// Domain `Ω` as a node mask.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Region {
    #[default]
    Whole,
    /// Both integrals over `Ω`.
    Restricted(Vec<bool>),
    /// Outer integral over `Ω`, inner over the whole space.
    Trimmed(Vec<bool>),
}

impl Region {
    pub fn outer(&self) -> Option<&[bool]> {
        match self {
            Region::Whole => None,
            Region::Restricted(m) | Region::Trimmed(m) => Some(m),
        }
    }

    pub fn inner(&self) -> Option<&[bool]> {
        match self {
            Region::Restricted(m) => Some(m),
            _ => None,
        }
    }

    /// Nodes at distance at least `margin` from the boundary of the model
    /// domain.
    pub fn interior_mask(space: &Space, margin: f64) -> Vec<bool> {
        (0..space.len())
            .map(|i| {
                let p = space.point(i);
                match space.kind() {
                    SpaceKind::Interval => p[0] >= margin && p[0] <= 1.0 - margin,
                    SpaceKind::Planar => {
                        p[0] >= margin && p[0] <= 1.0 - margin && p[1] >= margin && p[1] <= 1.0 - margin
                    }
                }
            })
            .collect()
    }

    /// Mask of 1D nodes whose coordinate lies in `[a, b]`.
    pub fn interval_mask(space: &Space, a: f64, b: f64) -> Vec<bool> {
        space.xs().iter().map(|x| *x >= a && *x <= b).collect()
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Some(m) = self.outer() {
            if m.len() != n {
                return Err(Error::LengthMismatch { what: "region mask", got: m.len(), expected: n });
            }
        }
        Ok(())
    }
}

/// Ball normalization for the window families in the node engine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalizer {
    /// `μ(B(y, r))` replaced by the node mass of the punctured ball, so
    /// the kernel rows integrate to exactly 1 under the node rule.
    #[default]
    Discrete,
    /// Exact `μ(B(y, r))`.
    Analytic,
}

/// Ball anchoring of the `Lambda` normalizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Anchor {
    /// `μ(B(x, d(x, y)))`.
    XBall,
    /// `μ(B(y, d(x, y)))`.
    YBall,
    /// `d(x, y)^Q`.
    AhlforsPower { q: f64 },
}

/// Which quadrature route evaluates the integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Route {
    /// Node-pair sums on the space.
    #[default]
    Nodes,
    /// Composite Gauss-Legendre on the exact piecewise-linear function
    /// (1D only).
    Continuum,
}

/// Row-moment totals of one pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub exponents: Vec<f64>,
    /// `∫ M_e(y) dμ(y)` per exponent.
    pub sums: Vec<f64>,
    /// `∫ M_e(y)^{1/q} dμ(y)` per exponent (when a root was requested).
    pub root_sums: Vec<f64>,
    /// `∫∫ ρ dμ dμ` over the region.
    pub kernel_mass: f64,
    /// `max_y ∫ ρ(x, y) dμ(x)`.
    pub max_row_mass: f64,
    /// `μ` of the outer region.
    pub outer_mass: f64,
    pub pairs: u64,
    pub diag: u64,
}

impl Moments {
    pub fn sum_for(&self, e: f64) -> Option<f64> {
        self.exponents.iter().position(|x| *x == e).map(|k| self.sums[k])
    }

    pub fn root_for(&self, e: f64) -> Option<f64> {
        self.exponents.iter().position(|x| *x == e).map(|k| self.root_sums[k])
    }
}

/// Functional evaluator with a fixed worker pool and options.
#[derive(Debug)]
pub struct Evaluator {
    workers: Workers,
    pub normalizer: Normalizer,
    pub route: Route,
    /// Gauss-Legendre points per panel for the continuum route.
    pub gl_points: usize,
}

impl Default for Evaluator {
    fn default() -> Self {
        Self::new(1)
    }
}

impl Evaluator {
    pub fn new(workers: usize) -> Self {
        Self {
            workers: Workers::new(workers),
            normalizer: Normalizer::Discrete,
            route: Route::Nodes,
            gl_points: 12,
        }
    }

    pub fn with_route(mut self, route: Route) -> Self {
        self.route = route;
        self
    }

    pub fn with_normalizer(mut self, n: Normalizer) -> Self {
        self.normalizer = n;
        self
    }

    pub fn workers(&self) -> &Workers {
        &self.workers
    }

    /// Row moments for the requested exponents; `root_q` also accumulates
    /// `M_e^{1/q}`.
    pub fn moments(
        &self,
        space: &Space,
        f: &SampledFunction,
        moll: &MollifierSpec,
        exponents: &[f64],
        root_q: Option<f64>,
        region: &Region,
    ) -> Result<Moments> {
        if exponents.is_empty() || exponents.len() > nodes::MAX_EXPONENTS {
            return Err(Error::param("exponents", "between 1 and 4 exponents per pass"));
        }
        if exponents.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::param("exponents", "must be finite and nonnegative"));
        }
        if f.len() != space.len() {
            return Err(Error::LengthMismatch { what: "function values", got: f.len(), expected: space.len() });
        }
        region.check(space.len())?;
        match self.route {
            Route::Nodes => nodes::moments(self, space, f, moll, exponents, root_q, region),
            Route::Continuum => {
                let prob = continuum::Problem::from_space(space, f, region)?;
                continuum::moments(self, &prob, moll, exponents, root_q)
            }
        }
    }

    pub fn eval_i(
        &self,
        space: &Space,
        f: &SampledFunction,
        p: f64,
        moll: &MollifierSpec,
        region: &Region,
    ) -> Result<FunctionalValue> {
        check_p(p)?;
        let m = self.moments(space, f, moll, &[p], None, region)?;
        Ok(FunctionalValue {
            which: Which::I,
            value: m.sums[0],
            p,
            eps: None,
            q: None,
            delta: None,
            pair_count: m.pairs,
            diag_excluded: m.diag,
        })
    }

    pub fn eval_psi(
        &self,
        space: &Space,
        f: &SampledFunction,
        p: f64,
        eps: f64,
        moll: &MollifierSpec,
        region: &Region,
    ) -> Result<FunctionalValue> {
        check_p(p)?;
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(Error::param("eps", "must be nonnegative"));
        }
        let m = self.moments(space, f, moll, &[p + eps], None, region)?;
        Ok(FunctionalValue {
            which: Which::Psi,
            value: psi_from_sum(m.sums[0], p, eps),
            p,
            eps: Some(eps),
            q: None,
            delta: None,
            pair_count: m.pairs,
            diag_excluded: m.diag,
        })
    }

    pub fn eval_phi(
        &self,
        space: &Space,
        f: &SampledFunction,
        p: f64,
        q: f64,
        moll: &MollifierSpec,
        region: &Region,
    ) -> Result<FunctionalValue> {
        check_p(p)?;
        if !(q > 1.0) || !q.is_finite() {
            return Err(Error::param("q", "must exceed 1"));
        }
        let m = self.moments(space, f, moll, &[p * q], Some(q), region)?;
        Ok(FunctionalValue {
            which: Which::Phi,
            value: m.root_sums[0],
            p,
            eps: None,
            q: Some(q),
            delta: None,
            pair_count: m.pairs,
            diag_excluded: m.diag,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn eval_lambda(
        &self,
        space: &Space,
        f: &SampledFunction,
        p: f64,
        delta: f64,
        phi: &PhiSpec,
        anchor: Anchor,
        region: &Region,
    ) -> Result<FunctionalValue> {
        check_p(p)?;
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::param("delta", "must be positive"));
        }
        if let Anchor::AhlforsPower { q } = anchor {
            if !(q > 0.0) {
                return Err(Error::param("Q", "must be positive"));
            }
        }
        if f.len() != space.len() {
            return Err(Error::LengthMismatch { what: "function values", got: f.len(), expected: space.len() });
        }
        region.check(space.len())?;
        let (value, pairs, diag) = match self.route {
            Route::Nodes => nodes::lambda(self, space, f, p, delta, phi, anchor, region)?,
            Route::Continuum => {
                let prob = continuum::Problem::from_space(space, f, region)?;
                continuum::lambda(self, &prob, p, delta, phi, anchor)?
            }
        };
        Ok(FunctionalValue {
            which: Which::Lambda,
            value,
            p,
            eps: None,
            q: None,
            delta: Some(delta),
            pair_count: pairs,
            diag_excluded: diag,
        })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::param("p", "exponent must be at least 1"));
    }
    Ok(())
}

/// `(S)^{p/(p+ε)}`.
pub fn psi_from_sum(s: f64, p: f64, eps: f64) -> f64 {
    if eps == 0.0 {
        s
    } else {
        s.powf(p / (p + eps))
    }
}

/// `I_p` with one worker on the whole space.
#[allow(non_snake_case)]
pub fn eval_I(space: &Space, f: &SampledFunction, p: f64, moll: &MollifierSpec) -> Result<FunctionalValue> {
    Evaluator::default().eval_i(space, f, p, moll, &Region::Whole)
}

#[allow(non_snake_case)]
pub fn eval_Psi(
    space: &Space,
    f: &SampledFunction,
    p: f64,
    eps: f64,
    moll: &MollifierSpec,
) -> Result<FunctionalValue> {
    Evaluator::default().eval_psi(space, f, p, eps, moll, &Region::Whole)
}

#[allow(non_snake_case)]
pub fn eval_Phi(
    space: &Space,
    f: &SampledFunction,
    p: f64,
    q: f64,
    moll: &MollifierSpec,
) -> Result<FunctionalValue> {
    Evaluator::default().eval_phi(space, f, p, q, moll, &Region::Whole)
}

#[allow(non_snake_case)]
pub fn eval_Lambda(
    space: &Space,
    f: &SampledFunction,
    p: f64,
    delta: f64,
    phi: &PhiSpec,
    anchor: Anchor,
) -> Result<FunctionalValue> {
    Evaluator::default().eval_lambda(space, f, p, delta, phi, anchor, &Region::Whole)
}

/// Hölder bound `(C_ρ μ(U))^{-ε/(p+ε)} I_p ≤ Psi_{p,ε}` on one fused pass
/// containing the exponents `p` and `p + ε`. Returns `(lhs, rhs)`.
pub fn holder_sides(m: &Moments, p: f64, eps: f64) -> Option<(f64, f64)> {
    let ip = m.sum_for(p)?;
    let ipe = m.sum_for(p + eps)?;
    let c_rho = m.max_row_mass.max(1.0);
    let lhs = (c_rho * m.outer_mass).powf(-eps / (p + eps)) * ip;
    Some((lhs, psi_from_sum(ipe, p, eps)))
}

/// Interpolation bound `Psi_{p,ε} ≤ I_p^α I_q^β` for `p + ε < q`, with
/// `α = (q-p-ε)p / ((q-p)(p+ε))`, `β = εp / ((q-p)(p+ε))`.
pub fn interpolation_sides(m: &Moments, p: f64, eps: f64, q: f64) -> Option<(f64, f64)> {
    if !(p + eps < q) {
        return None;
    }
    let ip = m.sum_for(p)?;
    let ipe = m.sum_for(p + eps)?;
    let iq = m.sum_for(q)?;
    let alpha = (q - p - eps) * p / ((q - p) * (p + eps));
    let beta = eps * p / ((q - p) * (p + eps));
    Some((psi_from_sum(ipe, p, eps), ip.powf(alpha) * iq.powf(beta)))
}
