//! Nondecreasing bounded profiles `φ` for the `Λ` functional.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum PhiKind {
    /// 0 on [0, 1], 1 after.
    Step,
    /// `min(t, 1)^power`.
    Clamp { power: f64 },
    /// Knots `(t, φ(t))` with `t` ascending; 0 below the first knot, linear
    /// between knots, constant after the last.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiSpec {
    pub kind: PhiKind,
    /// Multiplies the profile.
    pub scale: f64,
}

pub fn make_phi(kind: PhiKind) -> Result<PhiSpec> {
    make_scaled_phi(kind, 1.0)
}

pub fn make_scaled_phi(kind: PhiKind, scale: f64) -> Result<PhiSpec> {
    if !(scale >= 0.0) || !scale.is_finite() {
        return Err(Error::param("scale", "must be finite and nonnegative"));
    }
    match &kind {
        PhiKind::Step => {}
        PhiKind::Clamp { power } => {
            if !(*power > 0.0) || !power.is_finite() {
                return Err(Error::param("power", "must be positive"));
            }
        }
        PhiKind::Table(knots) => {
            if knots.is_empty() {
                return Err(Error::param("table", "needs at least one knot"));
            }
            if knots.iter().any(|(t, v)| !(*t >= 0.0) || !(*v >= 0.0) || !t.is_finite() || !v.is_finite()) {
                return Err(Error::param("table", "knots must be finite and nonnegative"));
            }
            if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                return Err(Error::param("table", "positions must strictly ascend"));
            }
            if knots.windows(2).any(|w| w[1].1 < w[0].1) {
                return Err(Error::param("table", "profile must be nondecreasing"));
            }
        }
    }
    Ok(PhiSpec { kind, scale })
}

impl PhiSpec {
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.scale
            * match &self.kind {
                PhiKind::Step => {
                    if t > 1.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                PhiKind::Clamp { power } => t.clamp(0.0, 1.0).powf(*power),
                PhiKind::Table(k) => {
                    if t < k[0].0 {
                        return 0.0;
                    }
                    let j = k.partition_point(|kn| kn.0 <= t);
                    if j >= k.len() {
                        k[k.len() - 1].1
                    } else {
                        let (a, b) = (k[j - 1], k[j]);
                        a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                    }
                }
            }
    }

    /// Declared upper bound `b`.
    pub fn bound(&self) -> f64 {
        self.scale
            * match &self.kind {
                PhiKind::Step | PhiKind::Clamp { .. } => 1.0,
                PhiKind::Table(k) => k[k.len() - 1].1,
            }
    }

    /// Arguments where `φ` has a jump or kink (used to split quadrature).
    pub fn features(&self) -> Vec<f64> {
        match &self.kind {
            PhiKind::Step | PhiKind::Clamp { .. } => vec![1.0],
            PhiKind::Table(k) => k.iter().map(|kn| kn.0).collect(),
        }
    }

    /// True when `φ` is piecewise constant (step).
    pub fn is_step(&self) -> bool {
        matches!(self.kind, PhiKind::Step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhiAudit {
    pub monotone: bool,
    pub bound: f64,
    /// `∫_0^∞ φ(t) t^(-1-p) dt`.
    pub integral: f64,
    /// `max(I, 1/I)`; infinite when `I = 0`.
    pub c_phi: f64,
    pub feasible: bool,
}

/// `∫_u^v (α + β t) t^(-1-p) dt`.
fn linear_moment(alpha: f64, beta: f64, u: f64, v: f64, p: f64) -> f64 {
    let a = alpha * (u.powf(-p) - v.powf(-p)) / p;
    let b = if (p - 1.0).abs() < 1e-15 {
        beta * (v / u).ln()
    } else {
        beta * (u.powf(1.0 - p) - v.powf(1.0 - p)) / (p - 1.0)
    };
    a + b
}

/// Audit monotonicity, boundedness and the integral condition.
pub fn audit_phi(spec: &PhiSpec, p: f64) -> Result<PhiAudit> {
    if !(p >= 1.0) {
        return Err(Error::param("p", "exponent must be at least 1"));
    }
    let integral = spec.scale
        * match &spec.kind {
            PhiKind::Step => 1.0 / p,
            PhiKind::Clamp { power } => {
                if *power <= p {
                    return Err(Error::Divergent(format!(
                        "min(t,1)^{power} t^(-1-{p}) is not integrable at 0"
                    )));
                }
                1.0 / (power - p) + 1.0 / p
            }
            PhiKind::Table(k) => {
                if k[0].0 == 0.0 && k[0].1 > 0.0 {
                    return Err(Error::Divergent("profile is positive at 0+".into()));
                }
                let mut s = 0.0;
                for w in k.windows(2) {
                    let ((u, fu), (v, fv)) = (w[0], w[1]);
                    let beta = (fv - fu) / (v - u);
                    let alpha = fu - beta * u;
                    if u == 0.0 {
                        // φ = β t near 0: ∫ β t^(-p) converges only when p < 1
                        if beta > 0.0 {
                            return Err(Error::Divergent("linear profile at 0 with p >= 1".into()));
                        }
                        continue;
                    }
                    s += linear_moment(alpha, beta, u, v, p);
                }
                let (tl, fl) = k[k.len() - 1];
                s + fl * tl.powf(-p) / p
            }
        };
    let monotone = match &spec.kind {
        PhiKind::Table(k) => k.windows(2).all(|w| w[1].1 >= w[0].1),
        _ => true,
    };
    let c_phi = if integral > 0.0 { integral.max(1.0 / integral) } else { f64::INFINITY };
    Ok(PhiAudit {
        monotone,
        bound: spec.bound(),
        integral,
        c_phi,
        feasible: c_phi.is_finite(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_values_and_audit() {
        let s = make_phi(PhiKind::Step).unwrap();
        assert_eq!(s.eval(0.5), 0.0);
        assert_eq!(s.eval(1.0), 0.0);
        assert_eq!(s.eval(2.0), 1.0);
        for p in [1.0, 1.5, 2.0, 3.0] {
            let a = audit_phi(&s, p).unwrap();
            assert!((a.c_phi - p).abs() < 1e-10);
        }
    }

    #[test]
    fn clamp_profiles() {
        let c = make_phi(PhiKind::Clamp { power: 1.0 }).unwrap();
        assert_eq!(c.eval(0.5), 0.5);
        assert!(matches!(audit_phi(&c, 1.0), Err(Error::Divergent(_))));
        let c2 = make_phi(PhiKind::Clamp { power: 2.0 }).unwrap();
        let a = audit_phi(&c2, 1.0).unwrap();
        assert!((a.integral - 2.0).abs() < 1e-14);
        assert!((a.c_phi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tables() {
        assert!(make_phi(PhiKind::Table(vec![(1.0, 1.0), (2.0, 0.5)])).is_err());
        let zero = make_phi(PhiKind::Table(vec![(0.5, 0.0), (2.0, 0.0)])).unwrap();
        assert!(!audit_phi(&zero, 1.0).unwrap().feasible);
        // the step written as a table with a steep ramp after 1
        let t = make_phi(PhiKind::Table(vec![(1.0, 0.0), (1.0 + 1e-9, 1.0)])).unwrap();
        assert!((audit_phi(&t, 2.0).unwrap().integral - 0.5).abs() < 1e-8);
        // clamp^2 as a table on [0.5, 1] against numeric quadrature
        let knots: Vec<(f64, f64)> = (0..=200).map(|k| {
            let t = 0.5 + 0.5 * k as f64 / 200.0;
            (t, t)
        }).collect();
        let tab = make_phi(PhiKind::Table(knots)).unwrap();
        let a = audit_phi(&tab, 1.0).unwrap();
        // ∫_{1/2}^1 t^{-1} dt + ∫_1^∞ t^{-2} dt
        assert!((a.integral - (2f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn homogeneity() {
        let s = make_scaled_phi(PhiKind::Step, 3.0).unwrap();
        assert!((audit_phi(&s, 2.0).unwrap().integral - 1.5).abs() < 1e-15);
        assert_eq!(s.bound(), 3.0);
    }
}
