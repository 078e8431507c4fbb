//! The fat Cantor construction on [0, 1] with weight 2 on the set and 1 off
//! it, together with its primitive `f`, the approximants `f_i`, and the bump
//! `f0`.
//!
//! Interval endpoints are exact dyadic rationals, stored as integer
//! numerators over [`SCALE`] = 2^52. Generation `i` removes `2^(i-1)` open
//! intervals of length `2^(-2i)` centered in the components of `A_(i-1)`.

use crate::funcspace::{Descriptor, Pl, SampledFunction};
use crate::space::{Space, WeightProfile};
use crate::{Error, Result};

/// Common denominator of all endpoints.
pub const SCALE: u64 = 1 << 52;
pub const MAX_DEPTH: u32 = 24;

/// Half-open numerator interval `[lo, hi]` over [`SCALE`].
pub type Dyadic = (u64, u64);

#[derive(Debug, Clone)]
pub struct CantorModel {
    depth: u32,
    /// Components of `A_m`, ascending.
    a: Vec<Dyadic>,
    /// `d[i-1]` holds the removed intervals `D_i`, ascending.
    d: Vec<Vec<Dyadic>>,
    /// `l[i]` = numerator of `L_i`, `i = 0..=m`.
    l: Vec<u64>,
}

/// Build the depth-`m` construction.
pub fn build_cantor_model(m: u32) -> Result<CantorModel> {
    if !(1..=MAX_DEPTH).contains(&m) {
        return Err(Error::param("depth", format!("must lie in 1..={MAX_DEPTH}")));
    }
    let mut comps: Vec<Dyadic> = vec![(0, SCALE)];
    let mut d = Vec::with_capacity(m as usize);
    let mut l = vec![SCALE];
    for i in 1..=m {
        let half = SCALE >> (2 * i + 1);
        let mut next = Vec::with_capacity(comps.len() * 2);
        let mut removed = Vec::with_capacity(comps.len());
        for &(lo, hi) in &comps {
            let mid = (lo + hi) / 2;
            removed.push((mid - half, mid + half));
            next.push((lo, mid - half));
            next.push((mid + half, hi));
        }
        comps = next;
        d.push(removed);
        l.push(l[i as usize - 1] - (SCALE >> (i + 1)));
    }
    Ok(CantorModel { depth: m, a: comps, d, l })
}

pub fn to_f64(n: u64) -> f64 {
    n as f64 / SCALE as f64
}

impl CantorModel {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn a_intervals(&self) -> &[Dyadic] {
        &self.a
    }

    /// Removed intervals of generation `i` (1-based).
    pub fn d_intervals(&self, i: u32) -> &[Dyadic] {
        &self.d[i as usize - 1]
    }

    /// Numerator of `L_i`.
    pub fn l_num(&self, i: u32) -> u64 {
        self.l[i as usize]
    }

    pub fn l(&self, i: u32) -> f64 {
        to_f64(self.l[i as usize])
    }

    /// Weight profile: 2 on `A_m`, 1 on every removed interval.
    pub fn weight(&self) -> WeightProfile {
        let mut pieces: Vec<(u64, u64, f64)> = self.a.iter().map(|&(lo, hi)| (lo, hi, 2.0)).collect();
        for gen in &self.d {
            pieces.extend(gen.iter().map(|&(lo, hi)| (lo, hi, 1.0)));
        }
        pieces.sort_by_key(|p| p.0);
        let mut breaks = vec![0.0];
        let mut values = Vec::with_capacity(pieces.len());
        for (_, hi, w) in pieces {
            breaks.push(to_f64(hi));
            values.push(w);
        }
        WeightProfile::new(breaks, values).expect("cantor pieces tile [0, 1]")
    }

    /// Smallest cell count resolving the finest removed interval with
    /// spacing at most `2^(-2m) / 8`.
    pub fn required_cells(&self) -> u64 {
        1u64 << (2 * self.depth + 3)
    }

    /// Truncated primitive `f = ∫ 2 χ_{A_m}` as exact knot numerators.
    pub fn primitive_num(&self) -> Vec<(u64, u64)> {
        let mut knots = Vec::with_capacity(2 * self.a.len() + 2);
        let mut v = 0u64;
        knots.push((0, 0));
        for &(lo, hi) in &self.a {
            if lo > 0 {
                knots.push((lo, v));
            }
            v += 2 * (hi - lo);
            knots.push((hi, v));
        }
        knots.dedup();
        knots
    }

    pub fn primitive(&self) -> Pl {
        pl_from_num(&self.primitive_num())
    }

    /// Approximant `f_i = ∫ g_i`, `g_i = 2^(i+1) χ_{D_i}`, as exact knots.
    pub fn approximant_num(&self, i: u32) -> Vec<(u64, u64)> {
        let mut knots = vec![(0, 0)];
        let mut v = 0u64;
        for &(lo, hi) in self.d_intervals(i) {
            knots.push((lo, v));
            v += (hi - lo) << (i + 1);
            knots.push((hi, v));
        }
        knots.push((SCALE, v));
        knots
    }

    pub fn approximant(&self, i: u32) -> Pl {
        pl_from_num(&self.approximant_num(i))
    }

    /// Density of `g_i` on `D_i`.
    pub fn g_i_height(i: u32) -> f64 {
        2f64.powi(i as i32 + 1)
    }

    /// Value of the limit primitive `∫ 2 χ_A` on the removed interval
    /// `D_j[k]`, exact.
    pub fn limit_value_on_removed(j: u32, k: usize) -> u64 {
        (2 * k as u64 + 1) * (SCALE >> j)
    }

    /// Finite-depth envelope total variation of the truncated primitive:
    /// slope 2 against weight 2 over `A_m`.
    pub fn envelope_tv(&self) -> f64 {
        4.0 * self.l(self.depth)
    }

    /// Total variation of the truncated primitive against the limit-weight
    /// envelope, which is 1 on the whole interval since the removed
    /// intervals accumulate at every point of the set.
    pub fn limit_envelope_tv(&self) -> f64 {
        2.0 * self.l(self.depth)
    }

    /// `inf_i ∫ g_i dμ` over the approximants; `g_i` lives where the weight
    /// is 1, so every term is 1.
    pub fn approximant_infimum(&self) -> f64 {
        (1..=self.depth)
            .map(|i| {
                let len: u64 = self.d_intervals(i).iter().map(|(lo, hi)| hi - lo).sum();
                to_f64(len << (i + 1))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Plateau of the `q`-moment functional with the indicator kernel at
    /// scales below every feature: `2^(2/q) · 4 · L_m`.
    pub fn phi_plateau(&self, q: f64) -> f64 {
        2f64.powf(2.0 / q) * 4.0 * self.l(self.depth)
    }
}

fn pl_from_num(knots: &[(u64, u64)]) -> Pl {
    let xs = knots.iter().map(|k| to_f64(k.0)).collect();
    let vs = knots.iter().map(|k| to_f64(k.1)).collect();
    Pl::new(xs, vs).expect("dyadic knots are ascending")
}

/// Weighted interval on the depth-`m` construction.
pub fn cantor_space(model: &CantorModel, n_cells: usize) -> Result<Space> {
    let need = model.required_cells();
    if (n_cells as u64) < need {
        return Err(Error::Resolution {
            reason: format!(
                "depth {} needs spacing at most 2^-{}/8",
                model.depth,
                2 * model.depth
            ),
            required: need,
        });
    }
    Ok(Space::from_profile(model.weight(), n_cells))
}

/// The functions of the construction.
#[derive(Debug, Clone)]
pub struct CantorFunctions {
    /// Truncated primitive of `g = 2 χ_{A_m}`.
    pub f: Pl,
    /// `f_i` for `i = 1..=m` (index 0 holds `f_1`).
    pub f_i: Vec<Pl>,
    /// Height of `g_i = h_i χ_{D_i}`.
    pub g_i_height: Vec<f64>,
}

pub fn cantor_function(model: &CantorModel) -> CantorFunctions {
    CantorFunctions {
        f: model.primitive(),
        f_i: (1..=model.depth).map(|i| model.approximant(i)).collect(),
        g_i_height: (1..=model.depth).map(CantorModel::g_i_height).collect(),
    }
}

pub fn bump_descriptor(amplitude: f64) -> Descriptor {
    Descriptor::Bump {
        lo: 0.375,
        hi: 0.625,
        amp: amplitude,
    }
}

/// Tent supported in (3/8, 5/8) with peak `amplitude`.
pub fn bump_f0(space: &Space, amplitude: f64) -> Result<SampledFunction> {
    if amplitude == 0.0 || !amplitude.is_finite() {
        return Err(Error::param("amplitude", "must be nonzero and finite"));
    }
    crate::funcspace::sample_function(space, &bump_descriptor(amplitude))
}

#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CantorAudit {
    pub depth: u32,
    pub checks: Vec<IdentityCheck>,
}

impl CantorAudit {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Check every identity of the construction in integer arithmetic.
pub fn audit_cantor(model: &CantorModel) -> CantorAudit {
    let m = model.depth;
    let mut checks = Vec::new();
    let mut push = |name: String, pass: bool, detail: String| {
        checks.push(IdentityCheck { name, pass, detail })
    };

    // Generations: counts, lengths, centering.
    let mut comps: Vec<Dyadic> = vec![(0, SCALE)];
    for i in 1..=m {
        let d = model.d_intervals(i);
        let count_ok = d.len() as u64 == 1u64 << (i - 1);
        let len_ok = d.iter().all(|(lo, hi)| hi - lo == SCALE >> (2 * i));
        let centered = d.len() == comps.len()
            && d.iter().zip(&comps).all(|(&(dl, dh), &(cl, ch))| dl + dh == cl + ch && cl < dl && dh < ch);
        push(
            format!("generation {i}: 2^{} intervals of length 2^-{} at component midpoints", i - 1, 2 * i),
            count_ok && len_ok && centered,
            format!("count {}, centered {centered}", d.len()),
        );
        let mut next = Vec::with_capacity(comps.len() * 2);
        for (&(cl, ch), &(dl, dh)) in comps.iter().zip(d) {
            next.push((cl, dl));
            next.push((dh, ch));
        }
        comps = next;
        let total: u64 = comps.iter().map(|(lo, hi)| hi - lo).sum();
        let l = model.l_num(i);
        let rec = l + (SCALE >> (i + 1)) == model.l_num(i - 1);
        let closed = l == SCALE / 2 + (SCALE >> (i + 1));
        push(
            format!("L_{i} = L_{} - 2^-{} = 1/2 + 2^-{}", i - 1, i + 1, i + 1),
            rec && closed && total == l,
            format!("L_{i} = {}", to_f64(l)),
        );
    }
    let lm = model.l_num(m);
    let comp_ok = comps == model.a && model.a.len() as u64 == 1u64 << m
        && model.a.iter().all(|(lo, hi)| (hi - lo) << m == lm);
    push(
        format!("A_{m} has 2^{m} components of length L_{m}/2^{m}"),
        comp_ok,
        format!("{} components", model.a.len()),
    );

    // ∫ g_i = 1.
    for i in 1..=m {
        let len: u64 = model.d_intervals(i).iter().map(|(lo, hi)| hi - lo).sum();
        push(
            format!("integral of g_{i} equals 1"),
            len << (i + 1) == SCALE,
            format!("{}", to_f64(len << (i + 1))),
        );
    }

    // Truncated primitive: f(1) = 2 L_m, per-component slope mass.
    let f = model.primitive_num();
    let f1 = f.last().unwrap().1;
    push(
        format!("f(1) = 2 L_{m}"),
        f1 == 2 * lm && f.last().unwrap().0 == SCALE,
        format!("f(1) = {}", to_f64(f1)),
    );
    let per_comp = model.a.iter().all(|(lo, hi)| (2 * (hi - lo)) << m == 2 * lm);
    push(
        format!("each A_{m} component carries slope mass 2 L_{m} / 2^{m}"),
        per_comp,
        String::new(),
    );
    let mu_a: u64 = model.a.iter().map(|(lo, hi)| 2 * (hi - lo)).sum();
    let mu_c: u64 = SCALE - model.a.iter().map(|(lo, hi)| hi - lo).sum::<u64>();
    push(
        format!("mu(A_{m}) = 2 L_{m}, mu(complement) = 1 - L_{m}"),
        mu_a == 2 * lm && mu_c == SCALE - lm,
        format!("{} and {}", to_f64(mu_a), to_f64(mu_c)),
    );

    // f_{i+1} against the limit primitive.
    for i in 1..m {
        let fi = model.approximant_num(i + 1);
        let val = |x: u64| eval_num(&fi, x);
        // equality off A_i: on each removed interval D_j, j ≤ i.
        let mut eq = true;
        for j in 1..=i {
            for (k, &(lo, hi)) in model.d_intervals(j).iter().enumerate() {
                let want = CantorModel::limit_value_on_removed(j, k);
                eq &= val(lo) == Some(want) && val(hi) == Some(want);
            }
        }
        eq &= val(0) == Some(0) && val(SCALE) == Some(SCALE);
        push(
            format!("f_{} = f off A_{i}", i + 1),
            eq,
            String::new(),
        );
        // on each component of A_i both functions climb by exactly 2^-i from
        // a common value and are nondecreasing, so they differ by at most 2^-i.
        let step = SCALE >> i;
        let comps_i = components(model, i);
        let mut sup_ok = true;
        for (k, &(lo, hi)) in comps_i.iter().enumerate() {
            let start = k as u64 * step;
            sup_ok &= val(lo) == Some(start) && val(hi) == Some(start + step);
        }
        let monotone = fi.windows(2).all(|w| w[1].1 >= w[0].1);
        push(
            format!("sup |f_{} - f| <= 2^-{i}", i + 1),
            sup_ok && monotone,
            format!("{} components of A_{i}", comps_i.len()),
        );
    }
    CantorAudit { depth: m, checks }
}

/// Components of `A_i` for `i ≤ m`.
pub fn components(model: &CantorModel, i: u32) -> Vec<Dyadic> {
    let mut comps: Vec<Dyadic> = vec![(0, SCALE)];
    for j in 1..=i {
        let d = model.d_intervals(j);
        let mut next = Vec::with_capacity(comps.len() * 2);
        for (&(cl, ch), &(dl, dh)) in comps.iter().zip(d) {
            next.push((cl, dl));
            next.push((dh, ch));
        }
        comps = next;
    }
    comps
}

/// Value of a knot list at a knot position, if `x` is a knot or lies on a
/// flat piece; `None` when interpolation would be inexact.
fn eval_num(knots: &[(u64, u64)], x: u64) -> Option<u64> {
    let k = knots.partition_point(|kn| kn.0 < x);
    if k < knots.len() && knots[k].0 == x {
        // take the left-continuous value; knots are continuous anyway
        return Some(knots[k].1);
    }
    if k == 0 || k == knots.len() {
        return None;
    }
    let (a, b) = (knots[k - 1], knots[k]);
    if a.1 == b.1 {
        Some(a.1)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_generations() {
        let m = build_cantor_model(1).unwrap();
        assert_eq!(m.d_intervals(1), &[(3 * SCALE / 8, 5 * SCALE / 8)]);
        assert_eq!(m.l(1), 0.75);
        let m = build_cantor_model(2).unwrap();
        assert_eq!(m.l(2), 0.625);
        assert_eq!(m.a_intervals().len(), 4);
        assert!(m.a_intervals().iter().all(|(lo, hi)| to_f64(hi - lo) == 5.0 / 32.0));
        for d in 1..=MAX_DEPTH {
            let m = build_cantor_model(d).unwrap();
            assert_eq!(m.l_num(d) - SCALE / 2, SCALE >> (d + 1));
        }
        assert!(build_cantor_model(0).is_err());
        assert!(build_cantor_model(25).is_err());
    }

    #[test]
    fn audit_passes() {
        for d in [1, 3, 7] {
            let a = audit_cantor(&build_cantor_model(d).unwrap());
            for c in &a.checks {
                assert!(c.pass, "{}: {}", c.name, c.detail);
            }
        }
    }

    #[test]
    fn space_mass_and_resolution() {
        let m = build_cantor_model(1).unwrap();
        let s = cantor_space(&m, 32).unwrap();
        assert_eq!(s.total_mass(), 1.75);
        assert!(cantor_space(&m, 16).is_err());
        let m = build_cantor_model(3).unwrap();
        let s = cantor_space(&m, 512).unwrap();
        assert!((s.total_mass() - (1.0 + m.l(3))).abs() < 1e-15);
        let m10 = build_cantor_model(10).unwrap();
        assert!((1.0 + m10.l(10) - 1.500488).abs() < 1e-6);
        match cantor_space(&m10, 1 << 20) {
            Err(Error::Resolution { required, .. }) => assert_eq!(required, 1 << 23),
            other => panic!("expected refusal, got {other:?}"),
        }
    }

    #[test]
    fn functions() {
        let m = build_cantor_model(4).unwrap();
        let fs = cantor_function(&m);
        assert_eq!(fs.f.eval(1.0), 2.0 * m.l(4));
        for (i, fi) in fs.f_i.iter().enumerate() {
            assert_eq!(fi.eval(1.0), 1.0, "f_{}", i + 1);
        }
        assert_eq!(m.approximant_infimum(), 1.0);
        assert!((m.phi_plateau(2.0) - 8.0 * m.l(4)).abs() < 1e-15);
    }
}
