//! Ball covers, partitions of unity, discrete convolutions and the
//! Lipschitz-chain bound for `Lip h`.

use crate::functional::{Evaluator, Normalizer, Region};
use crate::funcspace::{self, SampledFunction};
use crate::mollifier::{make_mollifier, Family};
use crate::space::{Space, SpaceKind};
use crate::sum::Neumaier;
use crate::{Error, Result};

/// Cover of `U(5s)` by balls `B(x_j, s)` with `5B_j ⊂ Ω`.
#[derive(Debug, Clone)]
pub struct Cover {
    pub s: f64,
    pub centers: Vec<usize>,
    /// Node mask of `U(5s)`.
    pub enlarged: Vec<bool>,
    /// Node mask of `U`.
    pub inside: Vec<bool>,
    /// Node mask of `Ω`.
    pub domain: Vec<bool>,
    /// Max number of balls `5B_j` containing a node.
    pub overlap_bound: usize,
    /// Net points dropped because `5B_j` left `Ω`.
    pub discarded: usize,
}

/// Smallest distance between a node of `a` and a node outside `b`.
fn mask_gap(space: &Space, a: &[bool], b: &[bool]) -> f64 {
    let outside: Vec<usize> = (0..space.len()).filter(|i| !b[*i]).collect();
    if outside.is_empty() {
        return f64::INFINITY;
    }
    let mut best = f64::INFINITY;
    for i in (0..space.len()).filter(|i| a[*i]) {
        for &j in &outside {
            best = best.min(space.dist(i, j));
        }
    }
    best
}

/// Greedy `s`-separated net of `U(5s)`, scanning nodes in index order.
pub fn build_cover(space: &Space, u: &[bool], omega: &[bool], s: f64) -> Result<Cover> {
    let n = space.len();
    if u.len() != n || omega.len() != n {
        return Err(Error::LengthMismatch { what: "cover masks", got: u.len().min(omega.len()), expected: n });
    }
    if u.iter().zip(omega).any(|(a, b)| *a && !*b) {
        return Err(Error::param("U", "must lie inside the domain"));
    }
    if !u.iter().any(|b| *b) {
        return Err(Error::EmptySample);
    }
    let gap = mask_gap(space, u, omega);
    let limit = if gap.is_finite() { gap / 10.0 } else { space.diam() / 10.0 };
    if !(s > 0.0 && s < limit) {
        return Err(Error::param("s", format!("scale must lie in (0, {limit:.6e})")));
    }
    let mut enlarged = vec![false; n];
    for i in (0..n).filter(|i| u[*i]) {
        for j in space.neighbors_within(i, 5.0 * s).to_vec() {
            enlarged[j] = true;
        }
    }
    let mut centers: Vec<usize> = Vec::new();
    let mut covered = vec![false; n];
    let mut discarded = 0;
    for i in 0..n {
        if !enlarged[i] || covered[i] {
            continue;
        }
        let big = space.neighbors_within(i, 5.0 * s).to_vec();
        for j in space.neighbors_within(i, s).to_vec() {
            covered[j] = true;
        }
        if big.iter().any(|j| !omega[*j]) {
            discarded += 1;
            continue;
        }
        centers.push(i);
    }
    let mut count = vec![0usize; n];
    for &c in &centers {
        for j in space.neighbors_within(c, 5.0 * s).to_vec() {
            count[j] += 1;
        }
    }
    let overlap_bound = count.iter().copied().max().unwrap_or(0);
    Ok(Cover {
        s,
        centers,
        enlarged,
        inside: u.to_vec(),
        domain: omega.to_vec(),
        overlap_bound,
        discarded,
    })
}

/// Normalized tents `φ_j = τ_j / Σ τ_k` with `τ_j = (1 - d(·, x_j)/(2s))_+`.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// Per node: `(ball index, φ_j)` for the balls whose tent is positive.
    pub weights: Vec<Vec<(usize, f64)>>,
    /// Largest difference quotient of any `φ_j` over neighboring node pairs.
    pub lip_const: f64,
}

impl PartitionOfUnity {
    pub fn value(&self, node: usize, ball: usize) -> f64 {
        self.weights[node].iter().find(|(j, _)| *j == ball).map_or(0.0, |(_, w)| *w)
    }

    pub fn is_defined(&self, node: usize) -> bool {
        !self.weights[node].is_empty()
    }
}

/// Neighbor pairs used for discrete Lipschitz quotients.
fn grid_pairs(space: &Space) -> Vec<(usize, usize)> {
    match space.kind() {
        SpaceKind::Interval => (1..space.len()).map(|i| (i - 1, i)).collect(),
        SpaceKind::Planar => {
            let (nx, ny) = space.grid_shape();
            let mut out = Vec::new();
            for j in 0..ny {
                for i in 0..nx {
                    let k = j * nx + i;
                    if i + 1 < nx {
                        out.push((k, k + 1));
                    }
                    if j + 1 < ny {
                        out.push((k, k + nx));
                    }
                }
            }
            out
        }
    }
}

pub fn build_pou(space: &Space, cover: &Cover) -> Result<PartitionOfUnity> {
    let n = space.len();
    let s = cover.s;
    let mut raw: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (j, &c) in cover.centers.iter().enumerate() {
        for k in space.neighbors_within(c, 2.0 * s).to_vec() {
            let t = 1.0 - space.dist(k, c) / (2.0 * s);
            if t > 0.0 {
                raw[k].push((j, t));
            }
        }
    }
    for (i, list) in raw.iter_mut().enumerate() {
        let total: f64 = list.iter().map(|x| x.1).sum();
        if cover.enlarged[i] && !(total > 0.0) {
            return Err(Error::DegenerateSample(format!("partition sum vanishes at node {i}")));
        }
        for x in list.iter_mut() {
            x.1 /= total;
        }
    }
    let pou = PartitionOfUnity { weights: raw, lip_const: 0.0 };
    let mut lip: f64 = 0.0;
    for (a, b) in grid_pairs(space) {
        if !(pou.is_defined(a) && pou.is_defined(b)) {
            continue;
        }
        let d = space.dist(a, b);
        for &(j, _) in pou.weights[a].iter().chain(&pou.weights[b]) {
            lip = lip.max((pou.value(a, j) - pou.value(b, j)).abs() / d);
        }
    }
    Ok(PartitionOfUnity { lip_const: lip, ..pou })
}

/// `h = Σ_j f_{B_j} φ_j` on the nodes where the partition is defined.
#[derive(Debug, Clone)]
pub struct Convolution {
    /// `h` where defined, `f` elsewhere.
    pub h: SampledFunction,
    pub defined: Vec<bool>,
    /// Exact ball averages `f_{B_j}`.
    pub averages: Vec<f64>,
}

pub fn discrete_convolution(
    space: &Space,
    f: &SampledFunction,
    cover: &Cover,
    pou: &PartitionOfUnity,
) -> Result<Convolution> {
    let averages: Vec<f64> = cover
        .centers
        .iter()
        .map(|&c| funcspace::ball_average(space, f, space.point(c), cover.s))
        .collect();
    if averages.iter().any(|a| !a.is_finite()) {
        return Err(Error::DegenerateSample("empty ball in cover".into()));
    }
    let mut values = f.values.clone();
    let mut defined = vec![false; space.len()];
    for i in 0..space.len() {
        if pou.is_defined(i) {
            let mut acc = Neumaier::new();
            for &(j, w) in &pou.weights[i] {
                acc.add(averages[j] * w);
            }
            values[i] = acc.value();
            defined[i] = true;
        }
    }
    Ok(Convolution { h: SampledFunction::from_values(values)?, defined, averages })
}

/// `∫_U |h - f| dμ` over the nodes of `U`.
pub fn l1_gap(space: &Space, h: &SampledFunction, f: &SampledFunction, u: &[bool]) -> f64 {
    let mut acc = Neumaier::new();
    for i in (0..space.len()).filter(|i| u[*i]) {
        acc.add(space.masses()[i] * (h.values[i] - f.values[i]).abs());
    }
    acc.value()
}

/// Discrete `Lip h` at each node: largest quotient to a grid neighbor
/// (1D), or the norm of the one-sided difference maxima (2D).
pub fn discrete_lip(space: &Space, h: &[f64], defined: &[bool]) -> Vec<f64> {
    let n = space.len();
    let mut out = vec![0.0; n];
    match space.kind() {
        SpaceKind::Interval => {
            for i in 0..n {
                let mut m: f64 = 0.0;
                for j in [i.wrapping_sub(1), i + 1] {
                    if j < n && defined[j] && defined[i] {
                        m = m.max((h[j] - h[i]).abs() / space.dist(i, j));
                    }
                }
                out[i] = m;
            }
        }
        SpaceKind::Planar => {
            let (nx, ny) = space.grid_shape();
            for jy in 0..ny {
                for ix in 0..nx {
                    let k = jy * nx + ix;
                    if !defined[k] {
                        continue;
                    }
                    let q = |a: usize| if defined[a] { (h[a] - h[k]).abs() / space.dist(a, k) } else { 0.0 };
                    let mut gx: f64 = 0.0;
                    let mut gy: f64 = 0.0;
                    if ix > 0 {
                        gx = gx.max(q(k - 1));
                    }
                    if ix + 1 < nx {
                        gx = gx.max(q(k + 1));
                    }
                    if jy > 0 {
                        gy = gy.max(q(k - nx));
                    }
                    if jy + 1 < ny {
                        gy = gy.max(q(k + nx));
                    }
                    out[k] = gx.hypot(gy);
                }
            }
        }
    }
    out
}

/// Result of the Lipschitz-chain audit.
#[derive(Debug, Clone, PartialEq)]
pub struct LipChainReport {
    pub p: f64,
    pub q: f64,
    /// Doubling constant the bound constants were instantiated with.
    pub c_d: f64,
    /// `∫_U (Lip h)^p dμ`.
    pub lhs: f64,
    /// `∫_Ω [∫_Ω (|Δf|/(10s))^{pq} χ_{B(y,10s)} / μ(B(y,10s)) dμ(x)]^{1/q} dμ(y)`.
    pub functional: f64,
    /// `(60 C_d^37)^p`.
    pub constant: f64,
    /// `constant · functional`.
    pub rhs: f64,
    /// `lhs / functional`, the constant that would have sufficed.
    pub tight_constant: f64,
    pub pairs_audited: usize,
    /// Pairs violating the double-average majorant.
    pub violations: usize,
    /// Pairs violating the partition-of-unity triangle step.
    pub triangle_violations: usize,
    /// Largest `|h(x)-h(y)|` over the double-average majorant.
    pub max_majorant_ratio: f64,
}

impl LipChainReport {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs && self.violations == 0 && self.triangle_violations == 0
    }
}

/// Audits `|h(x) - h(y)| ≤ (6 C_d^19 d / s) ⨍⨍_{5B_j} |f(z) - f(w)|` on
/// pairs inside balls `B_j`, and `∫_U (Lip h)^p ≤ C · functional`.
#[allow(clippy::too_many_arguments)]
pub fn lip_chain_report(
    space: &Space,
    f: &SampledFunction,
    cover: &Cover,
    pou: &PartitionOfUnity,
    p: f64,
    q: f64,
    c_d: f64,
    max_pairs: usize,
) -> Result<LipChainReport> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::param("p, q", "exponents must be at least 1"));
    }
    if !(c_d >= 1.0) {
        return Err(Error::param("C_d", "doubling constant is at least 1"));
    }
    let s = cover.s;
    let conv = discrete_convolution(space, f, cover, pou)?;
    let h = &conv.h.values;
    let lip = discrete_lip(space, h, &conv.defined);
    let ms = space.masses();
    let mut lhs = Neumaier::new();
    for i in (0..space.len()).filter(|i| cover.inside[*i]) {
        lhs.add(ms[i] * lip[i].powf(p));
    }
    let lhs = lhs.value();

    // pointwise audit
    let nb = cover.centers.len().max(1);
    let per_ball = max_pairs.div_ceil(nb).max(1);
    let majorant_c = 6.0 * c_d.powi(19);
    let (mut audited, mut violations, mut tri_viol) = (0usize, 0usize, 0usize);
    let mut max_ratio: f64 = 0.0;
    for (j, &c) in cover.centers.iter().enumerate() {
        if audited >= max_pairs {
            break;
        }
        let ball = space.neighbors_within(c, s).to_vec();
        let big = space.neighbors_within(c, 5.0 * s).to_vec();
        let mut num = Neumaier::new();
        let mut mass = 0.0;
        for &z in &big {
            mass += ms[z];
            for &w in &big {
                num.add(ms[z] * ms[w] * (f.values[z] - f.values[w]).abs());
            }
        }
        let double_avg = num.value() / (mass * mass);
        let m = ball.len();
        if m < 2 {
            continue;
        }
        let total = m * (m - 1) / 2;
        let stride = (total / per_ball).max(1);
        let mut k = 0usize;
        'pairs: for a in 0..m {
            for b in a + 1..m {
                k += 1;
                if k % stride != 0 {
                    continue;
                }
                let (x, y) = (ball[a], ball[b]);
                if !(conv.defined[x] && conv.defined[y]) {
                    continue;
                }
                let d = space.dist(x, y);
                let diff = (h[x] - h[y]).abs();
                let bound = majorant_c * d / s * double_avg;
                audited += 1;
                if diff > bound * (1.0 + 1e-12) + 1e-300 {
                    violations += 1;
                }
                if bound > 0.0 {
                    max_ratio = max_ratio.max(diff / bound);
                }
                let mut balls: Vec<usize> = pou.weights[x].iter().chain(&pou.weights[y]).map(|e| e.0).collect();
                balls.sort_unstable();
                balls.dedup();
                let tri: f64 = balls
                    .iter()
                    .map(|&kb| (conv.averages[kb] - conv.averages[j]).abs() * (pou.value(x, kb) - pou.value(y, kb)).abs())
                    .sum();
                if diff > tri * (1.0 + 1e-9) + 1e-12 * (1.0 + diff) {
                    tri_viol += 1;
                }
                if audited >= max_pairs {
                    break 'pairs;
                }
                if k / stride >= per_ball {
                    break 'pairs;
                }
            }
        }
    }

    let moll = make_mollifier(Family::WindowPower { r: 10.0 * s, q: p * q }, p)?;
    let ev = Evaluator::new(1).with_normalizer(Normalizer::Analytic);
    let m = ev.moments(space, f, &moll, &[p * q], Some(q), &Region::Restricted(cover.domain.clone()))?;
    let functional = m.root_sums[0];
    let constant = (60.0 * c_d.powi(37)).powf(p);
    Ok(LipChainReport {
        p,
        q,
        c_d,
        lhs,
        functional,
        constant,
        rhs: constant * functional,
        tight_constant: if functional > 0.0 { lhs / functional } else { 0.0 },
        pairs_audited: audited,
        violations,
        triangle_violations: tri_viol,
        max_majorant_ratio: max_ratio,
    })
}
