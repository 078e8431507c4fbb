//! Running one configured sweep.

use super::config::*;
use super::series::{estimate_limit, Axis, BoundCheck, ConvergenceSeries, SeriesPoint};
use crate::cantor::{build_cantor_model, cantor_space, CantorModel};
use crate::funcspace::{energy_on, pl_energy, sample_function, Descriptor, EnergyKind, EnergyValue, SampledFunction};
use crate::functional::{
    continuum, holder_sides, interpolation_sides, psi_from_sum, Anchor, Evaluator, FunctionalValue, Moments,
    Normalizer, Region, Route, Which,
};
use crate::mollifier::{audit_minorize, dyadic_majorant, make_mollifier, Family, MollifierSpec, RadialProfile};
use crate::space::{build_planar_grid, build_weighted_interval, Space, WeightProfile};
use crate::{Error, Result};

/// Cells of the space used by the mollifier audits.
const AUDIT_CELLS: usize = 2048;
const AUDIT_CENTERS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub series: ConvergenceSeries,
    pub checks: Vec<BoundCheck>,
    /// Free-text findings for the summary.
    pub notes: Vec<String>,
    pub oracle: Option<f64>,
}

impl SweepOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

impl AxisName {
    fn axis(self) -> Axis {
        match self {
            AxisName::I => Axis::Index,
            AxisName::R => Axis::Radius,
            AxisName::S => Axis::Order,
            AxisName::Delta => Axis::Delta,
            AxisName::N => Axis::Grid,
        }
    }
}

/// Everything that varies along the sweep, resolved for one point.
#[derive(Debug, Clone)]
struct Point {
    cells: usize,
    moll: Option<MollifierSpec>,
    delta: Option<f64>,
    eps: Option<f64>,
    /// Length scale the grid must resolve.
    support: Option<f64>,
}

pub fn run_sweep(cfg: &Config) -> Result<SweepOutcome> {
    cfg.validate()?;
    let ev = evaluator(cfg);
    let descriptor: Descriptor = cfg.function.descriptor.parse()?;
    let model = match cfg.space.kind {
        SpaceKindName::Cantor => Some(build_cantor_model(cfg.space.depth.unwrap_or(1))?),
        _ => None,
    };
    let mut series = ConvergenceSeries::new(cfg.scenario.clone(), cfg.sweep.axis.axis(), cfg.sweep.tolerance);
    let mut checks = Vec::new();
    for (k, &v) in cfg.sweep.values.iter().enumerate() {
        let pt = resolve_point(cfg, &descriptor, k, v)?;
        let (point, mut pc) = match cfg.sweep.route {
            RouteName::Nodes => node_point(cfg, &ev, &descriptor, model.as_ref(), &pt, v)?,
            RouteName::Continuum => continuum_point(cfg, &ev, &descriptor, model.as_ref(), &pt, v)?,
        };
        series.push(point)?;
        checks.append(&mut pc);
    }
    let mut notes = Vec::new();
    let plateau = estimate_limit(&series).ok();
    series.plateau = plateau;
    if plateau.is_none() {
        notes.push(format!("{} points: too few to read a plateau", series.points.len()));
    }
    checks.extend(check_bounds(cfg, &series));
    if cfg.sweep.audit_mollifier {
        let (c, n) = audit_mollifier(cfg)?;
        checks.extend(c);
        notes.extend(n);
    }
    Ok(SweepOutcome { series, checks, notes, oracle: cfg.sweep.oracle })
}

fn evaluator(cfg: &Config) -> Evaluator {
    let route = match cfg.sweep.route {
        RouteName::Nodes => Route::Nodes,
        RouteName::Continuum => Route::Continuum,
    };
    let norm = match cfg.sweep.normalizer {
        NormalizerName::Discrete => Normalizer::Discrete,
        NormalizerName::Analytic => Normalizer::Analytic,
    };
    Evaluator::new(cfg.workers).with_route(route).with_normalizer(norm)
}

fn need(v: Option<f64>, what: &str) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("missing {what}")))
}

fn resolve_point(cfg: &Config, d: &Descriptor, k: usize, v: f64) -> Result<Point> {
    let axis = cfg.sweep.axis;
    let m = &cfg.mollifier;
    let fc = &cfg.functional;
    let on = |a: AxisName, fixed: Option<f64>, what: &str| -> Result<f64> {
        if axis == a {
            Ok(v)
        } else {
            need(fixed, what)
        }
    };
    let cells = if axis == AxisName::N { v as usize } else { cfg.space.cells };
    let eps = match (&cfg.sweep.eps_values, fc.which) {
        (Some(e), WhichName::Psi) => Some(e[k]),
        (None, WhichName::Psi) => fc.eps,
        _ => None,
    };
    if fc.which == WhichName::Lambda {
        let delta = on(AxisName::Delta, fc.delta, "functional.delta")?;
        let slope = lipschitz(d).filter(|l| *l > 0.0).unwrap_or(1.0);
        return Ok(Point { cells, moll: None, delta: Some(delta), eps: None, support: Some(delta / slope) });
    }
    let family = match m.family {
        FamilyName::FlatWindow => Family::FlatWindow { r: on(AxisName::R, m.r, "mollifier.r")? },
        FamilyName::WindowPower => {
            Family::WindowPower { r: on(AxisName::R, m.r, "mollifier.r")?, q: need(m.power, "mollifier.power")? }
        }
        FamilyName::Fractional => Family::Fractional { s: on(AxisName::S, m.s, "mollifier.s")? },
        FamilyName::EuclideanRadial => {
            let i = on(AxisName::I, m.i, "mollifier.i")?;
            let prof = match cfg.space.kind {
                SpaceKindName::Planar => RadialProfile::disc_2d(1.0 / i)?,
                _ => RadialProfile::indicator_1d(i)?,
            };
            Family::EuclideanRadial(prof)
        }
    };
    let moll = make_mollifier(family, fc.p)?;
    let support = moll.support();
    Ok(Point { cells, moll: Some(moll), delta: None, eps, support })
}

fn lipschitz(d: &Descriptor) -> Option<f64> {
    match d {
        Descriptor::Affine2 { a, .. } => Some(a[0].hypot(a[1])),
        Descriptor::Affine { a, .. } => Some(a.abs()),
        _ => d.to_pl().ok().flatten().map(|pl| pl.lipschitz()),
    }
}

fn margin(cfg: &Config, pt: &Point) -> f64 {
    cfg.sweep.trim + cfg.sweep.trim_support * pt.support.unwrap_or(0.0)
}

fn build_space(cfg: &Config, model: Option<&CantorModel>, cells: usize) -> Result<Space> {
    match cfg.space.kind {
        SpaceKindName::Interval => build_weighted_interval(&cfg.space.breakpoints, &cfg.space.weights, cells),
        SpaceKindName::Planar => build_planar_grid(cells, cfg.space.ny.unwrap_or(cells)),
        SpaceKindName::Cantor => cantor_space(model.expect("cantor model"), cells),
    }
}

/// Refuse grids whose spacing does not resolve the kernel scale.
fn check_resolution(cfg: &Config, space: &Space, pt: &Point) -> Result<()> {
    let Some(support) = pt.support else { return Ok(()) };
    let h = space.max_spacing();
    let need_cells = cfg.sweep.min_support_cells;
    if support < need_cells * h * (1.0 - 1e-9) {
        let required = (need_cells / support).ceil() as u64;
        return Err(Error::Resolution {
            reason: format!("kernel scale {support:e} spans {:.1} cells, need {need_cells}", support / h),
            required,
        });
    }
    Ok(())
}

fn energy_value(cfg: &Config, model: Option<&CantorModel>, exact: impl FnOnce() -> Result<EnergyValue>) -> Result<EnergyValue> {
    let p = cfg.functional.p;
    match cfg.sweep.energy {
        EnergySource::Exact => exact(),
        EnergySource::Approximant => {
            let m = model.ok_or_else(|| Error::Config("approximant energy needs the cantor space".into()))?;
            Ok(EnergyValue { p, value: m.approximant_infimum(), kind: EnergyKind::Variation })
        }
    }
}

/// Exponents of one fused pass and the base of the inequality checks.
fn exponents(cfg: &Config, pt: &Point) -> (Vec<f64>, Option<f64>, Option<f64>) {
    let fc = &cfg.functional;
    let (own, root) = match fc.which {
        WhichName::I => (fc.p, None),
        WhichName::Psi => (fc.p + pt.eps.unwrap_or(0.0), None),
        WhichName::Phi => (fc.p * fc.q.unwrap_or(2.0), fc.q),
        WhichName::Lambda => unreachable!(),
    };
    let mut exps = vec![own];
    let he = cfg.sweep.holder_eps;
    let base = match fc.which {
        WhichName::Phi => own,
        _ => fc.p,
    };
    let holder = (he > 0.0).then_some(base);
    if he > 0.0 {
        for e in [base, base + he, base + 2.0 * he] {
            if !exps.contains(&e) {
                exps.push(e);
            }
        }
    }
    (exps, root, holder)
}

fn functional_from(cfg: &Config, pt: &Point, m: &Moments) -> FunctionalValue {
    let fc = &cfg.functional;
    let (which, value) = match fc.which {
        WhichName::I => (Which::I, m.sums[0]),
        WhichName::Psi => (Which::Psi, psi_from_sum(m.sums[0], fc.p, pt.eps.unwrap_or(0.0))),
        WhichName::Phi => (Which::Phi, m.root_sums[0]),
        WhichName::Lambda => unreachable!(),
    };
    FunctionalValue {
        which,
        value,
        p: fc.p,
        eps: pt.eps,
        q: if which == Which::Phi { fc.q } else { None },
        delta: None,
        pair_count: m.pairs,
        diag_excluded: m.diag,
    }
}

fn holder_checks(cfg: &Config, v: f64, base: f64, m: &Moments) -> Vec<BoundCheck> {
    let he = cfg.sweep.holder_eps;
    let axis = cfg.sweep.axis.axis().name();
    let mut out = Vec::new();
    if let Some((l, r)) = holder_sides(m, base, he) {
        out.push(BoundCheck::le(format!("holder {axis}={v}"), l, r));
    }
    if let Some((l, r)) = interpolation_sides(m, base, he, base + 2.0 * he) {
        out.push(BoundCheck::le(format!("interpolation {axis}={v}"), l, r));
    }
    out
}

fn anchor(cfg: &Config) -> Anchor {
    match cfg.functional.anchor {
        AnchorName::XBall => Anchor::XBall,
        AnchorName::YBall => Anchor::YBall,
        AnchorName::Ahlfors => Anchor::AhlforsPower { q: cfg.functional.ahlfors_q.unwrap_or(1.0) },
    }
}

fn finish(functional: FunctionalValue, energy: EnergyValue, param: f64, grid: u64) -> SeriesPoint {
    let ratio = if energy.value > 0.0 { functional.value / energy.value } else { f64::NAN };
    SeriesPoint { param, functional, energy, ratio, grid }
}

fn node_point(
    cfg: &Config,
    ev: &Evaluator,
    d: &Descriptor,
    model: Option<&CantorModel>,
    pt: &Point,
    v: f64,
) -> Result<(SeriesPoint, Vec<BoundCheck>)> {
    let space = build_space(cfg, model, pt.cells)?;
    check_resolution(cfg, &space, pt)?;
    let f: SampledFunction = sample_function(&space, d)?;
    let mg = margin(cfg, pt);
    let mask = (mg > 0.0).then(|| Region::interior_mask(&space, mg));
    if mask.as_ref().is_some_and(|m| !m.iter().any(|b| *b)) {
        return Err(Error::Config(format!("trim margin {mg} leaves no nodes")));
    }
    let region = mask.clone().map_or(Region::Whole, Region::Trimmed);
    let energy = energy_value(cfg, model, || energy_on(&space, &f, cfg.functional.p, mask.as_deref()))?;
    let grid = pt.cells as u64;
    if cfg.functional.which == WhichName::Lambda {
        let phi = parse_phi(cfg.functional.phi.as_deref().unwrap_or("step"))?;
        let delta = pt.delta.expect("delta");
        let fv = ev.eval_lambda(&space, &f, cfg.functional.p, delta, &phi, anchor(cfg), &region)?;
        return Ok((finish(fv, energy, v, grid), Vec::new()));
    }
    let moll = pt.moll.as_ref().expect("mollifier");
    let (exps, root, holder) = exponents(cfg, pt);
    let m = ev.moments(&space, &f, moll, &exps, root, &region)?;
    let checks = holder.map_or_else(Vec::new, |b| holder_checks(cfg, v, b, &m));
    Ok((finish(functional_from(cfg, pt, &m), energy, v, grid), checks))
}

fn continuum_point(
    cfg: &Config,
    ev: &Evaluator,
    d: &Descriptor,
    model: Option<&CantorModel>,
    pt: &Point,
    v: f64,
) -> Result<(SeriesPoint, Vec<BoundCheck>)> {
    if cfg.space.kind == SpaceKindName::Planar {
        return planar_lambda_point(cfg, ev, d, pt, v);
    }
    let pl = d
        .to_pl()?
        .ok_or_else(|| Error::Config("the continuum route needs a piecewise-linear function".into()))?;
    let weight = match (cfg.space.kind, model) {
        (SpaceKindName::Cantor, Some(m)) => m.weight(),
        (SpaceKindName::Interval, _) => WeightProfile::new(cfg.space.breakpoints.clone(), cfg.space.weights.clone())?,
        _ => return Err(Error::Config("the continuum route is one-dimensional".into())),
    };
    let mg = margin(cfg, pt);
    if mg >= 0.5 {
        return Err(Error::Config(format!("trim margin {mg} leaves no domain")));
    }
    let outer = (mg, 1.0 - mg);
    let p = cfg.functional.p;
    let energy = energy_value(cfg, model, || {
        Ok(EnergyValue {
            p,
            value: pl_energy(&pl, &weight, outer.0, outer.1, p)?,
            kind: if p == 1.0 { EnergyKind::Variation } else { EnergyKind::PEnergy },
        })
    })?;
    let prob = continuum::Problem::new(pl, weight, outer, (0.0, 1.0))?;
    if cfg.functional.which == WhichName::Lambda {
        let phi = parse_phi(cfg.functional.phi.as_deref().unwrap_or("step"))?;
        let delta = pt.delta.expect("delta");
        let (value, pairs, diag) = continuum::lambda(ev, &prob, p, delta, &phi, anchor(cfg))?;
        let fv = FunctionalValue {
            which: Which::Lambda,
            value,
            p,
            eps: None,
            q: None,
            delta: Some(delta),
            pair_count: pairs,
            diag_excluded: diag,
        };
        return Ok((finish(fv, energy, v, 0), Vec::new()));
    }
    let moll = pt.moll.as_ref().expect("mollifier");
    let (exps, root, holder) = exponents(cfg, pt);
    let m = continuum::moments(ev, &prob, moll, &exps, root)?;
    let checks = holder.map_or_else(Vec::new, |b| holder_checks(cfg, v, b, &m));
    Ok((finish(functional_from(cfg, pt, &m), energy, v, 0), checks))
}

/// `Λ` of an affine map on the unit square, evaluated without a grid.
fn planar_lambda_point(
    cfg: &Config,
    ev: &Evaluator,
    d: &Descriptor,
    pt: &Point,
    v: f64,
) -> Result<(SeriesPoint, Vec<BoundCheck>)> {
    let Descriptor::Affine2 { a, .. } = d else {
        return Err(Error::Config("the planar continuum route needs an affine map".into()));
    };
    let p = cfg.functional.p;
    let phi = parse_phi(cfg.functional.phi.as_deref().unwrap_or("step"))?;
    let delta = pt.delta.expect("delta");
    let q = need(cfg.functional.ahlfors_q, "functional.ahlfors_q")?;
    let value = continuum::lambda_planar_affine(ev, *a, p, delta, &phi, q)?;
    let energy = EnergyValue {
        p,
        value: a[0].hypot(a[1]).powf(p),
        kind: if p == 1.0 { EnergyKind::Variation } else { EnergyKind::PEnergy },
    };
    let fv = FunctionalValue {
        which: Which::Lambda,
        value,
        p,
        eps: None,
        q: None,
        delta: Some(delta),
        pair_count: 0,
        diag_excluded: 0,
    };
    Ok((finish(fv, energy, v, 0), Vec::new()))
}

/// Oracle and lower-bound checks on the plateau of a finished series.
pub fn check_bounds(cfg: &Config, series: &ConvergenceSeries) -> Vec<BoundCheck> {
    let mut out = Vec::new();
    let Some(pl) = series.plateau else { return out };
    if let Some(o) = cfg.sweep.oracle {
        let tol = cfg.sweep.oracle_tolerance.unwrap_or(cfg.sweep.tolerance);
        out.push(BoundCheck::new("oracle", (pl.value - o).abs(), tol * o.abs(), 0.0));
    }
    if let Some(lb) = cfg.sweep.lower_bound {
        if let Some((lo, _)) = series.ratio_band() {
            out.push(BoundCheck::le("lower-bound", lb, lo));
        }
    }
    out
}

/// Minorize and dyadic-majorant audits of the configured kernel at the
/// first sweep value, on a coarse copy of the configured interval. Only the
/// window families carry pass/fail checks; the others are reported.
pub fn audit_mollifier(cfg: &Config) -> Result<(Vec<BoundCheck>, Vec<String>)> {
    if cfg.space.kind != SpaceKindName::Interval {
        return Err(Error::Config("mollifier audits run on interval spaces".into()));
    }
    let mut notes = Vec::new();
    let space = build_weighted_interval(&cfg.space.breakpoints, &cfg.space.weights, AUDIT_CELLS)?;
    let descriptor: Descriptor = cfg.function.descriptor.parse()?;
    let pt = resolve_point(cfg, &descriptor, 0, cfg.sweep.values[0])?;
    let moll = pt.moll.ok_or_else(|| Error::Config("mollifier audits need a kernel family".into()))?;
    let centers = space.spread_nodes(AUDIT_CENTERS);
    let mut out = Vec::new();
    match moll.family {
        Family::WindowPower { .. } => {
            let maj = dyadic_majorant(&moll, &space, &centers)?;
            notes.push(format!("window-power majorant: C_d = {}, sum = {}", maj.c_d, maj.sum()));
            out.push(BoundCheck::le("majorant-sum", maj.sum(), maj.declared_bound()));
            out.push(BoundCheck::new("majorant-domination", maj.violations as f64, 0.0, 0.0));
        }
        Family::FlatWindow { r } => {
            let maj = dyadic_majorant(&moll, &space, &centers)?;
            notes.push(format!(
                "flat-window majorant: C_0 = {:?}, sigma = {:?}, C_d = {}, sum = {}",
                maj.c0,
                maj.sigma,
                maj.c_d,
                maj.sum()
            ));
            out.push(BoundCheck::le("majorant-sum", maj.sum(), maj.declared_bound()));
            out.push(BoundCheck::new("majorant-domination", maj.violations as f64, 0.0, 0.0));
            let mn = audit_minorize(&moll, &space, cfg.functional.p, &[r], &centers)?;
            notes.push(format!("flat-window minorize: C_rho = {}", mn.c_rho));
            out.push(BoundCheck::new("minorize-constant", (mn.c_rho - 1.0).abs(), 0.0, 0.0));
        }
        _ => {
            let probes: Vec<f64> = match moll.support() {
                Some(s) => vec![s, s / 2.0, s / 4.0],
                None => vec![0.1, 0.05, 0.025, 0.0125],
            };
            let mn = audit_minorize(&moll, &space, cfg.functional.p, &probes, &centers)?;
            for (r, ratio) in &mn.per_radius {
                notes.push(format!("minorize probe r = {r}: max ratio {ratio}"));
            }
            notes.push(format!("minorize: C_rho = {} over {} pairs", mn.c_rho, mn.pairs));
        }
    }
    Ok((out, notes))
}

/// A space of moderate size matching the configured geometry, for audits.
pub fn audit_space(cfg: &Config) -> Result<Space> {
    let cells = |cap: usize| if cfg.space.cells >= 2 { cfg.space.cells.min(cap) } else { cap };
    match cfg.space.kind {
        SpaceKindName::Interval => build_weighted_interval(&cfg.space.breakpoints, &cfg.space.weights, cells(AUDIT_CELLS)),
        SpaceKindName::Planar => build_planar_grid(cells(128), cells(128)),
        SpaceKindName::Cantor => {
            let w = build_cantor_model(cfg.space.depth.unwrap_or(1))?.weight();
            build_weighted_interval(w.breaks(), w.values(), AUDIT_CELLS)
        }
    }
}
