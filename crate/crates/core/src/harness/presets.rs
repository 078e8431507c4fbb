//! Named scenario presets.

use super::config::{parse_config, Config};
use super::series::BoundCheck;
use super::sweep::{run_sweep, SweepOutcome};
use crate::{Error, Result};

/// Cross-series comparison run after all sweeps of a preset.
#[derive(Debug, Clone, PartialEq)]
pub enum Cross {
    /// The gap series stays above the reference series: no single constant
    /// ties both limits to `‖Df‖`.
    NoCommonConstant { gap: String, reference: String },
    /// Two routes agree on every shared sweep parameter within a relative
    /// tolerance.
    RouteAgreement { reference: String, other: String, tolerance: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub summary: &'static str,
    pub configs: Vec<Config>,
    pub cross: Vec<Cross>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresetOutcome {
    pub name: String,
    pub sweeps: Vec<SweepOutcome>,
    pub cross: Vec<BoundCheck>,
    pub conclusions: Vec<String>,
}

impl PresetOutcome {
    pub fn passed(&self) -> bool {
        self.sweeps.iter().all(|s| s.passed()) && self.cross.iter().all(|c| c.pass)
    }

    pub fn sweep(&self, scenario: &str) -> Option<&SweepOutcome> {
        self.sweeps.iter().find(|s| s.series.scenario == scenario)
    }
}

const NORMALIZATION: &str = r#"
scenario = "normalization"
[space]
kind = "interval"
cells = 100000
[function]
descriptor = "affine:1,0"
[mollifier]
family = "flat-window"
[functional]
which = "I"
p = 1
[sweep]
axis = "r"
values = [0.1, 0.01, 0.001, 0.0005]
tolerance = 1e-6
oracle = 1.0
oracle_tolerance = 1e-6
holder_eps = 1.0
"#;

const BBM_1D_SMOOTH: &str = r#"
scenario = "bbm-1d-smooth"
[space]
kind = "interval"
cells = 100000
[function]
descriptor = "sin:1,1,0.3"
[mollifier]
family = "euclidean-radial"
[functional]
which = "Phi"
p = 1
q = 2
[sweep]
axis = "i"
values = [125, 250, 500, 1000]
trim = 0.01
oracle = 1.4142135623730951
oracle_tolerance = 0.02
holder_eps = 0.5
"#;

const ANGULAR_2D: &str = r#"
scenario = "angular-2d"
[space]
kind = "planar"
cells = 512
[function]
descriptor = "affine2:0.3,-0.7,0.1"
[mollifier]
family = "euclidean-radial"
[functional]
which = "I"
p = 2
[sweep]
axis = "i"
values = [6, 7.5, 9, 10.24]
trim = 0.17
oracle = 3.141592653589793
oracle_tolerance = 0.03
holder_eps = 1.0
"#;

const CANTOR_GAP: &str = r#"
scenario = "cantor-gap"
[space]
kind = "cantor"
depth = 10
[function]
descriptor = "cantor:10"
[mollifier]
family = "euclidean-radial"
[functional]
which = "Phi"
p = 1
q = 2
[sweep]
axis = "i"
values = [16777216, 33554432, 67108864, 134217728]
route = "continuum"
energy = "approximant"
tolerance = 0.03
oracle = 4.00390625
oracle_tolerance = 0.03
lower_bound = 2.8284271247461903
holder_eps = 0.5
"#;

const BUMP_F0: &str = r#"
scenario = "bump-f0"
[space]
kind = "cantor"
depth = 10
[function]
descriptor = "bump:0.375,0.625,1"
[mollifier]
family = "euclidean-radial"
[functional]
which = "Phi"
p = 1
q = 2
[sweep]
axis = "i"
values = [1024, 4096, 16384, 65536, 262144]
route = "continuum"
oracle = 1.4142135623730951
oracle_tolerance = 0.02
holder_eps = 0.5
"#;

const LAMBDA_1D: &str = r#"
scenario = "lambda-1d"
[space]
kind = "interval"
[function]
descriptor = "affine:1,0"
[functional]
which = "Lambda"
p = 1
phi = "step"
anchor = "ahlfors"
ahlfors_q = 1
[sweep]
axis = "delta"
values = [0.01, 0.001, 0.0001, 0.00001]
route = "continuum"
oracle = 2.0
oracle_tolerance = 0.02
"#;

const COR_3_1: &str = r#"
scenario = "cor-3.1"
[space]
kind = "interval"
[function]
descriptor = "affine:1,0"
[mollifier]
family = "fractional"
[functional]
which = "I"
p = 1
[sweep]
axis = "s"
values = [0.9, 0.99, 0.999, 0.9999]
route = "continuum"
tolerance = 0.01
oracle = 1.0
oracle_tolerance = 0.01
"#;

const COR_3_3: &str = r#"
scenario = "cor-3.3"
[space]
kind = "interval"
cells = 20000
[function]
descriptor = "sin:1,1,0.3"
[mollifier]
family = "window-power"
power = 2
[functional]
which = "Phi"
p = 1
q = 2
[sweep]
axis = "r"
values = [0.04, 0.02, 0.01, 0.005]
trim = 0.05
oracle = 0.5773502691896258
oracle_tolerance = 0.02
holder_eps = 1.0
audit_mollifier = true
"#;

const COR_3_4: &str = r#"
scenario = "cor-3.4"
[space]
kind = "interval"
cells = 20000
breakpoints = [0.0, 0.5, 1.0]
weights = [1.0, 2.0]
[function]
descriptor = "sin:1,1,0.3"
[mollifier]
family = "flat-window"
[functional]
which = "Phi"
p = 1
q = 2
[sweep]
axis = "r"
values = [0.04, 0.02, 0.01, 0.005]
trim = 0.05
oracle = 1.0
oracle_tolerance = 0.02
holder_eps = 1.0
audit_mollifier = true
"#;

const COR_3_5: &str = r#"
scenario = "cor-3.5"
[space]
kind = "planar"
[function]
descriptor = "affine2:0.6,-0.8,0"
[functional]
which = "Lambda"
p = 1
phi = "step"
anchor = "ahlfors"
ahlfors_q = 2
[sweep]
axis = "delta"
values = [0.4, 0.2, 0.1, 0.05, 0.001, 0.0001, 0.00001, 0.000001]
route = "continuum"
oracle = 4.0
oracle_tolerance = 0.02
"#;

const COR_3_5_GRID: &str = r#"
scenario = "cor-3.5-grid"
[space]
kind = "planar"
cells = 96
[function]
descriptor = "affine2:0.6,-0.8,0"
[functional]
which = "Lambda"
p = 1
phi = "step"
anchor = "ahlfors"
ahlfors_q = 2
[sweep]
axis = "delta"
values = [0.4, 0.2, 0.1, 0.05]
min_support_cells = 4
"#;

const THM_1_2: &str = r#"
scenario = "thm-1.2"
[space]
kind = "interval"
cells = 50000
[function]
descriptor = "sin:1,1,0.3"
[mollifier]
family = "euclidean-radial"
[functional]
which = "Psi"
p = 1
[sweep]
axis = "i"
values = [125, 250, 500, 1000]
eps_values = [0.1, 0.01, 0.001, 0.0001]
trim = 0.01
oracle = 2.0
oracle_tolerance = 0.02
"#;

const THM_1_3: &str = r#"
scenario = "thm-1.3"
[space]
kind = "interval"
cells = 50000
[function]
descriptor = "sin:1,1,0.3"
[mollifier]
family = "euclidean-radial"
[functional]
which = "Phi"
p = 2
q = 3
[sweep]
axis = "i"
values = [125, 250, 500, 1000]
trim = 0.01
oracle = 1.2599210498948732
oracle_tolerance = 0.02
holder_eps = 0.5
"#;

/// Relative gap allowed between the planar grid and the grid-free `Λ`.
const GRID_AGREEMENT: f64 = 0.02;

const ALL: [(&str, &str, &[&str]); 13] = [
    ("normalization", "flat-window I on f = x: kernel rows integrate to one", &[NORMALIZATION]),
    ("bbm-1d-smooth", "Phi with the radial indicator kernel on a smooth curve", &[BBM_1D_SMOOTH]),
    ("angular-2d", "planar I on an affine map against the angular constant", &[ANGULAR_2D]),
    ("cantor-gap", "Phi on the fat Cantor primitive", &[CANTOR_GAP]),
    ("bump-f0", "Phi on a tent inside a gap of the Cantor weight", &[BUMP_F0]),
    ("example-6.1", "Cantor primitive against the tent: no common constant", &[CANTOR_GAP, BUMP_F0]),
    ("lambda-1d", "Lambda with a step profile and the d^(Q+p) normalizer", &[LAMBDA_1D]),
    ("cor-3.1", "fractional kernel as s -> 1", &[COR_3_1]),
    ("cor-3.3", "window-power kernel with power q", &[COR_3_3]),
    ("cor-3.4", "flat-window kernel on a two-level weight", &[COR_3_4]),
    ("cor-3.5", "Lambda with a step profile on the planar grid", &[COR_3_5, COR_3_5_GRID]),
    ("thm-1.2", "Psi with eps -> 0 along the radial ladder", &[THM_1_2]),
    ("thm-1.3", "Phi with p = 2, q = 3 along the radial ladder", &[THM_1_3]),
];

pub fn preset_names() -> Vec<&'static str> {
    ALL.iter().map(|(n, _, _)| *n).collect()
}

pub fn preset(name: &str) -> Option<Preset> {
    let (name, summary, texts) = ALL.iter().find(|(n, _, _)| *n == name)?;
    let configs = texts.iter().map(|t| parse_config(t).expect("built-in preset parses")).collect();
    let cross = match *name {
        "example-6.1" => vec![Cross::NoCommonConstant { gap: "cantor-gap".into(), reference: "bump-f0".into() }],
        "cor-3.5" => vec![Cross::RouteAgreement {
            reference: "cor-3.5".into(),
            other: "cor-3.5-grid".into(),
            tolerance: GRID_AGREEMENT,
        }],
        _ => Vec::new(),
    };
    Some(Preset { name, summary, configs, cross })
}

/// Overrides applied to every config of a preset.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub workers: Option<usize>,
    pub grid: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        if let Some(g) = self.grid {
            cfg.space.cells = g;
            cfg.space.ny = None;
        }
    }
}

pub fn run_preset(preset: &Preset, ov: Overrides) -> Result<PresetOutcome> {
    let mut sweeps = Vec::new();
    for cfg in &preset.configs {
        let mut cfg = cfg.clone();
        ov.apply(&mut cfg);
        sweeps.push(run_sweep(&cfg)?);
    }
    run_cross(preset.name, sweeps, &preset.cross)
}

/// Evaluate the cross checks of already finished sweeps.
pub fn run_cross(name: &str, sweeps: Vec<SweepOutcome>, cross: &[Cross]) -> Result<PresetOutcome> {
    let mut checks = Vec::new();
    let mut conclusions = Vec::new();
    for c in cross {
        match c {
            Cross::NoCommonConstant { gap, reference } => {
                let find = |s: &str| {
                    sweeps
                        .iter()
                        .find(|o| o.series.scenario == *s)
                        .ok_or_else(|| Error::Config(format!("cross check needs scenario {s}")))
                };
                let g = find(gap)?;
                let r = find(reference)?;
                let (g_lo, _) = g.series.ratio_band().ok_or(Error::MissingData("gap ratios"))?;
                let (_, r_hi) = r.series.ratio_band().ok_or(Error::MissingData("reference ratios"))?;
                let check = BoundCheck::new("no-common-constant", r_hi, g_lo, 0.0);
                if check.pass && check.margin > 0.0 {
                    conclusions.push(format!(
                        "{gap} ratio stays at or above {g_lo:.6} while {reference} ratio stays at or below \
                         {r_hi:.6}: the two limits are incompatible with a single constant times ||Df||"
                    ));
                } else {
                    conclusions.push(format!(
                        "{gap} and {reference} ratio bands overlap ({g_lo:.6} vs {r_hi:.6}): no separation shown"
                    ));
                }
                checks.push(check);
            }
            Cross::RouteAgreement { reference, other, tolerance } => {
                let find = |s: &str| {
                    sweeps
                        .iter()
                        .find(|o| o.series.scenario == *s)
                        .ok_or_else(|| Error::Config(format!("cross check needs scenario {s}")))
                };
                let r = find(reference)?;
                let o = find(other)?;
                let mut shared = 0;
                for po in &o.series.points {
                    if let Some(pr) = r.series.points.iter().find(|pr| pr.param == po.param) {
                        shared += 1;
                        let axis = o.series.axis.name();
                        checks.push(BoundCheck::new(
                            format!("route-agreement {axis}={}", po.param),
                            (po.ratio - pr.ratio).abs(),
                            tolerance * pr.ratio.abs(),
                            0.0,
                        ));
                    }
                }
                conclusions.push(format!(
                    "{other} matches {reference} within {tolerance} relative on {shared} shared points"
                ));
            }
        }
    }
    Ok(PresetOutcome { name: name.to_string(), sweeps, cross: checks, conclusions })
}
