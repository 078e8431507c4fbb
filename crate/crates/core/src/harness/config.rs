//! Sweep configuration in TOML. Unknown keys are rejected.

use serde::Deserialize;

use crate::funcspace::Descriptor;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: String,
    #[serde(default = "one")]
    pub workers: usize,
    pub space: SpaceConfig,
    pub function: FunctionConfig,
    #[serde(default)]
    pub mollifier: MollifierConfig,
    pub functional: FunctionalConfig,
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKindName {
    Interval,
    Planar,
    Cantor,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: SpaceKindName,
    /// Cells along x (interval: total cells).
    #[serde(default)]
    pub cells: usize,
    /// Cells along y (planar); defaults to `cells`.
    pub ny: Option<usize>,
    #[serde(default = "unit_breaks")]
    pub breakpoints: Vec<f64>,
    #[serde(default = "unit_weight")]
    pub weights: Vec<f64>,
    /// Construction depth for `kind = "cantor"`.
    pub depth: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionConfig {
    /// Descriptor string, e.g. `sin:1,1,0.3` or `cantor:10`.
    pub descriptor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyName {
    #[default]
    FlatWindow,
    WindowPower,
    Fractional,
    EuclideanRadial,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MollifierConfig {
    #[serde(default)]
    pub family: FamilyName,
    /// Exponent of the window-power family.
    pub power: Option<f64>,
    /// Window radius when not swept.
    pub r: Option<f64>,
    /// Radial index when not swept.
    pub i: Option<f64>,
    /// Fractional order when not swept.
    pub s: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum WhichName {
    I,
    Psi,
    Phi,
    Lambda,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AnchorName {
    XBall,
    #[default]
    YBall,
    Ahlfors,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub which: WhichName,
    #[serde(default = "one_f")]
    pub p: f64,
    pub q: Option<f64>,
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    /// `step` or `clamp:k`.
    pub phi: Option<String>,
    #[serde(default)]
    pub anchor: AnchorName,
    /// Exponent `Q` of the Ahlfors anchor.
    pub ahlfors_q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisName {
    /// Radial index `i`, support `1/i` (1D) or `1/i` radius (2D).
    I,
    /// Window radius.
    R,
    /// Fractional order.
    S,
    /// `Λ` scale.
    Delta,
    /// Grid cells per side.
    N,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum RouteName {
    #[default]
    Nodes,
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizerName {
    #[default]
    Discrete,
    Analytic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EnergySource {
    /// `E_p` of the descriptor on the outer region.
    #[default]
    Exact,
    /// `inf ∫ g_i dμ` over the Cantor approximants.
    Approximant,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: AxisName,
    pub values: Vec<f64>,
    /// `ε` per point for `Psi` sweeps.
    pub eps_values: Option<Vec<f64>>,
    #[serde(default)]
    pub route: RouteName,
    #[serde(default)]
    pub normalizer: NormalizerName,
    /// Fixed boundary margin of the outer region.
    #[serde(default)]
    pub trim: f64,
    /// Additional margin in units of the kernel support.
    #[serde(default)]
    pub trim_support: f64,
    /// Plateau tolerance (relative spread of the last three ratios).
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default)]
    pub energy: EnergySource,
    /// Expected plateau of the ratio.
    pub oracle: Option<f64>,
    pub oracle_tolerance: Option<f64>,
    /// Proved lower bound on the ratio.
    pub lower_bound: Option<f64>,
    /// Node route: the kernel support must span this many cells.
    #[serde(default = "default_min_cells")]
    pub min_support_cells: f64,
    /// Exponent step of the fused Hölder and interpolation checks; 0 skips.
    #[serde(default = "default_holder")]
    pub holder_eps: f64,
    /// Run the minorize and majorant audits of the window family.
    #[serde(default)]
    pub audit_mollifier: bool,
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn unit_breaks() -> Vec<f64> {
    vec![0.0, 1.0]
}
fn unit_weight() -> Vec<f64> {
    vec![1.0]
}
fn default_tol() -> f64 {
    0.02
}
fn default_min_cells() -> f64 {
    50.0
}
fn default_holder() -> f64 {
    0.25
}

/// Parse and validate a configuration.
pub fn parse_config(text: &str) -> Result<Config> {
    let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &std::path::Path) -> Result<Config> {
    parse_config(&std::fs::read_to_string(path)?)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn finite_pos(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        if self.scenario.trim().is_empty() || self.scenario.contains([',', '\n', '"']) {
            return Err(bad("scenario name must be non-empty without commas, quotes or newlines"));
        }
        if self.workers == 0 || self.workers > 256 {
            return Err(bad("workers must be in 1..=256"));
        }
        let sp = &self.space;
        match sp.kind {
            SpaceKindName::Cantor => match sp.depth {
                Some(d) if (1..=crate::cantor::MAX_DEPTH).contains(&d) => {}
                _ => return Err(bad("cantor space needs depth in 1..=24")),
            },
            _ => {
                if sp.depth.is_some() {
                    return Err(bad("depth applies to the cantor space only"));
                }
            }
        }
        let sweeps_grid = self.sweep.axis == AxisName::N;
        if !sweeps_grid && self.sweep.route == RouteName::Nodes && sp.cells < 2 {
            return Err(bad("space.cells must be at least 2"));
        }
        if sp.cells > 1 << 26 || sp.ny.is_some_and(|n| n > 1 << 14) {
            return Err(bad("grid too large"));
        }
        if sp.kind == SpaceKindName::Planar && sp.cells > 1 << 14 {
            return Err(bad("planar grid too large"));
        }
        let d: Descriptor = self.function.descriptor.parse().map_err(|e: Error| bad(e.to_string()))?;
        if d.is_planar() != (sp.kind == SpaceKindName::Planar) {
            return Err(bad("descriptor dimension does not match the space"));
        }
        let fc = &self.functional;
        if !(fc.p.is_finite() && fc.p >= 1.0) {
            return Err(bad("functional.p must be at least 1"));
        }
        match fc.which {
            WhichName::Phi => {
                if !fc.q.is_some_and(|q| q.is_finite() && q > 1.0) {
                    return Err(bad("Phi needs q > 1"));
                }
            }
            WhichName::Psi => {
                if self.sweep.eps_values.is_none() && !fc.eps.is_some_and(|e| e.is_finite() && e >= 0.0) {
                    return Err(bad("Psi needs eps or sweep.eps_values"));
                }
            }
            WhichName::Lambda => {
                if self.sweep.axis != AxisName::Delta && !fc.delta.is_some_and(finite_pos) {
                    return Err(bad("Lambda needs delta > 0 or a delta sweep"));
                }
                parse_phi(fc.phi.as_deref().unwrap_or("step"))?;
                if fc.anchor == AnchorName::Ahlfors && !fc.ahlfors_q.is_some_and(finite_pos) {
                    return Err(bad("ahlfors anchor needs ahlfors_q > 0"));
                }
            }
            WhichName::I => {}
        }
        let sw = &self.sweep;
        if sw.values.is_empty() || sw.values.len() > 64 {
            return Err(bad("sweep.values needs 1 to 64 entries"));
        }
        if sw.values.iter().any(|v| !finite_pos(*v)) {
            return Err(bad("sweep values must be positive and finite"));
        }
        let asc = sw.values.windows(2).all(|w| w[1] > w[0]);
        let desc = sw.values.windows(2).all(|w| w[1] < w[0]);
        if !(asc || desc) {
            return Err(bad("sweep values must be strictly monotone"));
        }
        if let Some(e) = &sw.eps_values {
            if e.len() != sw.values.len() || e.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(bad("eps_values must match values and be nonnegative"));
            }
        }
        if sw.axis == AxisName::S && sw.values.iter().any(|s| *s >= 1.0) {
            return Err(bad("fractional order must lie in (0, 1)"));
        }
        if sw.axis == AxisName::N && sw.values.iter().any(|n| n.fract() != 0.0 || *n < 2.0 || *n > (1 << 14) as f64) {
            return Err(bad("grid sizes must be integers in 2..=16384"));
        }
        for (name, v) in [("trim", sw.trim), ("trim_support", sw.trim_support)] {
            if !((v.is_finite() && (0.0..0.5).contains(&v)) || (name == "trim_support" && v.is_finite() && v >= 0.0)) {
                return Err(bad(format!("sweep.{name} out of range")));
            }
        }
        if !finite_pos(sw.tolerance) || !(sw.min_support_cells.is_finite() && sw.min_support_cells >= 0.0) {
            return Err(bad("sweep tolerances must be positive"));
        }
        if !(sw.holder_eps.is_finite() && sw.holder_eps >= 0.0) {
            return Err(bad("holder_eps must be nonnegative"));
        }
        let m = &self.mollifier;
        let lambda = fc.which == WhichName::Lambda;
        let axis_ok = match sw.axis {
            AxisName::I => !lambda && m.family == FamilyName::EuclideanRadial,
            AxisName::R => !lambda && matches!(m.family, FamilyName::FlatWindow | FamilyName::WindowPower),
            AxisName::S => !lambda && m.family == FamilyName::Fractional,
            AxisName::Delta => lambda,
            AxisName::N => sw.route == RouteName::Nodes,
        };
        if !axis_ok {
            return Err(bad("sweep axis does not fit the functional and kernel family"));
        }
        if sw.energy == EnergySource::Approximant && sp.kind != SpaceKindName::Cantor {
            return Err(bad("approximant energy needs the cantor space"));
        }
        if sw.route == RouteName::Continuum && sp.kind == SpaceKindName::Planar {
            let affine = matches!(d, Descriptor::Affine2 { .. });
            let untrimmed = sw.trim == 0.0 && sw.trim_support == 0.0;
            if !(lambda && fc.anchor == AnchorName::Ahlfors && affine && untrimmed) {
                return Err(bad("the planar continuum route covers Lambda on affine maps with the ahlfors anchor"));
            }
        }
        for v in [m.power, m.r, m.i, m.s].into_iter().flatten() {
            if !finite_pos(v) {
                return Err(bad("mollifier parameters must be positive"));
            }
        }
        Ok(())
    }
}

/// `step` or `clamp:k`.
pub fn parse_phi(s: &str) -> Result<crate::phi::PhiSpec> {
    use crate::phi::{make_phi, PhiKind};
    let s = s.trim();
    if s == "step" {
        return make_phi(PhiKind::Step);
    }
    if let Some(k) = s.strip_prefix("clamp:") {
        let power: f64 = k.trim().parse().map_err(|_| bad(format!("bad clamp power {k:?}")))?;
        return make_phi(PhiKind::Clamp { power }).map_err(|e| bad(e.to_string()));
    }
    Err(bad(format!("unknown phi {s:?}")))
}
