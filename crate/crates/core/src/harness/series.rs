//! Sweep results, plateau reading and inequality checks.

use crate::funcspace::EnergyValue;
use crate::functional::FunctionalValue;
use crate::{Error, Result};

/// Sweep parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Radial index `i`.
    Index,
    /// Window radius.
    Radius,
    /// Fractional order.
    Order,
    /// `Λ` scale `δ`.
    Delta,
    /// Cantor depth.
    Depth,
    /// Grid cells per side.
    Grid,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Index => "i",
            Axis::Radius => "r",
            Axis::Order => "s",
            Axis::Delta => "delta",
            Axis::Depth => "m",
            Axis::Grid => "n",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "i" => Axis::Index,
            "r" => Axis::Radius,
            "s" => Axis::Order,
            "delta" => Axis::Delta,
            "m" => Axis::Depth,
            "n" => Axis::Grid,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub param: f64,
    pub functional: FunctionalValue,
    pub energy: EnergyValue,
    /// `functional / energy`, NaN when the energy vanishes.
    pub ratio: f64,
    /// Cells per side of the node grid; 0 on the continuum route.
    pub grid: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    NonPlateau,
    Diverging,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::NonPlateau => "non-plateau",
            Status::Diverging => "diverging",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub value: f64,
    pub half_width: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceSeries {
    pub scenario: String,
    pub axis: Axis,
    pub points: Vec<SeriesPoint>,
    /// Relative spread under which the tail counts as a plateau.
    pub tolerance: f64,
    pub plateau: Option<Plateau>,
}

impl ConvergenceSeries {
    pub fn new(scenario: impl Into<String>, axis: Axis, tolerance: f64) -> Self {
        Self { scenario: scenario.into(), axis, points: Vec::new(), tolerance, plateau: None }
    }

    /// Append a point; the parameter must continue the existing order.
    pub fn push(&mut self, point: SeriesPoint) -> Result<()> {
        if let [.., a, b] = self.points.as_slice() {
            let up = b.param > a.param;
            if (point.param > b.param) != up || point.param == b.param {
                return Err(Error::param("param", "sweep points must be strictly monotone"));
            }
        } else if let [b] = self.points.as_slice() {
            if point.param == b.param || !point.param.is_finite() {
                return Err(Error::param("param", "sweep points must be strictly monotone"));
            }
        }
        self.points.push(point);
        Ok(())
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ratio).collect()
    }

    /// Smallest and largest ratio over the tail used for the plateau.
    pub fn ratio_band(&self) -> Option<(f64, f64)> {
        let r = self.ratios();
        let tail = &r[r.len().saturating_sub(3)..];
        if tail.is_empty() || tail.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x))))
    }
}

/// Plateau of the ratio sequence read off its last three points.
pub fn estimate_limit(series: &ConvergenceSeries) -> Result<Plateau> {
    limit_of(&series.ratios(), series.tolerance)
}

/// The same on a bare sequence.
pub fn limit_of(values: &[f64], tolerance: f64) -> Result<Plateau> {
    if values.len() < 4 {
        return Err(Error::DegenerateSample(format!("need at least 4 points, got {}", values.len())));
    }
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", "must be positive"));
    }
    let n = values.len();
    let tail = &values[n - 3..];
    let value = tail[2];
    if tail.iter().any(|x| !x.is_finite()) {
        return Ok(Plateau { value, half_width: f64::INFINITY, status: Status::Diverging });
    }
    let half_width = tail.iter().map(|x| (x - value).abs()).fold(0.0, f64::max);
    let scale = value.abs().max(f64::MIN_POSITIVE);
    let status = if half_width <= tolerance * scale {
        Status::Converged
    } else {
        // Monotone tail whose steps do not shrink.
        let d1 = tail[1] - tail[0];
        let d2 = tail[2] - tail[1];
        let d0 = tail[0] - values[n - 4];
        let monotone = d0 * d1 > 0.0 && d1 * d2 > 0.0;
        if monotone && d2.abs() >= d1.abs() && d1.abs() >= d0.abs() {
            Status::Diverging
        } else {
            Status::NonPlateau
        }
    };
    Ok(Plateau { value, half_width, status })
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`.
    pub margin: f64,
    /// Relative tolerance on the margin.
    pub tolerance: f64,
    pub pass: bool,
}

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

impl BoundCheck {
    /// `pass ⇔ rhs - lhs ≥ -tol · max(|lhs|, |rhs|)`.
    pub fn new(name: impl Into<String>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let margin = rhs - lhs;
        let scale = lhs.abs().max(rhs.abs());
        let pass = margin.is_finite() && margin >= -tolerance * scale;
        Self { name: name.into(), lhs, rhs, margin, tolerance, pass }
    }

    pub fn le(name: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Self::new(name, lhs, rhs, DEFAULT_TOLERANCE)
    }
}

pub fn all_pass(checks: &[BoundCheck]) -> bool {
    checks.iter().all(|c| c.pass)
}
