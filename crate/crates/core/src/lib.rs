//! Nonlocal functionals on discretized metric measure spaces.
//!
//! The crate builds weighted intervals and planar grids with exact ball
//! measures, samples functions on them, and evaluates four families of
//! nonlocal difference-quotient functionals:
//!
//! - `I`: the mollified `p`-th power difference quotient,
//! - `Psi`: the same with exponent `p + eps`, renormalized to power `p`,
//! - `Phi`: an outer integral of the `q`-th root of an inner `q`-moment,
//! - `Lambda`: a nonconvex functional driven by a bounded profile `phi`.
//!
//! Two independent quadrature routes are provided. [`functional::nodes`]
//! sums over node pairs of a [`space::Space`]; [`functional::continuum`]
//! integrates piecewise-linear functions against piecewise-constant weights
//! with composite Gauss-Legendre rules split at every feature of the
//! integrand. The harness module drives parameter sweeps, reads limits off
//! plateaus, checks the inequalities the functionals must satisfy, and
//! writes CSV reports.

#![forbid(unsafe_code)]

pub mod approx;
pub mod cantor;
pub mod error;
pub mod funcspace;
pub mod functional;
pub mod harness;
pub mod mollifier;
pub mod phi;
pub mod quad;
pub mod space;
pub mod sum;

pub use error::{Error, Result};
