//! Pluriclosed flow on left-invariant Hermitian structures of the compact
//! complex surfaces modeled on 4-dimensional Lie groups.
//!
//! A left-invariant Hermitian metric on any of the model geometries is
//! determined by three coefficients `(x, y, z)` with `x, y` positive reals and
//! `z` complex, subject to `x*y - |z|^2 > 0`.  The crate provides, for each of
//! the nine geometries in [`catalog`]:
//!
//! * exact structure constants and coframe differentials ([`algebra`],
//!   [`catalog`]),
//! * the Bismut-Ricci form computed two independent ways — a generic
//!   contraction of the structure constants and a per-geometry closed form
//!   ([`curvature`]),
//! * an adaptive embedded Runge-Kutta integrator for the resulting ODE
//!   systems, with positivity guards and dense output ([`flow`]),
//! * long-time diagnostics: asymptotic classification of the coefficients,
//!   Gromov-Hausdorff limit data, parabolic blowdown limits, and soliton
//!   scale-invariance checks ([`analysis`]),
//! * a cross-check suite and CSV/JSON reporting used by the `pluriclosed`
//!   command-line tool ([`validate`], [`report`]).

pub mod algebra;
pub mod analysis;
pub mod catalog;
pub mod curvature;
pub mod error;
pub mod flow;
pub mod report;
pub mod validate;

pub use error::{Error, Result};
