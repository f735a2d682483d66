//! Crate-wide error type.
//!
//! Integration failures carry the partial trajectory so callers (notably the
//! CLI) can persist what was computed before the failure.

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::ValidationReport;
use crate::flow::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// The coefficients do not define a metric: requires `x > 0`, `y > 0` and
    /// `x*y - |z|^2` positive (with a small relative margin against roundoff).
    #[error("inadmissible metric (x={x}, y={y}, z={z}): requires x > 0, y > 0, x*y - |z|^2 > 0")]
    InadmissibleMetric { x: f64, y: f64, z: Complex64 },

    #[error("structure constants failed validation: {0}")]
    InvalidStructureConstants(ValidationReport),

    #[error("coframe differentials disagree with structure constants: {0}")]
    InvalidCoframe(ValidationReport),

    #[error("unknown geometry `{0}`")]
    UnknownGeometry(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid integrator options: {0}")]
    InvalidOptions(String),

    /// The translation of the Bismut-Ricci form into coefficient derivatives
    /// produced a non-real dx or dy, which signals a convention bug rather
    /// than a numerical issue.
    #[error("non-real coefficient derivative (imaginary part {imag:e}) — convention bug")]
    NonRealDerivative { imag: f64 },

    #[error("step size underflow at t = {t:e} (h = {step:e}); {} samples retained", partial.samples.len())]
    StepSizeUnderflow {
        t: f64,
        step: f64,
        partial: Box<Trajectory>,
    },

    #[error("exceeded {steps} steps at t = {t:e}; {} samples retained", partial.samples.len())]
    MaxStepsExceeded {
        steps: u64,
        t: f64,
        partial: Box<Trajectory>,
    },

    #[error("sampled state at t = {t:e} is not an admissible metric")]
    InadmissibleSample { t: f64 },

    #[error("not enough samples: {0}")]
    InsufficientSamples(String),

    #[error("trajectory reaches t = {reached:e} but t = {needed:e} is required")]
    TrajectoryTooShort { needed: f64, reached: f64 },

    /// Sol geometries need the lattice quotient parameter to report a
    /// Gromov-Hausdorff limit.
    #[error("geometry requires a quotient parameter lambda > 1")]
    MissingQuotientParameter,

    #[error("invalid quotient parameter {0}: requires lambda > 1")]
    InvalidQuotientParameter(f64),

    #[error("no pair (t, {scale}*t) lies on the blowdown time grid")]
    NoScalePairs { scale: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed trajectory CSV at line {line}: {message}")]
    MalformedCsv { line: usize, message: String },
}

impl Error {
    /// Process exit code the CLI maps this error to: 1 for configuration and
    /// usage problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InadmissibleMetric { .. }
            | Error::UnknownGeometry(_)
            | Error::InvalidParameter(_)
            | Error::InvalidOptions(_)
            | Error::MissingQuotientParameter
            | Error::InvalidQuotientParameter(_)
            | Error::Io(_)
            | Error::MalformedCsv { .. } => 1,
            Error::InvalidStructureConstants(_)
            | Error::InvalidCoframe(_)
            | Error::NonRealDerivative { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::MaxStepsExceeded { .. }
            | Error::InadmissibleSample { .. }
            | Error::InsufficientSamples(_)
            | Error::TrajectoryTooShort { .. }
            | Error::NoScalePairs { .. } => 2,
        }
    }
}
