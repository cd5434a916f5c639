//! Error taxonomy shared by all solver modules.
//!
//! Every failure carries enough context to reproduce it; the CLI maps these
//! onto module-qualified codes and exit status 3.

use num_complex::Complex64;
use std::fmt;

/// Failure modes of the spectral, elliptic, moment and time-domain solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A resolvent pole sits within the safety margin of the requested
    /// decay line; moment targets would be ill-defined.
    PoleOnLine { omega: Complex64, line: f64, margin: f64 },
    /// Root refinement or cell subdivision exhausted its budget.
    NonConvergence { what: &'static str, detail: String },
    /// L satisfies L = tan L, where the characteristic problem degenerates.
    DegenerateL { l: f64 },
    /// Evaluation requested at (or numerically on top of) a pole.
    AtPole { omega: Complex64 },
    /// Moment matrix lost rank; the control basis cannot hit the targets.
    RankDeficient { rows: usize, cols: usize, residual: f64 },
    /// Conjugate-pair structure of the moment targets is violated.
    TargetMismatch { detail: String },
    /// A time series does not cover the window an operation needs.
    InsufficientHistory { needed: f64, got: f64 },
    /// Field amplitude exceeded the divergence guard.
    Blowup { time: f64, amplitude: f64 },
    /// Picard iteration failed to contract within the iteration cap.
    PicardDiverged { iterations: usize, last_delta: f64 },
    /// A norm signal hit numerical zero where a rate fit was requested.
    NonPositiveNorm { time: f64 },
    /// Invalid construction parameters (grids, configs).
    InvalidInput { what: String },
}

impl Error {
    /// Stable module-qualified code, used by the CLI error reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PoleOnLine { .. } => "spectral/pole-on-line",
            Error::NonConvergence { .. } => "spectral/non-convergence",
            Error::DegenerateL { .. } => "spectral/degenerate-length",
            Error::AtPole { .. } => "greens/at-pole",
            Error::RankDeficient { .. } => "moments/rank-deficient",
            Error::TargetMismatch { .. } => "moments/target-mismatch",
            Error::InsufficientHistory { .. } => "timedomain/insufficient-history",
            Error::Blowup { .. } => "timedomain/blowup",
            Error::PicardDiverged { .. } => "timedomain/picard-diverged",
            Error::NonPositiveNorm { .. } => "timedomain/non-positive-norm",
            Error::InvalidInput { .. } => "core/invalid-input",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::PoleOnLine { omega, line, margin } => write!(
                f,
                "pole at {omega} lies within margin {margin:e} of the line Im = {line}"
            ),
            Error::NonConvergence { what, detail } => {
                write!(f, "{what} did not converge: {detail}")
            }
            Error::DegenerateL { l } => {
                write!(f, "L = {l} satisfies L = tan L; characteristic problem degenerates")
            }
            Error::AtPole { omega } => write!(f, "evaluation at a pole: omega = {omega}"),
            Error::RankDeficient { rows, cols, residual } => write!(
                f,
                "moment system ({rows} rows, {cols} columns) rank-deficient; residual {residual:e}"
            ),
            Error::TargetMismatch { detail } => write!(f, "target mismatch: {detail}"),
            Error::InsufficientHistory { needed, got } => {
                write!(f, "history covers {got}, operation needs {needed}")
            }
            Error::Blowup { time, amplitude } => {
                write!(f, "field amplitude {amplitude:e} exceeded guard at t = {time}")
            }
            Error::PicardDiverged { iterations, last_delta } => {
                write!(f, "Picard loop stopped after {iterations} iterations, delta {last_delta:e}")
            }
            Error::NonPositiveNorm { time } => {
                write!(f, "norm signal non-positive at t = {time}; rate undefined")
            }
            Error::InvalidInput { what } => write!(f, "invalid input: {what}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
