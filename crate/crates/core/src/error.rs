use std::path::PathBuf;

use thiserror::Error;

use crate::dual_solver::DualResult;

/// Errors raised by the solver library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("not a descent direction: objective {index} has slope {slope:e}")]
    NotDescentDirection { index: usize, slope: f64 },

    /// Backtracking exhausted its budget. `step` is the last (smallest) trial step.
    #[error("line search failed after {fevals} trial evaluations (last step {step:e})")]
    LineSearchFailure { step: f64, fevals: usize },

    /// The direction subproblem hit its iteration cap. Carries the best iterate found.
    #[error("direction subproblem failed after {} iterations (gap {:e})", .best.iterations, .best.fw_gap)]
    SubproblemFailure { best: Box<DualResult> },

    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("problem `{0}` is already registered")]
    DuplicateProblem(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("malformed problem document: {0}")]
    Format(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
