//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by system analysis, norm computation and synthesis.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix required to have spectral radius < 1 does not.
    #[error("matrix is not Schur stable (spectral radius {rho})")]
    UnstableMatrix { rho: f64 },

    /// A matrix required to be symmetric is not, beyond tolerance.
    #[error("matrix is not symmetric (asymmetry {defect:e})")]
    NonSymmetric { defect: f64 },

    /// A linear-algebra step lost too much accuracy to trust the result.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Matrix dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Operation requires a stable system.
    #[error("system is not stable (spectral radius {rho})")]
    UnstableSystem { rho: f64 },

    /// The one-step prediction error covariance is singular.
    #[error("prediction error covariance is singular (min eigenvalue {min_eig:e})")]
    SingularInnovation { min_eig: f64 },

    /// A square (p = m) system was required.
    #[error("filter must be square, got {p} outputs and {m} inputs")]
    NotSquare { p: usize, m: usize },

    /// An argument was outside its admissible range.
    #[error("invalid argument: {0}")]
    InvalidArgs(String),

    /// A malformed optimization model was detected before solving.
    #[error("model error: {0}")]
    ModelError(String),

    /// The conic solver returned an unusable status.
    #[error("solver failure: {0}")]
    SolverFailure(String),

    /// The initialization step of the synthesis iteration is infeasible.
    #[error("initial convex problem is infeasible: {0}")]
    InfeasibleInitial(String),

    /// The synthesis iteration ran out of iterations before the couplings closed.
    #[error("iteration limit reached (coupling residual {coupling:e}, scalar residual {scalar:e})")]
    MaxIterations { coupling: f64, scalar: f64 },

    /// Gain reconstruction could not make the gain inequality negative definite.
    #[error("gain recovery infeasible (best eigenvalue bound {lambda:e})")]
    GainInfeasible { lambda: f64 },

    /// Operating point index outside 1..=4.
    #[error("invalid operating point {0}, expected 1..=4")]
    InvalidPoint(usize),

    /// A configuration file failed to parse or validate.
    #[error("parse error: {0}")]
    ParseError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
