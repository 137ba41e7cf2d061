//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by model validation, the water-level solvers, the
/// realization builder, and the Monte-Carlo harness.
#[derive(Debug, Error)]
pub enum Error {
    /// A matrix or sequence in a model does not have its declared shape.
    #[error("dimension mismatch in {what} at t = {t}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        t: usize,
        expected: String,
        got: String,
    },

    /// An initial covariance failed the symmetry / positive-semidefiniteness checks.
    #[error("matrix is not symmetric positive-semidefinite: {0}")]
    NotSymmetricPsd(String),

    /// A matrix handed to the eigendecomposition is not symmetric.
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    /// An eigenvalue fell below the clamping tolerance for semidefinite inputs.
    #[error("eigenvalue {value:.6e} is below the negativity tolerance {tolerance:.3e}")]
    NegativeEigenvalue { value: f64, tolerance: f64 },

    /// The water-level iteration exhausted its budget without meeting tolerance.
    #[error(
        "water-level search did not converge after {iterations} iterations \
         (last distortion residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    /// A scalar argument is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A channel power level is not strictly positive.
    #[error("power level at t = {t} must be positive, got {value}")]
    NonpositivePower { t: usize, value: f64 },

    /// A channel noise variance is not strictly positive.
    #[error("noise variance at t = {t} must be positive, got {value}")]
    NonpositiveNoise { t: usize, value: f64 },

    /// A channel noise covariance has a nonpositive diagonal entry.
    #[error("channel noise covariance at t = {t}, coordinate {i} must be positive, got {value}")]
    SingularQ { t: usize, i: usize, value: f64 },

    /// A time index is outside 0..=n.
    #[error("time index {t} out of range 0..={n}")]
    TimeIndexOutOfRange { t: usize, n: usize },

    /// A rate argument is negative.
    #[error("rate at (t = {t}, i = {i}) must be nonnegative, got {value}")]
    NegativeRate { t: usize, i: usize, value: f64 },

    /// A mutual-information argument is negative.
    #[error("mutual information at (t = {t}, i = {i}) must be nonnegative, got {value}")]
    NegativeMutualInformation { t: usize, i: usize, value: f64 },

    /// Components passed to a simulation do not describe the same system.
    #[error("inconsistent components: {0}")]
    InconsistentComponents(String),
}

pub type Result<T> = std::result::Result<T, Error>;
