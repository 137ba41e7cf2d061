//! Time-varying Gauss-Markov source process.
//!
//! The source is the linear state-space recursion
//!
//! ```text
//! X_{t+1} = A_t X_t + B_t W_t,   t = 0..n-1,
//! X_0 ~ N(0, Σ_0),               W_t ~ N(0, I_k) i.i.d.,
//! ```
//!
//! with `X_t` a p-vector and `W_t` a k-vector. The model carries n+1 matrices
//! for both sequences: sampling only consumes `A_0..A_{n-1}`, but the filter
//! realization needs `A_t` up to t = n, so the trailing matrix is accepted
//! here and ignored by [`sample_trajectory`].
//!
//! # RNG contract
//!
//! All randomness comes from ChaCha8 streams. For a Monte-Carlo run seeded
//! with `seed`, trajectory `m` draws its source noise (the `X_0` vector
//! followed by `W_0..W_{n-1}`, each coordinate one standard normal) from
//! stream `2m` and its channel noise from stream `2m + 1`. This mapping is
//! stable across releases; [`sample_trajectory`] is trajectory 0's source
//! stream, so a simulation's first trajectory reproduces it exactly.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

/// Time-varying Gauss-Markov model over the horizon t = 0..n.
#[derive(Debug, Clone)]
pub struct SourceModel {
    /// Horizon index n; the process has n+1 time steps.
    pub horizon_n: usize,
    /// State dimension p.
    pub state_dim_p: usize,
    /// Process-noise dimension k.
    pub noise_dim_k: usize,
    /// Dynamics matrices `A_0..A_n`, each p×p (`A_n` unused by sampling).
    pub a_seq: Vec<DMatrix<f64>>,
    /// Noise input matrices `B_0..B_n`, each p×k.
    pub b_seq: Vec<DMatrix<f64>>,
    /// Initial error covariance `Σ_0` (the covariance of `X_0` when the
    /// initial predictor is 0), p×p symmetric PSD.
    pub init_error_cov: DMatrix<f64>,
}

impl SourceModel {
    /// Builds a model and validates it in one step.
    pub fn new(
        horizon_n: usize,
        state_dim_p: usize,
        noise_dim_k: usize,
        a_seq: Vec<DMatrix<f64>>,
        b_seq: Vec<DMatrix<f64>>,
        init_error_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let model = Self {
            horizon_n,
            state_dim_p,
            noise_dim_k,
            a_seq,
            b_seq,
            init_error_cov,
        };
        validate_model(&model)?;
        Ok(model)
    }

    /// Convenience constructor for scalar (p = k = 1) models.
    ///
    /// `alphas[t]` is the dynamics coefficient α_t and `noise_vars[t]` the
    /// process-noise variance σ²_{W_t} (so B_t = σ_{W_t}).
    pub fn scalar(alphas: &[f64], noise_vars: &[f64], init_var: f64) -> Result<Self> {
        if alphas.len() != noise_vars.len() {
            return Err(Error::InvalidInput(format!(
                "alphas ({}) and noise_vars ({}) must have equal length",
                alphas.len(),
                noise_vars.len()
            )));
        }
        if alphas.is_empty() {
            return Err(Error::InvalidInput("horizon must have at least one step".into()));
        }
        for (t, &v) in noise_vars.iter().enumerate() {
            if !(v > 0.0) {
                return Err(Error::NonpositiveNoise { t, value: v });
            }
        }
        if !(init_var > 0.0) {
            return Err(Error::InvalidInput(format!(
                "initial variance must be positive, got {init_var}"
            )));
        }
        Self::new(
            alphas.len() - 1,
            1,
            1,
            alphas.iter().map(|&a| DMatrix::from_element(1, 1, a)).collect(),
            noise_vars
                .iter()
                .map(|&v| DMatrix::from_element(1, 1, v.sqrt()))
                .collect(),
            DMatrix::from_element(1, 1, init_var),
        )
    }
}

/// One sampled path `x_0..x_n` of the source process.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Realized states, length n+1.
    pub states: Vec<DVector<f64>>,
}

/// Checks every structural invariant of a [`SourceModel`].
///
/// Errors name the offending sequence and time index. The initial covariance
/// must be symmetric within 1e-12 relative tolerance with no eigenvalue below
/// the clamping threshold.
pub fn validate_model(model: &SourceModel) -> Result<()> {
    let (n, p, k) = (model.horizon_n, model.state_dim_p, model.noise_dim_k);
    if p == 0 || k == 0 {
        return Err(Error::InvalidInput("state and noise dimensions must be at least 1".into()));
    }
    if model.a_seq.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            what: "a_seq length",
            t: model.a_seq.len(),
            expected: format!("{} matrices", n + 1),
            got: format!("{}", model.a_seq.len()),
        });
    }
    if model.b_seq.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            what: "b_seq length",
            t: model.b_seq.len(),
            expected: format!("{} matrices", n + 1),
            got: format!("{}", model.b_seq.len()),
        });
    }
    for (t, a) in model.a_seq.iter().enumerate() {
        if a.nrows() != p || a.ncols() != p {
            return Err(Error::DimensionMismatch {
                what: "a_seq",
                t,
                expected: format!("{p}x{p}"),
                got: format!("{}x{}", a.nrows(), a.ncols()),
            });
        }
    }
    for (t, b) in model.b_seq.iter().enumerate() {
        if b.nrows() != p || b.ncols() != k {
            return Err(Error::DimensionMismatch {
                what: "b_seq",
                t,
                expected: format!("{p}x{k}"),
                got: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
    }
    let cov = &model.init_error_cov;
    if cov.nrows() != p || cov.ncols() != p {
        return Err(Error::DimensionMismatch {
            what: "init_error_cov",
            t: 0,
            expected: format!("{p}x{p}"),
            got: format!("{}x{}", cov.nrows(), cov.ncols()),
        });
    }
    let scale = 1.0 + cov.amax();
    for r in 0..p {
        for c in (r + 1)..p {
            let asym = (cov[(r, c)] - cov[(c, r)]).abs();
            if asym > 1e-12 * scale {
                return Err(Error::NotSymmetricPsd(format!(
                    "init_error_cov asymmetry {asym:.3e} at ({r}, {c})"
                )));
            }
        }
    }
    // Eigenvalue floor check; diagonalize performs the clamped decomposition.
    linalg::diagonalize(cov).map_err(|e| Error::NotSymmetricPsd(e.to_string()))?;
    Ok(())
}

/// ChaCha8 stream carrying the source noise of trajectory `index`.
pub(crate) fn source_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index);
    rng
}

/// ChaCha8 stream carrying the channel noise of trajectory `index`.
pub(crate) fn channel_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2 * index + 1);
    rng
}

/// Draws a standard-normal vector of length `dim`.
pub(crate) fn standard_normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Samples one trajectory given the source rng and a precomputed square root
/// of the initial covariance. Draw order: `X_0`, then `W_0..W_{n-1}`.
pub(crate) fn sample_with(
    model: &SourceModel,
    init_sqrt: &DMatrix<f64>,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let (n, p, k) = (model.horizon_n, model.state_dim_p, model.noise_dim_k);
    let mut states = Vec::with_capacity(n + 1);
    states.push(init_sqrt * standard_normal_vector(rng, p));
    for t in 0..n {
        let w = standard_normal_vector(rng, k);
        let next = &model.a_seq[t] * &states[t] + &model.b_seq[t] * w;
        states.push(next);
    }
    Trajectory { states }
}

/// Samples `x_0..x_n`: `X_0 ~ N(0, Σ_0)` via the eigendecomposition square
/// root (robust for semidefinite Σ_0), then the state recursion with i.i.d.
/// standard-normal `W_t`. Pure in `(model, rng_seed)`; uses source stream 0
/// of the RNG contract described in the module docs.
pub fn sample_trajectory(model: &SourceModel, rng_seed: u64) -> Result<Trajectory> {
    validate_model(model)?;
    let init_sqrt = linalg::psd_sqrt(&model.init_error_cov)?;
    let mut rng = source_stream(rng_seed, 0);
    Ok(sample_with(model, &init_sqrt, &mut rng))
}
