//! Causal rate-distortion analysis for time-varying Gauss-Markov sources.
//!
//! The crate computes the minimum information rate at which the state of
//!
//! ```text
//! X_{t+1} = A_t X_t + B_t W_t,   W_t ~ N(0, I),   X_0 ~ N(0, Σ_0)
//! ```
//!
//! can be reproduced causally (each output depending only on past and
//! present inputs) under an average mean-squared-error budget, together
//! with everything needed to check the answer empirically:
//!
//! - [`waterfill`]: the coupled time-space reverse-waterfilling solver that
//!   allocates distortion across stages and eigen-coordinates.
//! - [`rate_functions`]: rates of an allocation, the rate-matched and
//!   information-bound distortions, and the classical single-stage results.
//! - [`realization`]: the encoder/channel/decoder matrices that achieve the
//!   allocation with equality, and their causal filter recursion.
//! - [`channel_match`]: scalar transmission over an AWGN channel used once
//!   per source symbol, matched so the scheme spends exactly the capacity.
//! - [`simulate`]: reproducible parallel Monte-Carlo over the above.
//! - [`source_model`]: the state-space model, validation, and seeded
//!   trajectory sampling.
//! - [`linalg`]: deterministic symmetric eigendecomposition (descending
//!   eigenvalues, sign-fixed eigenvector rows) shared by all modules.
//!
//! Rates are nats internally; conversion to bits happens only at the edges
//! via [`rate_functions::LogBase`].

// Parameter guards are written `!(x > 0.0)` so NaN is rejected along with
// nonpositives; `x <= 0.0` would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Sweeps index several per-stage sequences in lockstep, where a shared index
// reads better than zipped iterator chains.
#![allow(clippy::needless_range_loop)]

pub mod channel_match;
pub mod error;
pub mod linalg;
pub mod rate_functions;
pub mod realization;
pub mod simulate;
pub mod source_model;
pub mod waterfill;

pub use channel_match::{awgn_capacity, matched_coder_step, min_distortion_plan, ChannelPlan};
pub use error::{Error, Result};
pub use rate_functions::{
    classical_gaussian_vector_rdf, ndrf_distortion, nrdf_rate, scalar_rdf_realization_params,
    universal_lower_bound, LogBase, RateBreakdown,
};
pub use realization::{
    build_realization, filter_step, kalman_form_step, FilterState, KalmanStep,
    RealizationMatrices,
};
pub use simulate::{run_channel_match_sim, run_realization_sim, SimulationReport};
pub use source_model::{sample_trajectory, validate_model, SourceModel, Trajectory};
pub use waterfill::{
    solve, solve_scalar, verify_kkt, waterfill_pass, KktReport, SolverOptions, Strategy,
    WaterfillPass, WaterfillSolution,
};
