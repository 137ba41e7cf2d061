//! Scalar source-channel matching over a memoryless AWGN channel used once
//! per source symbol.
//!
//! Given per-time transmit powers P_t and channel noise variances q_t, the
//! smallest end-to-end distortion of the matched uncoded scheme follows the
//! forward recursion
//!
//! ```text
//! δ^min_t = λ_t q_t / (q_t + P_t),    λ_0 = σ²_{X_0},
//! λ_{t+1} = α_t² δ^min_t + σ²_{W_t},
//! ```
//!
//! and the scheme spends exactly the channel capacity: its per-step rate is
//! `½ ln(λ_t/δ^min_t) = ½ ln(1 + P_t/q_t)`, so `matched_rate_nats` equals
//! `capacity_nats` up to rounding by construction.
//!
//! A common-water-level solve of the same source at budget `D = d_min`
//! generally allocates distortion across time differently (its optimality
//! structure is a shared level, the matched scheme's is `δ_t ∝ λ_t`), so its
//! total rate need not coincide with capacity. [`min_distortion_plan`]
//! reports that rate and the gap as diagnostics rather than failing.

use crate::error::{Error, Result};
use crate::rate_functions::{nrdf_rate, LogBase};
use crate::waterfill::{solve_scalar, SolverOptions, Strategy};

/// Matched transmission plan for a scalar source over an AWGN channel.
#[derive(Debug, Clone)]
pub struct ChannelPlan {
    /// Transmit powers P_t.
    pub powers: Vec<f64>,
    /// Channel noise variances q_t.
    pub noise_vars: Vec<f64>,
    /// Per-time minimum distortions δ^min_t.
    pub delta_min: Vec<f64>,
    /// Average minimum distortion `(1/(n+1)) Σ_t δ^min_t`.
    pub d_min: f64,
    /// Channel capacity `½ (1/(n+1)) Σ_t ln(1 + P_t/q_t)` in nats.
    pub capacity_nats: f64,
    /// Rate of the matched allocation, `½ (1/(n+1)) Σ_t ln(λ_t/δ^min_t)`;
    /// equals `capacity_nats` up to rounding.
    pub matched_rate_nats: f64,
    /// Total rate of the common-water-level solve at `D = d_min`.
    pub solver_rate_nats: f64,
    /// `|solver_rate_nats − capacity_nats|`: the gap between the two
    /// allocation structures (zero only when the matched allocation happens
    /// to share a level, e.g. time-invariant models).
    pub matching_residual_nats: f64,
}

impl ChannelPlan {
    /// Horizon index n.
    pub fn horizon_n(&self) -> usize {
        self.powers.len() - 1
    }

    /// λ_t recovered from the plan: `δ^min_t (q_t + P_t)/q_t`.
    pub fn lambda(&self, t: usize) -> f64 {
        self.delta_min[t] * (self.noise_vars[t] + self.powers[t]) / self.noise_vars[t]
    }
}

fn check_channel_params(powers: &[f64], noise_vars: &[f64]) -> Result<()> {
    if powers.len() != noise_vars.len() {
        return Err(Error::InconsistentComponents(format!(
            "powers ({}) and noise_vars ({}) must have equal length",
            powers.len(),
            noise_vars.len()
        )));
    }
    if powers.is_empty() {
        return Err(Error::InvalidInput("horizon must have at least one step".into()));
    }
    for (t, &p) in powers.iter().enumerate() {
        if !(p > 0.0) {
            return Err(Error::NonpositivePower { t, value: p });
        }
    }
    for (t, &q) in noise_vars.iter().enumerate() {
        if !(q > 0.0) {
            return Err(Error::NonpositiveNoise { t, value: q });
        }
    }
    Ok(())
}

/// Average AWGN capacity `½ (1/(n+1)) Σ_t ln(1 + P_t/q_t)` in nats.
pub fn awgn_capacity(powers: &[f64], noise_vars: &[f64]) -> Result<f64> {
    check_channel_params(powers, noise_vars)?;
    let total: f64 = powers
        .iter()
        .zip(noise_vars)
        .map(|(p, q)| 0.5 * (1.0 + p / q).ln())
        .sum();
    Ok(total / powers.len() as f64)
}

/// Runs the minimum-distortion recursion and cross-checks it against the
/// common-water-level solver at the same average budget.
pub fn min_distortion_plan(
    alphas: &[f64],
    source_noise_vars: &[f64],
    init_var: f64,
    powers: &[f64],
    channel_noise_vars: &[f64],
) -> Result<ChannelPlan> {
    check_channel_params(powers, channel_noise_vars)?;
    if alphas.len() != source_noise_vars.len() || alphas.len() != powers.len() {
        return Err(Error::InconsistentComponents(format!(
            "source ({} steps) and channel ({} steps) horizons must agree",
            alphas.len(),
            powers.len()
        )));
    }
    for (t, &v) in source_noise_vars.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::NonpositiveNoise { t, value: v });
        }
    }
    if !(init_var > 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial variance must be positive, got {init_var}"
        )));
    }

    let stages = powers.len();
    let mut delta_min = Vec::with_capacity(stages);
    let mut matched_rate = 0.0;
    let mut lam = init_var;
    for t in 0..stages {
        let delta = lam * channel_noise_vars[t] / (channel_noise_vars[t] + powers[t]);
        matched_rate += 0.5 * (lam / delta).ln();
        delta_min.push(delta);
        if t + 1 < stages {
            lam = alphas[t] * alphas[t] * delta + source_noise_vars[t];
        }
    }
    let d_min = delta_min.iter().sum::<f64>() / stages as f64;
    let capacity_nats = awgn_capacity(powers, channel_noise_vars)?;
    let matched_rate_nats = matched_rate / stages as f64;

    // Reference solve at the same budget, tight enough that the reported gap
    // reflects the allocation structures rather than solver slack.
    let opts = SolverOptions {
        tolerance_eps: 1e-9,
        strategy: Strategy::Bisection,
        ..SolverOptions::default()
    };
    let sol = solve_scalar(alphas, source_noise_vars, init_var, d_min, &opts)?;
    let solver_rate_nats = nrdf_rate(&sol, LogBase::E)?.total_rate;

    Ok(ChannelPlan {
        powers: powers.to_vec(),
        noise_vars: channel_noise_vars.to_vec(),
        delta_min,
        d_min,
        capacity_nats,
        matched_rate_nats,
        solver_rate_nats,
        matching_residual_nats: (solver_rate_nats - capacity_nats).abs(),
    })
}

/// One step of the matched uncoded coder: returns `(z_t, y_t)` where
///
/// ```text
/// z_t = √(P_t/λ_t) (x_t − α_{t-1} y_prev) + channel_noise_draw
/// y_t = α_{t-1} y_prev + √(λ_t/P_t) · P_t/(q_t + P_t) · z_t
/// ```
///
/// with the predictor 0 at `t = 0`. The transmitted component
/// `√(P_t/λ_t) K_t` has power exactly P_t in expectation when driven by the
/// true source, and the per-time end-to-end distortion is δ^min_t.
pub fn matched_coder_step(
    plan: &ChannelPlan,
    alphas: &[f64],
    source_noise_vars: &[f64],
    t: usize,
    x_t: f64,
    y_prev: f64,
    channel_noise_draw: f64,
) -> Result<(f64, f64)> {
    let stages = plan.powers.len();
    if t >= stages {
        return Err(Error::TimeIndexOutOfRange { t, n: stages - 1 });
    }
    if alphas.len() != stages || source_noise_vars.len() != stages {
        return Err(Error::InconsistentComponents(format!(
            "plan has {stages} stages but source parameters have {}/{}",
            alphas.len(),
            source_noise_vars.len()
        )));
    }
    let lam = plan.lambda(t);
    if t > 0 {
        // The plan's λ must be the one generated by these source parameters.
        let from_params =
            alphas[t - 1] * alphas[t - 1] * plan.delta_min[t - 1] + source_noise_vars[t - 1];
        if (lam - from_params).abs() > 1e-10 * (1.0 + lam.abs()) {
            return Err(Error::InconsistentComponents(format!(
                "plan λ_{t} = {lam} but the source recursion gives {from_params}"
            )));
        }
    }

    let predictor = if t == 0 { 0.0 } else { alphas[t - 1] * y_prev };
    let z = (plan.powers[t] / lam).sqrt() * (x_t - predictor) + channel_noise_draw;
    let decoder_gain =
        (lam / plan.powers[t]).sqrt() * plan.powers[t] / (plan.noise_vars[t] + plan.powers[t]);
    Ok((z, predictor + decoder_gain * z))
}
