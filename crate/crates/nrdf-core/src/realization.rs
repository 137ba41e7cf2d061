//! Encoder, channel, and decoder matrices realizing the optimal reproduction
//! distribution, plus the causal filter recursion they drive.
//!
//! From a waterfilling allocation the construction is diagonal in each
//! stage's eigenbasis:
//!
//! ```text
//! η_{t,i} = 1 − δ_{t,i}/λ_{t,i}          (0 when λ_{t,i} = 0)
//! H_t = diag(η_t),  Φ_t = √(H_t Δ_t Q_t⁻¹),  Θ_t = Φ_t⁻¹ H_t
//! ```
//!
//! with `Θ` set to 0 on clipped coordinates (η = 0: the coordinate carries
//! no information, so its channel slot transmits pure noise). The recursion
//!
//! ```text
//! Ŷpred_t = A_{t-1} Y_{t-1}            (0 at t = 0)
//! Z_t = Θ_t E_t (X_t − Ŷpred_t) + V_t,   V_t ~ N(0, Q_t)
//! Y_t = Ŷpred_t + E_tᵀ Φ_t Z_t
//! ```
//!
//! achieves mean squared error exactly `Σ_i δ_{t,i}` at every stage. The
//! choice of `Q_t` is free (diagonal positive definite); `Φ` compensates, so
//! the law of `Y` is invariant to it and the default is the identity.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::source_model::SourceModel;
use crate::waterfill::WaterfillSolution;

/// Diagonal realization matrices, stored as the diagonals.
#[derive(Debug, Clone)]
pub struct RealizationMatrices {
    /// η_t diagonals of H_t, entries in [0, 1].
    pub h_seq: Vec<DVector<f64>>,
    /// δ_t diagonals of Δ_t.
    pub delta_seq: Vec<DVector<f64>>,
    /// Channel noise variances, diagonals of Q_t (positive).
    pub q_seq: Vec<DVector<f64>>,
    /// Diagonals of Φ_t = √(H_t Δ_t Q_t⁻¹).
    pub phi_seq: Vec<DVector<f64>>,
    /// Diagonals of Θ_t = Φ_t⁻¹ H_t on active coordinates, 0 on clipped ones.
    pub theta_seq: Vec<DVector<f64>>,
    /// Eigenvector rows E_t from the waterfilling solution.
    pub eigvecs: Vec<DMatrix<f64>>,
}

impl RealizationMatrices {
    /// Horizon index n.
    pub fn horizon_n(&self) -> usize {
        self.h_seq.len() - 1
    }

    /// State dimension p.
    pub fn state_dim_p(&self) -> usize {
        self.h_seq[0].len()
    }

    /// Eigenvalues recovered from the stored diagonals: `λ = δ/(1 − η)`,
    /// which reduces to `λ = δ` on clipped coordinates (η = 0).
    pub fn eigvals(&self, t: usize) -> DVector<f64> {
        DVector::from_fn(self.state_dim_p(), |i, _| {
            self.delta_seq[t][i] / (1.0 - self.h_seq[t][i])
        })
    }
}

/// State produced by one step of the causal filter recursion.
#[derive(Debug, Clone)]
pub struct FilterState {
    /// Predictor A_{t-1} Y_{t-1} (zero at t = 0).
    pub predictor: DVector<f64>,
    /// Reproduction Y_t.
    pub reproduction: DVector<f64>,
    /// Channel input Z_t.
    pub channel_input: DVector<f64>,
}

/// One step of the gain-form predictor update.
#[derive(Debug, Clone)]
pub struct KalmanStep {
    /// Next predictor X̂_{t+1|t}.
    pub predictor_next: DVector<f64>,
    /// True when some coordinate is clipped at this stage, so the innovation
    /// covariance is singular and the gain uses its pseudo-inverse.
    pub degenerate_gain: bool,
}

/// Builds the realization matrices from a waterfilling solution.
///
/// `q_seq` supplies the channel noise variances per stage (diagonals of
/// `Q_t`); absent, every stage uses the identity.
pub fn build_realization(
    sol: &WaterfillSolution,
    q_seq: Option<&[DVector<f64>]>,
) -> Result<RealizationMatrices> {
    let stages = sol.deltas.len();
    let p = sol.deltas[0].len();

    let q_seq: Vec<DVector<f64>> = match q_seq {
        Some(qs) => {
            if qs.len() != stages {
                return Err(Error::InconsistentComponents(format!(
                    "expected {stages} noise stages, got {}",
                    qs.len()
                )));
            }
            for (t, q) in qs.iter().enumerate() {
                if q.len() != p {
                    return Err(Error::InconsistentComponents(format!(
                        "noise stage {t} has {} entries, expected {p}",
                        q.len()
                    )));
                }
                for i in 0..p {
                    if !(q[i] > 0.0) {
                        return Err(Error::SingularQ {
                            t,
                            i,
                            value: q[i],
                        });
                    }
                }
            }
            qs.to_vec()
        }
        None => vec![DVector::from_element(p, 1.0); stages],
    };

    let mut h_seq = Vec::with_capacity(stages);
    let mut phi_seq = Vec::with_capacity(stages);
    let mut theta_seq = Vec::with_capacity(stages);
    for t in 0..stages {
        let lam = &sol.eigvals[t];
        let delta = &sol.deltas[t];
        let mut eta = DVector::zeros(p);
        let mut phi = DVector::zeros(p);
        let mut theta = DVector::zeros(p);
        for i in 0..p {
            // δ = min(ξ, λ) keeps η in [0, 1]; λ = 0 means a deterministic
            // coordinate with nothing to encode.
            let e = if lam[i] > 0.0 {
                (1.0 - delta[i] / lam[i]).max(0.0)
            } else {
                0.0
            };
            eta[i] = e;
            phi[i] = (e * delta[i] / q_seq[t][i]).sqrt();
            theta[i] = if phi[i] > 0.0 { e / phi[i] } else { 0.0 };
        }
        h_seq.push(eta);
        phi_seq.push(phi);
        theta_seq.push(theta);
    }

    Ok(RealizationMatrices {
        h_seq,
        delta_seq: sol.deltas.clone(),
        q_seq,
        phi_seq,
        theta_seq,
        eigvecs: sol.eigvecs.clone(),
    })
}

fn check_step_inputs(
    real: &RealizationMatrices,
    model: &SourceModel,
    t: usize,
    vectors: &[(&'static str, &DVector<f64>)],
) -> Result<()> {
    let n = real.horizon_n();
    let p = real.state_dim_p();
    if model.horizon_n != n || model.state_dim_p != p {
        return Err(Error::InconsistentComponents(format!(
            "model is (n={}, p={}) but realization is (n={n}, p={p})",
            model.horizon_n, model.state_dim_p
        )));
    }
    if t > n {
        return Err(Error::TimeIndexOutOfRange { t, n });
    }
    for &(what, v) in vectors {
        if v.len() != p {
            return Err(Error::DimensionMismatch {
                what,
                t,
                expected: format!("{p}"),
                got: format!("{}", v.len()),
            });
        }
    }
    Ok(())
}

/// Advances the reproduction one step: encodes the innovation, passes it
/// through the noisy channel, and decodes.
///
/// `v_t` is the channel noise draw (distributed N(0, Q_t) in simulation; any
/// vector is accepted since the step is a pure function). At `t = 0` the
/// predictor is 0, the unconditional mean, and `y_prev` is ignored.
pub fn filter_step(
    real: &RealizationMatrices,
    model: &SourceModel,
    t: usize,
    x_t: &DVector<f64>,
    y_prev: &DVector<f64>,
    v_t: &DVector<f64>,
) -> Result<FilterState> {
    check_step_inputs(
        real,
        model,
        t,
        &[("x_t", x_t), ("y_prev", y_prev), ("v_t", v_t)],
    )?;
    let p = real.state_dim_p();
    let e = &real.eigvecs[t];

    let predictor = if t == 0 {
        DVector::zeros(p)
    } else {
        &model.a_seq[t - 1] * y_prev
    };
    let innovation = x_t - &predictor;
    let coords = e * &innovation;
    let channel_input = real.theta_seq[t].component_mul(&coords) + v_t;
    let reproduction = &predictor + e.transpose() * real.phi_seq[t].component_mul(&channel_input);

    // Same step with Φ Θ collapsed to H; the two forms are one identity, so
    // any disagreement beyond rounding indicates corrupted matrices.
    let direct = &predictor
        + e.transpose() * real.h_seq[t].component_mul(&coords)
        + e.transpose() * real.phi_seq[t].component_mul(v_t);
    let scale = 1.0 + reproduction.amax();
    assert!(
        (&reproduction - &direct).amax() <= 1e-12 * scale,
        "factored and collapsed reproduction forms disagree at t={t}"
    );

    Ok(FilterState {
        predictor,
        reproduction,
        channel_input,
    })
}

/// Gain-form predictor update
/// `X̂_{t+1|t} = A_t X̂_{t|t-1} + A_t Π_t (E_tᵀ H_t E_t)ᵀ M_t⁻¹ (Y_t − X̂_{t|t-1})`
/// with innovation covariance `M_t = E_tᵀ H_t Λ_t E_t`.
///
/// The gain collapses to the identity on active coordinates, so with nothing
/// clipped the update is exactly `A_t Y_t` (asserted to 1e-10). Clipped
/// coordinates make `M_t` singular; the pseudo-inverse restricted to active
/// coordinates is used and `degenerate_gain` is flagged, with the collapse
/// asserted on the active subspace.
pub fn kalman_form_step(
    real: &RealizationMatrices,
    model: &SourceModel,
    t: usize,
    y_t: &DVector<f64>,
    x_hat_prev: &DVector<f64>,
) -> Result<KalmanStep> {
    check_step_inputs(real, model, t, &[("y_t", y_t), ("x_hat_prev", x_hat_prev)])?;
    let p = real.state_dim_p();
    let e = &real.eigvecs[t];
    let a = &model.a_seq[t];
    let eta = &real.h_seq[t];
    let lam = real.eigvals(t);

    let degenerate = (0..p).any(|i| eta[i] <= 0.0);
    let pinv_diag = DVector::from_fn(p, |i, _| {
        if eta[i] > 0.0 {
            1.0 / (eta[i] * lam[i])
        } else {
            0.0
        }
    });

    // Literal gain: A Π (EᵀHE)ᵀ M⁺ with Π = EᵀΛE and M = EᵀHΛE.
    let pi = e.transpose() * DMatrix::from_diagonal(&lam) * e;
    let h_full = e.transpose() * DMatrix::from_diagonal(eta) * e;
    let m_pinv = e.transpose() * DMatrix::from_diagonal(&pinv_diag) * e;
    let gain = a * &pi * h_full.transpose() * m_pinv;

    let innovation = y_t - x_hat_prev;
    let predictor_next = a * x_hat_prev + &gain * &innovation;

    // The product Λ H (HΛ)⁺ is the indicator of active coordinates, so the
    // gain is A projected onto them; with full rank the update is A y.
    let active = DVector::from_fn(p, |i, _| if eta[i] > 0.0 { 1.0 } else { 0.0 });
    let projected =
        a * (x_hat_prev + e.transpose() * active.component_mul(&(e * &innovation)));
    let scale = 1.0 + predictor_next.amax();
    assert!(
        (&predictor_next - &projected).amax() <= 1e-10 * scale,
        "gain form disagrees with its active-coordinate collapse at t={t}"
    );

    Ok(KalmanStep {
        predictor_next,
        degenerate_gain: degenerate,
    })
}
