//! Rate computations on top of a waterfilling allocation.
//!
//! All internal arithmetic is in nats; [`LogBase::Two`] converts on output
//! only, so base conversion is a single multiplication by `1/ln 2` and never
//! touches the optimization.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::waterfill::WaterfillSolution;

/// Output unit for rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogBase {
    /// Natural logarithm: nats.
    E,
    /// Base-2 logarithm: bits.
    Two,
}

impl LogBase {
    // Reads as "this base's value, from nats"; self is the target base.
    #[allow(clippy::wrong_self_convention)]
    fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::E => nats,
            LogBase::Two => nats / std::f64::consts::LN_2,
        }
    }
}

/// Per-coordinate and total rate of a waterfilling allocation.
#[derive(Debug, Clone)]
pub struct RateBreakdown {
    /// `r_{t,i} = ½ log max(1, λ_{t,i}/δ_{t,i})` in the requested base.
    pub per_coord_rates: Vec<DVector<f64>>,
    /// `(1/(n+1)) Σ_{t,i} r_{t,i}`.
    pub total_rate: f64,
    /// Base the rates are expressed in.
    pub log_base: LogBase,
}

/// Computes the rate of a waterfilling allocation.
///
/// Clipped coordinates (`δ = λ`) contribute exactly zero; the `max(1, ·)`
/// guard keeps tiny negative logs from rounding noise out of the sum, so a
/// saturated solution reports total rate 0.
pub fn nrdf_rate(sol: &WaterfillSolution, base: LogBase) -> Result<RateBreakdown> {
    let mut per_coord = Vec::with_capacity(sol.deltas.len());
    let mut total_nats = 0.0;
    for (t, (lam, delta)) in sol.eigvals.iter().zip(&sol.deltas).enumerate() {
        let mut rates = DVector::zeros(lam.len());
        for i in 0..lam.len() {
            if !(delta[i] > 0.0) {
                // A zero-variance coordinate carries no information; zero
                // distortion against positive variance would need infinite
                // rate and cannot come from a valid allocation.
                if lam[i] <= delta[i] {
                    continue;
                }
                return Err(Error::InvalidInput(format!(
                    "distortion must be positive to carry a rate, got {} at (t={t}, i={i})",
                    delta[i]
                )));
            }
            let ratio = (lam[i] / delta[i]).max(1.0);
            let nats = 0.5 * ratio.ln();
            total_nats += nats;
            rates[i] = base.from_nats(nats);
        }
        per_coord.push(rates);
    }
    let total_nats = total_nats / sol.deltas.len() as f64;
    Ok(RateBreakdown {
        per_coord_rates: per_coord,
        total_rate: base.from_nats(total_nats),
        log_base: base,
    })
}

/// Distortion of the rate-matched allocation: given per-coordinate rates
/// `r_{t,i}` in nats, returns `(1/(n+1)) Σ_{t,i} λ_{t,i} e^{−2 r_{t,i}}`.
///
/// Feeding back the rates of a converged solve reproduces its achieved
/// distortion, since `λ e^{−2·½ ln(λ/δ)} = δ` coordinate-wise.
pub fn ndrf_distortion(eigvals: &[DVector<f64>], rates_nats: &[DVector<f64>]) -> Result<f64> {
    if eigvals.len() != rates_nats.len() {
        return Err(Error::InconsistentComponents(format!(
            "eigenvalue stages ({}) and rate stages ({}) differ",
            eigvals.len(),
            rates_nats.len()
        )));
    }
    if eigvals.is_empty() {
        return Err(Error::InvalidInput("at least one stage is required".into()));
    }
    let mut total = 0.0;
    for (t, (lam, rates)) in eigvals.iter().zip(rates_nats).enumerate() {
        if lam.len() != rates.len() {
            return Err(Error::InconsistentComponents(format!(
                "stage {t}: {} eigenvalues but {} rates",
                lam.len(),
                rates.len()
            )));
        }
        for i in 0..lam.len() {
            if rates[i] < 0.0 {
                return Err(Error::NegativeRate {
                    t,
                    i,
                    value: rates[i],
                });
            }
            total += lam[i] * (-2.0 * rates[i]).exp();
        }
    }
    Ok(total / eigvals.len() as f64)
}

/// Distortion lower bound from per-coordinate mutual informations
/// `I_{t,i}` in nats: `(1/(n+1)) Σ_{t,i} λ_{t,i} e^{−2 I_{t,i}}`.
///
/// No coding scheme spending `I_{t,i}` on coordinate `(t, i)` of this
/// eigenbasis beats it, and the waterfilling allocation meets it with
/// equality at its own rates.
pub fn universal_lower_bound(
    eigvals: &[DVector<f64>],
    mutual_infos_nats: &[DVector<f64>],
) -> Result<f64> {
    if eigvals.len() != mutual_infos_nats.len() {
        return Err(Error::InconsistentComponents(format!(
            "eigenvalue stages ({}) and mutual-information stages ({}) differ",
            eigvals.len(),
            mutual_infos_nats.len()
        )));
    }
    if eigvals.is_empty() {
        return Err(Error::InvalidInput("at least one stage is required".into()));
    }
    let mut total = 0.0;
    for (t, (lam, infos)) in eigvals.iter().zip(mutual_infos_nats).enumerate() {
        if lam.len() != infos.len() {
            return Err(Error::InconsistentComponents(format!(
                "stage {t}: {} eigenvalues but {} mutual informations",
                lam.len(),
                infos.len()
            )));
        }
        for i in 0..lam.len() {
            if infos[i] < 0.0 {
                return Err(Error::NegativeMutualInformation {
                    t,
                    i,
                    value: infos[i],
                });
            }
            total += lam[i] * (-2.0 * infos[i]).exp();
        }
    }
    Ok(total / eigvals.len() as f64)
}

/// Classical single-stage Gaussian vector rate distortion: waterfills the
/// eigenvalues of one covariance against `Σ_i min(ξ, λ_i) = D` (unnormalized,
/// unlike the per-stage average used elsewhere) and returns
/// `(rate, per-coordinate distortions)` in the requested base.
///
/// The level is found exactly: with eigenvalues sorted ascending, ξ is linear
/// in D on each segment where the set of clipped coordinates is fixed.
pub fn classical_gaussian_vector_rdf(
    eigvals: &DVector<f64>,
    distortion_d: f64,
    base: LogBase,
) -> Result<(f64, DVector<f64>)> {
    if eigvals.is_empty() {
        return Err(Error::InvalidInput("at least one eigenvalue is required".into()));
    }
    if !(distortion_d > 0.0) {
        return Err(Error::InvalidInput(format!(
            "distortion budget must be positive, got {distortion_d}"
        )));
    }
    for i in 0..eigvals.len() {
        if eigvals[i] < 0.0 {
            return Err(Error::InvalidInput(format!(
                "eigenvalue {i} is negative: {}",
                eigvals[i]
            )));
        }
    }

    let mut sorted: Vec<f64> = eigvals.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let total: f64 = sorted.iter().sum();

    let xi = if distortion_d >= total {
        // Zero-rate regime: every coordinate clipped.
        *sorted.last().unwrap()
    } else {
        // Walk the ascending eigenvalues: while ξ exceeds the k smallest,
        // they are clipped and the rest share the level, so
        // D = Σ_{j<k} λ_j + (m−k) ξ on that segment.
        let m = sorted.len();
        let mut clipped_sum = 0.0;
        let mut xi = 0.0;
        for k in 0..m {
            let candidate = (distortion_d - clipped_sum) / (m - k) as f64;
            if candidate <= sorted[k] {
                xi = candidate;
                break;
            }
            clipped_sum += sorted[k];
            xi = candidate;
        }
        xi
    };

    let deltas = eigvals.map(|l| l.min(xi));
    let mut rate_nats = 0.0;
    for i in 0..eigvals.len() {
        if deltas[i] > 0.0 {
            rate_nats += 0.5 * (eigvals[i] / deltas[i]).max(1.0).ln();
        }
    }
    Ok((base.from_nats(rate_nats), deltas))
}

/// Coefficients of the single-letter scalar realization
/// `Y = (1 − D/σ²) X + V` with `V ~ N(0, D(1 − D/σ²))`: returns
/// `(gain, noise_variance)`.
///
/// A budget at or above the source variance needs no channel at all, so the
/// degenerate pair `(0, 0)` is returned rather than an error.
pub fn scalar_rdf_realization_params(variance: f64, distortion_d: f64) -> Result<(f64, f64)> {
    if !(variance > 0.0) {
        return Err(Error::InvalidInput(format!(
            "source variance must be positive, got {variance}"
        )));
    }
    if !(distortion_d > 0.0) {
        return Err(Error::InvalidInput(format!(
            "distortion budget must be positive, got {distortion_d}"
        )));
    }
    if distortion_d >= variance {
        return Ok((0.0, 0.0));
    }
    let gain = 1.0 - distortion_d / variance;
    Ok((gain, distortion_d * gain))
}
