//! Machine-readable artifacts: JSON documents and plot-ready CSV tables.
//!
//! Every numeric field carries its unit in its name (`_bits`, `_nats`, or
//! dimensionless). Serialization is deterministic, so identical inputs give
//! byte-identical outputs.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use nrdf_core::rate_functions::RateBreakdown;
use nrdf_core::simulate::SimulationReport;
use nrdf_core::waterfill::WaterfillSolution;
use nrdf_core::ChannelPlan;

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn vector_entries(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// Solved waterfilling allocation.
#[derive(Debug, Serialize)]
pub struct WaterfillArtifact {
    pub rate_bits: f64,
    pub rate_nats: f64,
    pub water_level: f64,
    pub iterations: usize,
    pub saturated: bool,
    pub target_distortion: f64,
    pub achieved_distortion: f64,
    /// Σ_i δ_{t,i} per stage.
    pub per_stage_distortion: Vec<f64>,
    pub eigvals: Vec<Vec<f64>>,
    pub deltas: Vec<Vec<f64>>,
    pub eigvecs: Vec<Vec<Vec<f64>>>,
    pub pred_cov: Vec<Vec<Vec<f64>>>,
}

impl WaterfillArtifact {
    pub fn new(sol: &WaterfillSolution, rate_bits: f64, rate_nats: f64) -> Self {
        Self {
            rate_bits,
            rate_nats,
            water_level: sol.water_level,
            iterations: sol.iterations,
            saturated: sol.saturated,
            target_distortion: sol.target_distortion,
            achieved_distortion: sol.achieved_distortion,
            per_stage_distortion: sol.stage_distortions(),
            eigvals: sol.eigvals.iter().map(vector_entries).collect(),
            deltas: sol.deltas.iter().map(vector_entries).collect(),
            eigvecs: sol.eigvecs.iter().map(matrix_rows).collect(),
            pred_cov: sol.pred_cov.iter().map(matrix_rows).collect(),
        }
    }
}

/// Rate of a solved allocation.
#[derive(Debug, Serialize)]
pub struct RateArtifact {
    pub total_rate_bits: f64,
    pub total_rate_nats: f64,
    /// r_{t,i} in bits, one row per stage.
    pub per_coord_rates_bits: Vec<Vec<f64>>,
    pub water_level: f64,
    pub saturated: bool,
    pub achieved_distortion: f64,
    pub iterations: usize,
}

impl RateArtifact {
    pub fn new(sol: &WaterfillSolution, bits: &RateBreakdown, total_nats: f64) -> Self {
        Self {
            total_rate_bits: bits.total_rate,
            total_rate_nats: total_nats,
            per_coord_rates_bits: bits.per_coord_rates.iter().map(vector_entries).collect(),
            water_level: sol.water_level,
            saturated: sol.saturated,
            achieved_distortion: sol.achieved_distortion,
            iterations: sol.iterations,
        }
    }
}

/// Distortion found for a target rate by inverting the rate curve.
#[derive(Debug, Serialize)]
pub struct DrfArtifact {
    pub target_rate_bits: f64,
    pub distortion: f64,
    pub achieved_rate_bits: f64,
    pub water_level: f64,
    pub saturated: bool,
    /// Distortion values probed by the outer search.
    pub outer_iterations: usize,
}

/// Monte-Carlo report, mirroring the simulation module's fields.
#[derive(Debug, Serialize)]
pub struct SimArtifact {
    pub num_trajectories: usize,
    pub seed: u64,
    pub per_time_mse: Vec<f64>,
    pub per_time_mse_stderr: Vec<f64>,
    pub total_distortion: f64,
    pub total_distortion_stderr: f64,
    pub analytic_deltas: Vec<f64>,
    pub analytic_rate_bits: f64,
}

impl SimArtifact {
    pub fn new(report: &SimulationReport) -> Self {
        Self {
            num_trajectories: report.num_trajectories,
            seed: report.seed,
            per_time_mse: report.per_time_mse.clone(),
            per_time_mse_stderr: report.per_time_mse_stderr.clone(),
            total_distortion: report.total_distortion,
            total_distortion_stderr: report.total_distortion_stderr,
            analytic_deltas: report.analytic_deltas.clone(),
            analytic_rate_bits: report.analytic_rate_bits,
        }
    }
}

/// Matched transmission plan, optionally with its Monte-Carlo validation.
#[derive(Debug, Serialize)]
pub struct ChannelMatchArtifact {
    pub powers: Vec<f64>,
    pub noise_vars: Vec<f64>,
    pub delta_min: Vec<f64>,
    pub d_min: f64,
    pub capacity_nats: f64,
    pub capacity_bits: f64,
    pub matched_rate_nats: f64,
    pub solver_rate_nats: f64,
    pub matching_residual_nats: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimArtifact>,
}

impl ChannelMatchArtifact {
    pub fn new(plan: &ChannelPlan, sim: Option<SimArtifact>) -> Self {
        Self {
            powers: plan.powers.clone(),
            noise_vars: plan.noise_vars.clone(),
            delta_min: plan.delta_min.clone(),
            d_min: plan.d_min,
            capacity_nats: plan.capacity_nats,
            capacity_bits: plan.capacity_nats / std::f64::consts::LN_2,
            matched_rate_nats: plan.matched_rate_nats,
            solver_rate_nats: plan.solver_rate_nats,
            matching_residual_nats: plan.matching_residual_nats,
            sim,
        }
    }
}

/// Information-theoretic distortion floor at given per-coordinate rates.
#[derive(Debug, Serialize)]
pub struct BoundArtifact {
    pub target_distortion: f64,
    pub bound_distortion: f64,
    /// True when the mutual informations came from the config rather than
    /// from the solved allocation's own rates.
    pub used_config_mutual_infos: bool,
    pub eigvals: Vec<Vec<f64>>,
    pub mutual_infos_nats: Vec<Vec<f64>>,
}

/// Renders any artifact as pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(artifact: &T) -> String {
    let mut s = serde_json::to_string_pretty(artifact).expect("artifacts serialize");
    s.push('\n');
    s
}

/// Waterfilling bar data: one row per (stage, coordinate).
pub fn waterfill_csv(sol: &WaterfillSolution) -> String {
    let mut out = String::from("t,i,lambda,delta,xi\n");
    for (t, (lam, delta)) in sol.eigvals.iter().zip(&sol.deltas).enumerate() {
        for i in 0..lam.len() {
            out.push_str(&format!(
                "{t},{i},{},{},{}\n",
                lam[i], delta[i], sol.water_level
            ));
        }
    }
    out
}

/// Per-coordinate rates alongside the allocation that produced them.
pub fn rate_csv(sol: &WaterfillSolution, bits: &RateBreakdown) -> String {
    let mut out = String::from("t,i,lambda,delta,rate_bits\n");
    for (t, (lam, rates)) in sol.eigvals.iter().zip(&bits.per_coord_rates).enumerate() {
        for i in 0..lam.len() {
            out.push_str(&format!(
                "{t},{i},{},{},{}\n",
                lam[i], sol.deltas[t][i], rates[i]
            ));
        }
    }
    out
}

/// Per-time simulation table.
pub fn sim_csv(report: &SimulationReport) -> String {
    let mut out = String::from("t,analytic_delta,empirical_mse,stderr\n");
    for t in 0..report.per_time_mse.len() {
        out.push_str(&format!(
            "{t},{},{},{}\n",
            report.analytic_deltas[t], report.per_time_mse[t], report.per_time_mse_stderr[t]
        ));
    }
    out
}

/// Per-time plan table for a channel-match run without simulation.
pub fn channel_plan_csv(plan: &ChannelPlan) -> String {
    let mut out = String::from("t,power,noise_var,delta_min\n");
    for t in 0..plan.powers.len() {
        out.push_str(&format!(
            "{t},{},{},{}\n",
            plan.powers[t], plan.noise_vars[t], plan.delta_min[t]
        ));
    }
    out
}

/// Single-row table for the distortion search.
pub fn drf_csv(artifact: &DrfArtifact) -> String {
    format!(
        "target_rate_bits,distortion,achieved_rate_bits,water_level\n{},{},{},{}\n",
        artifact.target_rate_bits,
        artifact.distortion,
        artifact.achieved_rate_bits,
        artifact.water_level
    )
}

/// Single-row table for the lower bound.
pub fn bound_csv(artifact: &BoundArtifact) -> String {
    format!(
        "target_distortion,bound_distortion\n{},{}\n",
        artifact.target_distortion, artifact.bound_distortion
    )
}
