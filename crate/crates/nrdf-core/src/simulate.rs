//! Monte-Carlo harness: drives sampled source trajectories through the
//! realized filter or the matched coder and reports empirical distortion
//! with confidence intervals.
//!
//! Trajectory `m` draws its source noise from RNG stream `2m` and its
//! channel noise from stream `2m + 1`, both seeded by the report seed, so
//! results are deterministic for a given seed and independent of thread
//! count: trajectories are filled in parallel, reduced serially in index
//! order with compensated summation.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::channel_match::{matched_coder_step, ChannelPlan};
use crate::error::{Error, Result};
use crate::linalg::psd_sqrt;
use crate::rate_functions::{nrdf_rate, LogBase};
use crate::realization::{filter_step, RealizationMatrices};
use crate::source_model::{
    channel_stream, sample_with, source_stream, standard_normal_vector, SourceModel,
};
use crate::waterfill::WaterfillSolution;

/// Empirical distortion report over M independent trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    /// Number of trajectories M.
    pub num_trajectories: usize,
    /// Empirical E‖X_t − Y_t‖² per stage.
    pub per_time_mse: Vec<f64>,
    /// Standard error of each per-time estimate.
    pub per_time_mse_stderr: Vec<f64>,
    /// Arithmetic mean of `per_time_mse`.
    pub total_distortion: f64,
    /// Standard error of the per-trajectory average distortion (stages are
    /// correlated within a trajectory, so this is not derivable from the
    /// per-time standard errors).
    pub total_distortion_stderr: f64,
    /// Σ_i δ_{t,i} per stage from the analytic solution.
    pub analytic_deltas: Vec<f64>,
    /// Analytic rate in bits per source symbol.
    pub analytic_rate_bits: f64,
    /// Seed the report was generated from.
    pub seed: u64,
}

/// Neumaier compensated summation: keeps parallel-filled, serially-reduced
/// sums bit-stable and accurate at large M.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.compensation
    }
}

fn compensated_mean(values: impl Iterator<Item = f64>, count: usize) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value() / count as f64
}

/// Builds the report from per-trajectory squared-error rows.
fn reduce_rows(
    rows: Vec<Vec<f64>>,
    analytic_deltas: Vec<f64>,
    analytic_rate_bits: f64,
    seed: u64,
) -> SimulationReport {
    let m = rows.len();
    let stages = analytic_deltas.len();
    let mf = m as f64;

    let mut per_time_mse = Vec::with_capacity(stages);
    let mut per_time_mse_stderr = Vec::with_capacity(stages);
    for t in 0..stages {
        let mean = compensated_mean(rows.iter().map(|r| r[t]), m);
        let var = compensated_mean(
            rows.iter().map(|r| (r[t] - mean) * (r[t] - mean)),
            m - 1,
        );
        per_time_mse.push(mean);
        per_time_mse_stderr.push((var / mf).sqrt());
    }

    let totals: Vec<f64> = rows
        .iter()
        .map(|r| compensated_mean(r.iter().copied(), stages))
        .collect();
    let total_mean = compensated_mean(totals.iter().copied(), m);
    let total_var = compensated_mean(
        totals.iter().map(|x| (x - total_mean) * (x - total_mean)),
        m - 1,
    );

    SimulationReport {
        num_trajectories: m,
        total_distortion: compensated_mean(per_time_mse.iter().copied(), stages),
        per_time_mse,
        per_time_mse_stderr,
        total_distortion_stderr: (total_var / mf).sqrt(),
        analytic_deltas,
        analytic_rate_bits,
        seed,
    }
}

/// Simulates M trajectories through the realized filter recursion.
pub fn run_realization_sim(
    model: &SourceModel,
    sol: &WaterfillSolution,
    real: &RealizationMatrices,
    num_trajectories: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if num_trajectories < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 trajectories are required for standard errors, got {num_trajectories}"
        )));
    }
    let n = model.horizon_n;
    let p = model.state_dim_p;
    if sol.horizon_n() != n || sol.state_dim_p() != p {
        return Err(Error::InconsistentComponents(format!(
            "solution is (n={}, p={}) but model is (n={n}, p={p})",
            sol.horizon_n(),
            sol.state_dim_p()
        )));
    }
    if real.horizon_n() != n || real.state_dim_p() != p {
        return Err(Error::InconsistentComponents(format!(
            "realization is (n={}, p={}) but model is (n={n}, p={p})",
            real.horizon_n(),
            real.state_dim_p()
        )));
    }

    let init_sqrt = psd_sqrt(&model.init_error_cov)?;
    let rows = (0..num_trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut src = source_stream(seed, idx as u64);
            let traj = sample_with(model, &init_sqrt, &mut src);
            let mut ch = channel_stream(seed, idx as u64);
            let mut y_prev = DVector::zeros(p);
            let mut row = vec![0.0; n + 1];
            for t in 0..=n {
                let mut v = standard_normal_vector(&mut ch, p);
                for i in 0..p {
                    v[i] *= real.q_seq[t][i].sqrt();
                }
                let state = filter_step(real, model, t, &traj.states[t], &y_prev, &v)?;
                row[t] = (&traj.states[t] - &state.reproduction).norm_squared();
                y_prev = state.reproduction;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let analytic_deltas: Vec<f64> = sol.stage_distortions();
    let analytic_rate_bits = nrdf_rate(sol, LogBase::Two)?.total_rate;
    Ok(reduce_rows(rows, analytic_deltas, analytic_rate_bits, seed))
}

/// Simulates M scalar trajectories through the matched coder.
pub fn run_channel_match_sim(
    alphas: &[f64],
    source_noise_vars: &[f64],
    init_var: f64,
    plan: &ChannelPlan,
    num_trajectories: usize,
    seed: u64,
) -> Result<SimulationReport> {
    if num_trajectories < 2 {
        return Err(Error::InvalidInput(format!(
            "at least 2 trajectories are required for standard errors, got {num_trajectories}"
        )));
    }
    if plan.powers.len() != alphas.len() {
        return Err(Error::InconsistentComponents(format!(
            "plan has {} stages but source has {}",
            plan.powers.len(),
            alphas.len()
        )));
    }
    let model = SourceModel::scalar(alphas, source_noise_vars, init_var)?;
    let n = model.horizon_n;
    let init_sqrt = psd_sqrt(&model.init_error_cov)?;

    let rows = (0..num_trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut src = source_stream(seed, idx as u64);
            let traj = sample_with(&model, &init_sqrt, &mut src);
            let mut ch = channel_stream(seed, idx as u64);
            let mut y_prev = 0.0;
            let mut row = vec![0.0; n + 1];
            for t in 0..=n {
                let v = plan.noise_vars[t].sqrt() * standard_normal_vector(&mut ch, 1)[0];
                let x = traj.states[t][0];
                let (_, y) =
                    matched_coder_step(plan, alphas, source_noise_vars, t, x, y_prev, v)?;
                row[t] = (x - y) * (x - y);
                y_prev = y;
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(reduce_rows(
        rows,
        plan.delta_min.clone(),
        plan.capacity_nats / std::f64::consts::LN_2,
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel_match::min_distortion_plan;
    use crate::rate_functions::universal_lower_bound;
    use crate::realization::build_realization;
    use crate::waterfill::{solve, SolverOptions, Strategy};
    use nalgebra::DMatrix;

    fn two_dim_model() -> SourceModel {
        SourceModel::new(
            2,
            2,
            2,
            vec![
                DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, -0.4, 0.0]),
                DMatrix::from_row_slice(2, 2, &[-0.4, 1.0, -0.5, 0.0]),
                DMatrix::from_row_slice(2, 2, &[-0.9, 1.0, -0.5, 0.0]),
            ],
            vec![
                DMatrix::identity(2, 2),
                DMatrix::from_partial_diagonal(2, 2, &[0.9, 1.4]),
                DMatrix::from_partial_diagonal(2, 2, &[1.2, 1.3]),
            ],
            DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.4]),
        )
        .unwrap()
    }

    fn solved_setup(d: f64) -> (SourceModel, WaterfillSolution, RealizationMatrices) {
        let model = two_dim_model();
        let opts = SolverOptions {
            tolerance_eps: 1e-10,
            strategy: Strategy::Bisection,
            ..SolverOptions::default()
        };
        let sol = solve(&model, d, &opts).unwrap();
        let real = build_realization(&sol, None).unwrap();
        (model, sol, real)
    }

    #[test]
    fn deterministic_zero_source_has_zero_error() {
        let model = SourceModel::new(
            1,
            1,
            1,
            vec![DMatrix::from_element(1, 1, 0.5); 2],
            vec![DMatrix::zeros(1, 1); 2],
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        let sol = solve(&model, 1.0, &SolverOptions::default()).unwrap();
        assert!(sol.saturated);
        let real = build_realization(&sol, None).unwrap();
        let report = run_realization_sim(&model, &sol, &real, 50, 3).unwrap();
        assert_eq!(report.per_time_mse, vec![0.0, 0.0]);
        assert_eq!(report.per_time_mse_stderr, vec![0.0, 0.0]);
        assert_eq!(report.total_distortion, 0.0);
        assert_eq!(report.analytic_rate_bits, 0.0);
    }

    #[test]
    fn identical_seeds_give_identical_reports() {
        let (model, sol, real) = solved_setup(1.0);
        let a = run_realization_sim(&model, &sol, &real, 10, 42).unwrap();
        let b = run_realization_sim(&model, &sol, &real, 10, 42).unwrap();
        assert_eq!(a, b);
        let c = run_realization_sim(&model, &sol, &real, 10, 43).unwrap();
        assert_ne!(a.per_time_mse, c.per_time_mse);
    }

    #[test]
    fn filter_mse_tracks_the_allocation_per_stage() {
        let (model, sol, real) = solved_setup(1.0);
        let report = run_realization_sim(&model, &sol, &real, 20_000, 7).unwrap();
        assert_eq!(report.num_trajectories, 20_000);
        for t in 0..report.per_time_mse.len() {
            let gap = (report.per_time_mse[t] - report.analytic_deltas[t]).abs();
            assert!(
                gap <= 4.0 * report.per_time_mse_stderr[t],
                "stage {t}: empirical {} vs analytic {} (s.e. {})",
                report.per_time_mse[t],
                report.analytic_deltas[t],
                report.per_time_mse_stderr[t]
            );
        }
        let total_gap = (report.total_distortion - 1.0).abs();
        assert!(total_gap <= 4.0 * report.total_distortion_stderr);

        // The report's mean fields stay exact arithmetic means.
        let recomputed: f64 =
            report.per_time_mse.iter().sum::<f64>() / report.per_time_mse.len() as f64;
        assert!((report.total_distortion - recomputed).abs() < 1e-15);
    }

    #[test]
    fn empirical_distortion_respects_the_information_bound() {
        let (model, sol, real) = solved_setup(1.4);
        let report = run_realization_sim(&model, &sol, &real, 20_000, 19).unwrap();
        let rates = nrdf_rate(&sol, LogBase::E).unwrap();
        let bound = universal_lower_bound(&sol.eigvals, &rates.per_coord_rates).unwrap();
        let slack = 4.0 * report.total_distortion_stderr;
        assert!(
            report.total_distortion >= bound - slack,
            "empirical {} dipped below bound {}",
            report.total_distortion,
            bound
        );
    }

    #[test]
    fn matched_coder_hits_the_per_stage_minimum() {
        let alphas = [1.0, 0.4472135954999579, 1.3416407864998738];
        let noise = [1.0, 1.3, 0.7];
        let unit = [1.0; 3];
        let plan = min_distortion_plan(&alphas, &noise, 1.0, &unit, &unit).unwrap();
        let report =
            run_channel_match_sim(&alphas, &noise, 1.0, &plan, 20_000, 5).unwrap();
        for t in 0..3 {
            let gap = (report.per_time_mse[t] - plan.delta_min[t]).abs();
            assert!(
                gap <= 4.0 * report.per_time_mse_stderr[t],
                "stage {t}: empirical {} vs δ^min {}",
                report.per_time_mse[t],
                plan.delta_min[t]
            );
        }
        assert_eq!(report.analytic_deltas, plan.delta_min);
        assert!(
            (report.analytic_rate_bits
                - plan.capacity_nats / std::f64::consts::LN_2)
                .abs()
                < 1e-15
        );
    }

    #[test]
    fn huge_snr_drives_the_first_stage_error_to_zero() {
        let alphas = [0.9, 0.9];
        let noise = [1.0, 1.0];
        let plan =
            min_distortion_plan(&alphas, &noise, 1.0, &[1e6, 1e6], &[1.0, 1.0]).unwrap();
        let report = run_channel_match_sim(&alphas, &noise, 1.0, &plan, 4_000, 2).unwrap();
        assert!(report.per_time_mse[0] < 1e-4);
    }

    #[test]
    fn independent_seeds_are_statistically_compatible() {
        let (model, sol, real) = solved_setup(1.0);
        let a = run_realization_sim(&model, &sol, &real, 4_000, 100).unwrap();
        let b = run_realization_sim(&model, &sol, &real, 4_000, 200).unwrap();
        for t in 0..a.per_time_mse.len() {
            let gap = (a.per_time_mse[t] - b.per_time_mse[t]).abs();
            let spread = 4.0 * (a.per_time_mse_stderr[t] + b.per_time_mse_stderr[t]);
            assert!(gap <= spread, "stage {t}: {gap} exceeds {spread}");
        }
    }

    #[test]
    fn degenerate_requests_are_rejected() {
        let (model, sol, real) = solved_setup(1.0);
        assert!(matches!(
            run_realization_sim(&model, &sol, &real, 1, 0),
            Err(Error::InvalidInput(_))
        ));
        let other = SourceModel::scalar(&[0.5], &[1.0], 1.0).unwrap();
        assert!(matches!(
            run_realization_sim(&other, &sol, &real, 10, 0),
            Err(Error::InconsistentComponents(_))
        ));
    }
}
