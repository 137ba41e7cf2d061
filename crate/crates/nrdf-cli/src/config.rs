//! JSON run configuration: schema, parsing, and conversion to core types.
//!
//! Matrices are nested row-major arrays (`[[row0...], [row1...]]`), one
//! entry per stage for the sequences. Unknown fields are rejected so typos
//! surface as parse errors naming the field.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;

use nrdf_core::waterfill::{SolverOptions, Strategy};
use nrdf_core::SourceModel;

use crate::CliError;

/// Top-level run configuration shared by every subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// Average distortion budget D. Required by every subcommand except
    /// `drf` (which searches for it) and `channel-match` (which computes
    /// its own minimum).
    #[serde(default, alias = "distortion_D")]
    pub distortion_d: Option<f64>,
    /// Target rate for `drf`, in bits per source symbol.
    #[serde(default)]
    pub target_rate_bits: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// AWGN channel parameters for `channel-match`; scalar sources only.
    #[serde(default)]
    pub channel: Option<ChannelConfig>,
    #[serde(default)]
    pub sim: Option<SimConfig>,
    /// Per-stage, per-coordinate mutual informations (nats) for `bound`.
    /// Absent, the bound is evaluated at the solved allocation's own rates.
    #[serde(default)]
    pub mutual_infos_nats: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// State-space model: `X_{t+1} = A_t X_t + B_t W_t`, `X_0 ~ N(0, Σ_0)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub horizon_n: usize,
    pub state_dim_p: usize,
    pub noise_dim_k: usize,
    /// n+1 matrices, each p×p.
    pub a_seq: Vec<Vec<Vec<f64>>>,
    /// n+1 matrices, each p×k.
    pub b_seq: Vec<Vec<Vec<f64>>>,
    /// p×p symmetric positive semidefinite.
    pub init_error_cov: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyConfig {
    ProportionalGain,
    Bisection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tolerance_eps: f64,
    pub gain_beta: f64,
    pub max_iterations: usize,
    pub strategy: StrategyConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tolerance_eps: d.tolerance_eps,
            gain_beta: d.gain_beta,
            max_iterations: d.max_iterations,
            strategy: StrategyConfig::ProportionalGain,
        }
    }
}

impl SolverConfig {
    pub fn to_options(self) -> SolverOptions {
        SolverOptions {
            tolerance_eps: self.tolerance_eps,
            gain_beta: self.gain_beta,
            max_iterations: self.max_iterations,
            strategy: match self.strategy {
                StrategyConfig::ProportionalGain => Strategy::ProportionalGain,
                StrategyConfig::Bisection => Strategy::Bisection,
            },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    /// Transmit powers P_t, one per stage.
    pub powers: Vec<f64>,
    /// Channel noise variances q_t, one per stage.
    pub noise_vars: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub num_trajectories: usize,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            num_trajectories: 100_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatConfig {
    Json,
    Csv,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Option<FormatConfig>,
    /// Output file; stdout when absent.
    pub path: Option<PathBuf>,
}

impl RunConfig {
    /// Reads and parses a configuration file, then checks cross-field
    /// consistency. All failures map to exit code 3.
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let config: RunConfig = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let stages = self.model.horizon_n + 1;
        if let Some(d) = self.distortion_d {
            if !(d > 0.0) {
                return Err(CliError::Config(format!(
                    "distortion_d must be positive, got {d}"
                )));
            }
        }
        if let Some(ch) = &self.channel {
            if self.model.state_dim_p != 1 {
                return Err(CliError::Config(format!(
                    "channel requires a scalar source, but state_dim_p = {}",
                    self.model.state_dim_p
                )));
            }
            if ch.powers.len() != stages || ch.noise_vars.len() != stages {
                return Err(CliError::Config(format!(
                    "channel.powers ({}) and channel.noise_vars ({}) must each have {stages} entries",
                    ch.powers.len(),
                    ch.noise_vars.len()
                )));
            }
        }
        if let Some(infos) = &self.mutual_infos_nats {
            if infos.len() != stages {
                return Err(CliError::Config(format!(
                    "mutual_infos_nats has {} stages, expected {stages}",
                    infos.len()
                )));
            }
            for (t, row) in infos.iter().enumerate() {
                if row.len() != self.model.state_dim_p {
                    return Err(CliError::Config(format!(
                        "mutual_infos_nats[{t}] has {} entries, expected {}",
                        row.len(),
                        self.model.state_dim_p
                    )));
                }
            }
        }
        if let Some(sim) = &self.sim {
            if sim.num_trajectories < 2 {
                return Err(CliError::Config(format!(
                    "sim.num_trajectories must be at least 2, got {}",
                    sim.num_trajectories
                )));
            }
        }
        Ok(())
    }

    /// Builds the validated core model.
    pub fn to_model(&self) -> Result<SourceModel, CliError> {
        let m = &self.model;
        let stages = m.horizon_n + 1;
        let a_seq = parse_matrix_seq("a_seq", &m.a_seq, stages, m.state_dim_p, m.state_dim_p)?;
        let b_seq = parse_matrix_seq("b_seq", &m.b_seq, stages, m.state_dim_p, m.noise_dim_k)?;
        let init = parse_matrix(
            "init_error_cov",
            &m.init_error_cov,
            m.state_dim_p,
            m.state_dim_p,
        )?;
        SourceModel::new(m.horizon_n, m.state_dim_p, m.noise_dim_k, a_seq, b_seq, init)
            .map_err(CliError::Core)
    }
}

fn parse_matrix(
    what: &str,
    rows: &[Vec<f64>],
    nrows: usize,
    ncols: usize,
) -> Result<DMatrix<f64>, CliError> {
    if rows.len() != nrows {
        return Err(CliError::Config(format!(
            "{what} has {} rows, expected {nrows}",
            rows.len()
        )));
    }
    let mut flat = Vec::with_capacity(nrows * ncols);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(CliError::Config(format!(
                "{what} row {r} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

fn parse_matrix_seq(
    what: &str,
    seq: &[Vec<Vec<f64>>],
    stages: usize,
    nrows: usize,
    ncols: usize,
) -> Result<Vec<DMatrix<f64>>, CliError> {
    if seq.len() != stages {
        return Err(CliError::Config(format!(
            "{what} has {} stages, expected {stages}",
            seq.len()
        )));
    }
    seq.iter()
        .enumerate()
        .map(|(t, rows)| parse_matrix(&format!("{what}[{t}]"), rows, nrows, ncols))
        .collect()
}

/// Extracts `(alphas, noise_vars, init_var)` from a scalar model, with the
/// noise variance per stage taken as the diagonal of `B_t B_tᵀ`.
pub fn scalar_params(model: &SourceModel) -> Result<(Vec<f64>, Vec<f64>, f64), CliError> {
    if model.state_dim_p != 1 {
        return Err(CliError::Config(format!(
            "scalar channel operations require state_dim_p = 1, got {}",
            model.state_dim_p
        )));
    }
    let alphas: Vec<f64> = model.a_seq.iter().map(|a| a[(0, 0)]).collect();
    let noise_vars: Vec<f64> = model
        .b_seq
        .iter()
        .map(|b| (b * b.transpose())[(0, 0)])
        .collect();
    Ok((alphas, noise_vars, model.init_error_cov[(0, 0)]))
}
