//! Subcommand dispatch, option overrides, and exit-code mapping.
//!
//! Exit codes: 0 success, 2 the solver failed to converge, 3 invalid input
//! (bad usage, unreadable or inconsistent config, model validation), 1 an
//! unexpected failure writing results.

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;

use nrdf_core::rate_functions::{nrdf_rate, universal_lower_bound, LogBase};
use nrdf_core::realization::build_realization;
use nrdf_core::simulate::{run_channel_match_sim, run_realization_sim};
use nrdf_core::waterfill::{solve, waterfill_pass, SolverOptions, Strategy, WaterfillSolution};
use nrdf_core::{min_distortion_plan, SourceModel};

use crate::config::{scalar_params, FormatConfig, RunConfig};
use crate::output::{
    bound_csv, channel_plan_csv, drf_csv, rate_csv, sim_csv, to_json, waterfill_csv,
    BoundArtifact, ChannelMatchArtifact, DrfArtifact, RateArtifact, SimArtifact,
    WaterfillArtifact,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "nrdf",
    about = "Causal rate-distortion analysis for time-varying Gauss-Markov sources",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the distortion allocation for the configured budget.
    Waterfill(CommonArgs),
    /// Solve and report the rate of the allocation.
    Rate(CommonArgs),
    /// Find the distortion achievable at the configured target rate.
    Drf(CommonArgs),
    /// Monte-Carlo the realized filter against the allocation.
    Simulate(CommonArgs),
    /// Match the scalar source to an AWGN channel and optionally simulate.
    ChannelMatch(CommonArgs),
    /// Evaluate the information-theoretic distortion floor.
    Bound(CommonArgs),
}

impl Command {
    fn args(&self) -> &CommonArgs {
        match self {
            Command::Waterfill(a)
            | Command::Rate(a)
            | Command::Drf(a)
            | Command::Simulate(a)
            | Command::ChannelMatch(a)
            | Command::Bound(a) => a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Write results here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format; overrides the config's output.format.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// RNG seed; overrides the config's sim.seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trajectory count; overrides the config's sim.num_trajectories.
    #[arg(long)]
    pub trajectories: Option<usize>,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                // Usage errors are invalid input; clap's default code 2 is
                // reserved for solver non-convergence.
                _ => 3,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Result<(), CliError> {
    let args = command.args();
    let mut config = RunConfig::from_path(&args.config)?;
    apply_overrides(&mut config, args);

    let rendered = match command {
        Command::Waterfill(_) => cmd_waterfill(&config)?,
        Command::Rate(_) => cmd_rate(&config)?,
        Command::Drf(_) => cmd_drf(&config)?,
        Command::Simulate(_) => cmd_simulate(&config)?,
        Command::ChannelMatch(_) => cmd_channel_match(&config)?,
        Command::Bound(_) => cmd_bound(&config)?,
    };

    match &config.output.path {
        Some(path) => std::fs::write(path, rendered).map_err(CliError::Write)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn apply_overrides(config: &mut RunConfig, args: &CommonArgs) {
    if args.seed.is_some() || args.trajectories.is_some() {
        let mut sim = config.sim.unwrap_or_default();
        if let Some(seed) = args.seed {
            sim.seed = seed;
        }
        if let Some(m) = args.trajectories {
            sim.num_trajectories = m;
        }
        config.sim = Some(sim);
    }
    if let Some(format) = args.format {
        config.output.format = Some(match format {
            FormatArg::Json => FormatConfig::Json,
            FormatArg::Csv => FormatConfig::Csv,
        });
    }
    if let Some(out) = &args.out {
        config.output.path = Some(out.clone());
    }
}

fn output_format(config: &RunConfig) -> FormatConfig {
    config.output.format.unwrap_or(FormatConfig::Json)
}

fn require_distortion(config: &RunConfig) -> Result<f64, CliError> {
    config
        .distortion_d
        .ok_or_else(|| CliError::Config("this subcommand requires distortion_d".into()))
}

fn solve_configured(config: &RunConfig) -> Result<(SourceModel, WaterfillSolution), CliError> {
    let model = config.to_model()?;
    let d = require_distortion(config)?;
    let sol = solve(&model, d, &config.solver.to_options())?;
    Ok((model, sol))
}

fn cmd_waterfill(config: &RunConfig) -> Result<String, CliError> {
    let (_, sol) = solve_configured(config)?;
    let bits = nrdf_rate(&sol, LogBase::Two)?;
    let nats = nrdf_rate(&sol, LogBase::E)?;
    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&WaterfillArtifact::new(&sol, bits.total_rate, nats.total_rate)),
        FormatConfig::Csv => waterfill_csv(&sol),
    })
}

fn cmd_rate(config: &RunConfig) -> Result<String, CliError> {
    let (_, sol) = solve_configured(config)?;
    let bits = nrdf_rate(&sol, LogBase::Two)?;
    let nats = nrdf_rate(&sol, LogBase::E)?;
    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&RateArtifact::new(&sol, &bits, nats.total_rate)),
        FormatConfig::Csv => rate_csv(&sol, &bits),
    })
}

/// Inverts the monotone rate curve by bisection on the distortion.
///
/// Inner solves use tight bisection regardless of the configured strategy
/// so the inversion error is dominated by the outer tolerance.
fn cmd_drf(config: &RunConfig) -> Result<String, CliError> {
    let model = config.to_model()?;
    let target_bits = config.target_rate_bits.ok_or_else(|| {
        CliError::Config("drf requires target_rate_bits".into())
    })?;
    if target_bits < 0.0 {
        return Err(CliError::Config(format!(
            "target_rate_bits must be nonnegative, got {target_bits}"
        )));
    }

    let opts = SolverOptions {
        tolerance_eps: 1e-9,
        strategy: Strategy::Bisection,
        ..SolverOptions::default()
    };
    let rate_at = |d: f64| -> Result<(WaterfillSolution, f64), CliError> {
        let sol = solve(&model, d, &opts)?;
        let bits = nrdf_rate(&sol, LogBase::Two)?.total_rate;
        Ok((sol, bits))
    };

    // Rate 0 is reached exactly at the zero-rate distortion.
    let d_max = waterfill_pass(&model, f64::INFINITY)
        .map_err(CliError::Core)?
        .total_distortion;
    if d_max <= 0.0 {
        return Err(CliError::Config(
            "the source is deterministic: every rate achieves distortion 0".into(),
        ));
    }

    let mut outer = 0usize;
    let artifact = if target_bits <= 0.0 {
        let (sol, bits) = rate_at(d_max)?;
        DrfArtifact {
            target_rate_bits: target_bits,
            distortion: d_max,
            achieved_rate_bits: bits,
            water_level: sol.water_level,
            saturated: sol.saturated,
            outer_iterations: 1,
        }
    } else {
        // Shrink the lower end until its rate covers the target, then halve.
        let mut hi = d_max;
        let mut lo = 0.5 * d_max;
        loop {
            outer += 1;
            let (_, bits) = rate_at(lo)?;
            if bits >= target_bits {
                break;
            }
            hi = lo;
            lo *= 0.5;
            if outer > 4000 {
                return Err(CliError::Core(nrdf_core::Error::NoConvergence {
                    iterations: outer,
                    residual: target_bits - bits,
                }));
            }
        }
        loop {
            outer += 1;
            let mid = 0.5 * (lo + hi);
            let (sol, bits) = rate_at(mid)?;
            let done = (bits - target_bits).abs() <= 1e-9
                || (hi - lo) <= f64::EPSILON * hi.max(1.0)
                || outer >= 4000;
            if done {
                break DrfArtifact {
                    target_rate_bits: target_bits,
                    distortion: mid,
                    achieved_rate_bits: bits,
                    water_level: sol.water_level,
                    saturated: sol.saturated,
                    outer_iterations: outer,
                };
            }
            if bits > target_bits {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    };

    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&artifact),
        FormatConfig::Csv => drf_csv(&artifact),
    })
}

fn cmd_simulate(config: &RunConfig) -> Result<String, CliError> {
    let (model, sol) = solve_configured(config)?;
    let real = build_realization(&sol, None)?;
    let sim = config.sim.unwrap_or_default();
    let report = run_realization_sim(&model, &sol, &real, sim.num_trajectories, sim.seed)?;
    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&SimArtifact::new(&report)),
        FormatConfig::Csv => sim_csv(&report),
    })
}

fn cmd_channel_match(config: &RunConfig) -> Result<String, CliError> {
    let model = config.to_model()?;
    let channel = config.channel.as_ref().ok_or_else(|| {
        CliError::Config("channel-match requires a channel section".into())
    })?;
    let (alphas, noise_vars, init_var) = scalar_params(&model)?;
    let plan = min_distortion_plan(
        &alphas,
        &noise_vars,
        init_var,
        &channel.powers,
        &channel.noise_vars,
    )?;

    let sim_report = match &config.sim {
        Some(sim) => Some(run_channel_match_sim(
            &alphas,
            &noise_vars,
            init_var,
            &plan,
            sim.num_trajectories,
            sim.seed,
        )?),
        None => None,
    };

    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&ChannelMatchArtifact::new(
            &plan,
            sim_report.as_ref().map(SimArtifact::new),
        )),
        FormatConfig::Csv => match &sim_report {
            Some(report) => sim_csv(report),
            None => channel_plan_csv(&plan),
        },
    })
}

fn cmd_bound(config: &RunConfig) -> Result<String, CliError> {
    let (_, sol) = solve_configured(config)?;
    let (infos, from_config): (Vec<DVector<f64>>, bool) = match &config.mutual_infos_nats {
        Some(rows) => (
            rows.iter()
                .map(|r| DVector::from_vec(r.clone()))
                .collect(),
            true,
        ),
        None => (nrdf_rate(&sol, LogBase::E)?.per_coord_rates, false),
    };
    let bound = universal_lower_bound(&sol.eigvals, &infos)?;
    let artifact = BoundArtifact {
        target_distortion: sol.target_distortion,
        bound_distortion: bound,
        used_config_mutual_infos: from_config,
        eigvals: sol
            .eigvals
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
        mutual_infos_nats: infos
            .iter()
            .map(|v| v.iter().copied().collect())
            .collect(),
    };
    Ok(match output_format(config) {
        FormatConfig::Json => to_json(&artifact),
        FormatConfig::Csv => bound_csv(&artifact),
    })
}
