//! `ncp` — Ncp grids, NM estimates, parameter sweeps and self-checks for
//! the built-in models and for user-defined models in JSON.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncp_core::dynamics::DynamicsError;
use ncp_core::measure::MeasureError;
use thiserror::Error;

use config::{parse_param, Format, RangeSpec, RegionSpec, RunConfig, TolSpec, ValuesSpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Model(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::InvalidParams(_) | DynamicsError::DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::Dynamics(d) => d.into(),
            MeasureError::InvalidGrid(_) => CliError::Config(e.to_string()),
            _ => CliError::Model(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Model(_) => 3,
        }
    }
}

/// What a command produced, short of an error.
pub enum Outcome {
    Ok,
    /// Finished, but with failed cells, points or checks.
    Degraded(u8),
}

#[derive(Parser)]
#[command(
    name = "ncp",
    version,
    about = "Non-Markovianity from non-complete-positivity of intermediate maps"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ncp(t1, t1 + dt) on a rectangular grid (CSV: t1,dt,ncp,flag).
    NcpGrid {
        #[command(flatten)]
        common: Common,
        /// t1 axis, start:end:n (inclusive).
        #[arg(long)]
        t1: Option<RangeSpec>,
        /// dt axis, start:end:n (inclusive).
        #[arg(long)]
        dt: Option<RangeSpec>,
        /// Rows of the default grid when no axes are given.
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Averaged non-Markovianity NM over a representative region.
    Nm {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        nm: NmArgs,
        /// Region t1_start:t1_end:dt_max (required for custom models).
        #[arg(long, value_parser = parse_region)]
        region: Option<RegionSpec>,
        /// Also estimate NM from this many uniformly random cells.
        #[arg(long)]
        random: Option<usize>,
    },
    /// NM of a built-in model over one parameter (CSV: param,nm,support_fraction,error).
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        nm: NmArgs,
        /// Parameter to vary, e.g. R, delta, N.
        #[arg(long)]
        param: Option<String>,
        /// Values: start:end:n or a comma-separated list.
        #[arg(long)]
        values: Option<ValuesSpec>,
    },
    /// Checks a built-in model against closed forms and structural invariants.
    Check {
        #[command(flatten)]
        common: Common,
        /// Samples per axis of the oracle grids.
        #[arg(long, default_value_t = 30)]
        grid: usize,
        /// Sample times of the invariant checks.
        #[arg(long, default_value_t = 8)]
        times: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in model name (damped_jc, detuned_jc, spin_bath) or model JSON file.
    #[arg(long)]
    model: Option<String>,
    /// Model parameters, key=value.
    #[arg(long, num_args = 1.., value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Output file (stdout if absent); a manifest is written alongside.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Integrator relative tolerance (absolute: 1e-3 of it).
    #[arg(long)]
    tol: Option<f64>,
    /// Summed negative Choi eigenvalue below which a map counts as CP.
    #[arg(long)]
    neg_threshold: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct NmArgs {
    /// Initial grid rows.
    #[arg(long)]
    resolution: Option<usize>,
    /// Evaluate at the initial resolution only.
    #[arg(long)]
    no_refine: bool,
    #[arg(long)]
    max_refinements: Option<usize>,
}

fn parse_region(s: &str) -> Result<RegionSpec, String> {
    let v: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}")))
        .collect::<Result<_, _>>()?;
    let [t1_start, t1_end, dt_max] = v[..] else {
        return Err(format!("expected t1_start:t1_end:dt_max, got `{s}`"));
    };
    Ok(RegionSpec {
        t1_start,
        t1_end,
        dt_max,
    })
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(m) = &self.model {
            cfg.set_model(m);
        }
        cfg.set_params(&self.params)?;
        if self.out.is_some() {
            cfg.out.clone_from(&self.out);
        }
        cfg.format = self.format.or(cfg.format);
        cfg.jobs = self.jobs.or(cfg.jobs);
        if let Some(r) = self.tol {
            cfg.tol = Some(TolSpec { rtol: r, atol: None });
        }
        cfg.neg_threshold = self.neg_threshold.or(cfg.neg_threshold);
        cfg.seed = self.seed.or(cfg.seed);
        Ok(cfg)
    }
}

impl NmArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.resolution = self.resolution.or(cfg.resolution);
        if self.no_refine {
            cfg.refine = Some(false);
        }
        cfg.max_refinements = self.max_refinements.or(cfg.max_refinements);
    }
}

fn init_pool(jobs: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::NcpGrid {
            common,
            t1,
            dt,
            resolution,
        } => {
            let mut cfg = common.resolve()?;
            cfg.t1 = t1.or(cfg.t1);
            cfg.dt = dt.or(cfg.dt);
            cfg.resolution = resolution.or(cfg.resolution);
            init_pool(cfg.jobs)?;
            commands::ncp_grid(&cfg)
        }
        Command::Nm {
            common,
            nm,
            region,
            random,
        } => {
            let mut cfg = common.resolve()?;
            nm.apply(&mut cfg);
            cfg.region = region.or(cfg.region);
            cfg.random_samples = random.or(cfg.random_samples);
            init_pool(cfg.jobs)?;
            commands::nm(&cfg)
        }
        Command::Sweep {
            common,
            nm,
            param,
            values,
        } => {
            let mut cfg = common.resolve()?;
            nm.apply(&mut cfg);
            match (param, values, cfg.sweep.take()) {
                (Some(param), Some(values), _) => cfg.sweep = Some(config::SweepSpec { param, values }),
                (None, None, s) => cfg.sweep = s,
                (p, v, Some(mut s)) => {
                    s.param = p.unwrap_or(s.param);
                    s.values = v.unwrap_or(s.values);
                    cfg.sweep = Some(s);
                }
                _ => return Err(CliError::Config("sweep needs both --param and --values".into())),
            }
            init_pool(cfg.jobs)?;
            commands::sweep(&cfg)
        }
        Command::Check { common, grid, times } => {
            let cfg = common.resolve()?;
            init_pool(cfg.jobs)?;
            commands::check(&cfg, grid, times)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Degraded(code)) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
