//! `wof`: command-line front end for the engine simulator.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wof_core::montecarlo::ValidationSuite;
use wof_core::WofError;

use crate::config::{ConfigError, RunConfig};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "WOF_THREADS";

#[derive(Debug, Parser)]
#[command(name = "wof", version, about = "Work extraction from thermal light by observation and feedforward")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Write the result here instead of stdout.
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct EngineArgs {
    #[arg(long)]
    nbar: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// exact, gaussian or low_excitation.
    #[arg(long)]
    mode: Option<String>,
    /// Include the unsqueezing work.
    #[arg(long)]
    unsqueeze: bool,
}

#[derive(Debug, Args, Default)]
struct NoiseArgs {
    #[arg(long)]
    kappa_d: Option<f64>,
    #[arg(long)]
    n_tau: Option<f64>,
    #[arg(long)]
    n_h: Option<f64>,
    #[arg(long)]
    n_lo: Option<f64>,
    #[arg(long)]
    n_d: Option<f64>,
}

#[derive(Debug, Args, Default)]
struct SweepArgs {
    #[arg(long)]
    nbar_min: Option<f64>,
    #[arg(long)]
    nbar_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Log-spaced n̄ grid.
    #[arg(long)]
    log: bool,
}

#[derive(Debug, Args, Default)]
struct McArgs {
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Numeric optimum of the mean work over (κ, β) across an n̄ range.
    Optimize {
        #[command(flatten)]
        sweep: SweepArgs,
        #[arg(long)]
        mode: Option<String>,
    },
    /// Efficiency curves per detector family.
    Efficiency {
        #[command(flatten)]
        sweep: SweepArgs,
        /// Detector family as KAPPA_D2:T_D (repeatable); n_lo and n_d come from [noise].
        #[arg(long = "family")]
        families: Vec<String>,
    },
    /// Monte Carlo validation of the closed forms: quick, standard or deep.
    Validate {
        #[arg(value_parser = parse_suite)]
        suite: ValidationSuite,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Thermal outcome distribution on the lattice.
    Distribution {
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Per-outcome probability and work.
    WorkTable {
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// Mean work across n̄ at fixed (κ, β) in every estimate.
    Sweep {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        sweep: SweepArgs,
    },
    /// Noisy work against the single-imperfection closed form.
    NoiseSweep {
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        case: Option<String>,
        #[arg(long)]
        param_min: Option<f64>,
        #[arg(long)]
        param_max: Option<f64>,
        #[arg(long)]
        points: Option<usize>,
    },
    /// Monte Carlo run with a JSON summary.
    Mc {
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        mc: McArgs,
        /// gaussian or exact.
        #[arg(long)]
        feedforward: Option<String>,
        /// Per-trial CSV dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Configuration utilities.
    Config {
        #[command(subcommand)]
        action: ConfigAction,
    },
}

#[derive(Debug, Subcommand)]
enum ConfigAction {
    /// Print the effective configuration as TOML.
    Show,
}

fn parse_suite(s: &str) -> Result<ValidationSuite, String> {
    s.parse().map_err(|e: WofError| e.to_string())
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] WofError),
    #[error("validation failed: {0}")]
    Validation(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Run(WofError::InvalidParameter { .. } | WofError::UnknownName { .. }) => 2,
            CliError::Run(_) => 1,
            CliError::Usage(_) | CliError::Config(_) => 2,
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl EngineArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.engine.nbar, self.nbar);
        set(&mut c.engine.kappa, self.kappa);
        set(&mut c.engine.beta, self.beta);
        set(&mut c.engine.mode, self.mode);
        c.engine.unsqueeze |= self.unsqueeze;
    }
}

impl NoiseArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.noise.kappa_d, self.kappa_d);
        set(&mut c.noise.n_tau, self.n_tau);
        set(&mut c.noise.n_h, self.n_h);
        set(&mut c.noise.n_lo, self.n_lo);
        set(&mut c.noise.n_d, self.n_d);
    }
}

impl SweepArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.sweep.nbar_min, self.nbar_min);
        set(&mut c.sweep.nbar_max, self.nbar_max);
        set(&mut c.sweep.points, self.points);
        c.sweep.log |= self.log;
    }
}

impl McArgs {
    fn apply(self, c: &mut RunConfig) {
        set(&mut c.mc.trials, self.trials);
        set(&mut c.mc.seed, self.seed);
    }
}

fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> Result<(), CliError> {
    init_threads()?;
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.output.path, cli.output.map(Some));
    let out = commands::Output::new(cfg.output.path.clone());
    match cli.command {
        Command::Optimize { sweep, mode } => {
            sweep.apply(&mut cfg);
            set(&mut cfg.engine.mode, mode);
            cfg.validate()?;
            commands::optimize(&cfg, &out)
        }
        Command::Efficiency { sweep, families } => {
            sweep.apply(&mut cfg);
            cfg.validate()?;
            commands::efficiency(&cfg, &families, &out)
        }
        Command::Validate { suite, mc } => {
            let explicit = mc.trials;
            mc.apply(&mut cfg);
            cfg.validate()?;
            commands::validate(suite, explicit, cfg.mc.seed, &out)
        }
        Command::Distribution { engine } => {
            engine.apply(&mut cfg);
            cfg.validate()?;
            commands::distribution(&cfg, &out)
        }
        Command::WorkTable { engine } => {
            engine.apply(&mut cfg);
            cfg.validate()?;
            commands::work_table(&cfg, &out)
        }
        Command::Sweep { engine, sweep } => {
            engine.apply(&mut cfg);
            sweep.apply(&mut cfg);
            cfg.validate()?;
            commands::sweep(&cfg, &out)
        }
        Command::NoiseSweep { engine, case, param_min, param_max, points } => {
            engine.apply(&mut cfg);
            set(&mut cfg.sweep.noise_case, case);
            set(&mut cfg.sweep.param_min, param_min);
            set(&mut cfg.sweep.param_max, param_max);
            set(&mut cfg.sweep.points, points);
            cfg.validate()?;
            commands::noise_sweep(&cfg, &out)
        }
        Command::Mc { engine, noise, mc, feedforward, dump } => {
            engine.apply(&mut cfg);
            noise.apply(&mut cfg);
            mc.apply(&mut cfg);
            set(&mut cfg.mc.feedforward, feedforward);
            cfg.validate()?;
            commands::mc(&cfg, dump.as_deref(), &out)
        }
        Command::Config { action: ConfigAction::Show } => {
            cfg.validate()?;
            out.write_text(&cfg.to_toml())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wof: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
