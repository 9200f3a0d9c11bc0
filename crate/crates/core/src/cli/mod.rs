//! `pulsed-rotor` command-line front end.
//!
//! Every subcommand resolves its parameters from four layers (built-in
//! defaults, `--preset`, `--config` file, flags), runs the matching pipeline,
//! writes its artifacts atomically and finishes with a JSON run manifest.
//! Passing that manifest back through `--config` reproduces the run.
//!
//! Exit codes: 0 success, 1 internal error, 2 usage or validation error.

mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classmap::KickRule;
use crate::error::Error;
use crate::units::ScaledParams;
use config::{parse_angle, parse_grid, parse_range, parse_values, RunConfig};
use output::OutputDigest;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable holding the default output directory.
pub const OUT_DIR_ENV: &str = "PULSED_ROTOR_OUT_DIR";

#[derive(Parser, Debug)]
#[command(
    name = "pulsed-rotor",
    version,
    about = "Finite-pulse atom-optics kicked rotor simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert laboratory parameters to scaled rotor parameters
    Units(UnitsArgs),
    /// Tabulate the effective kick profile K_eff(rho)
    Keff(KeffArgs),
    /// Poincaré section of the momentum-dependent standard map
    Poincare(PoincareArgs),
    /// Monte-Carlo cloud: distributions, moments and diffusion constant
    Ensemble(EnsembleArgs),
    /// Asymmetry of the final distribution versus lattice-frame momentum
    Sweep(SweepArgs),
    /// Quantum kicked rotor with finite pulses
    Quantum(QuantumArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// JSON run configuration, or a run manifest to reproduce
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter set: fig1-left, fig1-right, fig3-sweep
    #[arg(long)]
    preset: Option<String>,
    /// Directory for output artifacts
    #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (results do not depend on it)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct KickFlags {
    /// Stochasticity parameter K = K_eff(0)
    #[arg(long = "K", value_parser = parse_angle)]
    stochasticity: Option<f64>,
    /// Kick strength k of the unit-height pulse (alternative to --K)
    #[arg(long = "k", value_parser = parse_angle)]
    kick_strength: Option<f64>,
    /// Pulse duty eta = t_p/T
    #[arg(long)]
    eta: Option<f64>,
    /// Pin the momentum boundary, e.g. 13.5pi
    #[arg(long = "rho-b", value_parser = parse_angle)]
    rho_b: Option<f64>,
    /// square, delta or csv:<path> (two columns tau,f)
    #[arg(long)]
    pulse: Option<String>,
    /// explicit or canonical
    #[arg(long)]
    rule: Option<KickRule>,
}

impl KickFlags {
    fn into_config(self) -> RunConfig {
        RunConfig {
            stochasticity: self.stochasticity,
            kick_strength: self.kick_strength,
            eta: self.eta,
            rho_b: self.rho_b,
            pulse: self.pulse,
            rule: self.rule,
            ..RunConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct UnitsArgs {
    #[command(flatten)]
    common: Common,
    /// Use the caesium-133 mass
    #[arg(long)]
    cesium: bool,
    /// Atomic mass, kg
    #[arg(long)]
    mass: Option<f64>,
    /// Lattice laser wavelength, m
    #[arg(long)]
    wavelength: Option<f64>,
    /// Pulse duration t_p, s
    #[arg(long)]
    tp: Option<f64>,
    /// Kick period T, s
    #[arg(long = "T")]
    period: Option<f64>,
    /// Target stochasticity K (solves for V0)
    #[arg(long = "K")]
    stochasticity: Option<f64>,
    /// Potential depth V0, J (overrides --K)
    #[arg(long)]
    v0: Option<f64>,
    /// Per-beam frequency offset, Hz
    #[arg(long)]
    df: Option<f64>,
}

#[derive(Args, Debug)]
struct KeffArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    kick: KickFlags,
    /// Momentum table lo:hi:step
    #[arg(long = "rho-range", value_parser = parse_range, allow_hyphen_values = true)]
    rho_range: Option<[f64; 3]>,
}

#[derive(Args, Debug)]
struct PoincareArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    kick: KickFlags,
    #[arg(long)]
    kicks: Option<usize>,
    /// Initial grid n_phi x n_rho
    #[arg(long, value_parser = parse_grid)]
    grid: Option<[usize; 2]>,
    #[arg(long = "rho-min", value_parser = parse_angle, allow_hyphen_values = true)]
    rho_min: Option<f64>,
    #[arg(long = "rho-max", value_parser = parse_angle, allow_hyphen_values = true)]
    rho_max: Option<f64>,
    /// Also start trajectories exactly on ±rho_b
    #[arg(long = "boundary-line")]
    boundary_line: bool,
}

#[derive(Args, Debug)]
struct EnsembleArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    kick: KickFlags,
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long = "sigma-rho")]
    sigma_rho: Option<f64>,
    #[arg(long = "rho-l", value_parser = parse_angle, allow_hyphen_values = true)]
    rho_l: Option<f64>,
    #[arg(long)]
    kicks: Option<usize>,
    #[arg(long = "record-every")]
    record_every: Option<usize>,
    #[arg(long = "bin-width")]
    bin_width: Option<f64>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    kick: KickFlags,
    #[arg(long)]
    atoms: Option<usize>,
    #[arg(long = "sigma-rho")]
    sigma_rho: Option<f64>,
    /// lo:hi:step or comma list
    #[arg(long = "rho-l", value_parser = parse_value_list, allow_hyphen_values = true)]
    rho_l: Option<ValueList>,
    #[arg(long)]
    kicks: Option<usize>,
}

#[derive(Args, Debug)]
struct QuantumArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    kick: KickFlags,
    #[arg(long = "hbar")]
    hbar_eff: Option<f64>,
    /// Momentum grid points (power of two)
    #[arg(long = "grid-size")]
    grid_size: Option<usize>,
    #[arg(long)]
    kicks: Option<usize>,
    #[arg(long = "n-beta")]
    n_beta: Option<usize>,
    /// Fix the quasimomentum of every sample
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "sigma-rho")]
    sigma_rho: Option<f64>,
    #[arg(long = "rho-l", value_parser = parse_angle, allow_hyphen_values = true)]
    rho_l: Option<f64>,
    #[arg(long)]
    substeps: Option<usize>,
}

/// Parsed `lo:hi:step` or comma list, kept as one clap value.
#[derive(Debug, Clone)]
struct ValueList(Vec<f64>);

fn parse_value_list(s: &str) -> Result<ValueList, String> {
    parse_values(s).map(ValueList)
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Units(_) => "units",
            Command::Keff(_) => "keff",
            Command::Poincare(_) => "poincare",
            Command::Ensemble(_) => "ensemble",
            Command::Sweep(_) => "sweep",
            Command::Quantum(_) => "quantum",
        }
    }

    fn split(self) -> (Common, RunConfig) {
        match self {
            Command::Units(a) => {
                let cfg = RunConfig {
                    mass: a.mass.or(a.cesium.then_some(crate::units::CAESIUM_MASS)),
                    wavelength: a.wavelength,
                    pulse_width: a.tp,
                    kick_period: a.period,
                    stochasticity: a.stochasticity,
                    potential_depth: a.v0,
                    frequency_offset: a.df,
                    ..RunConfig::default()
                };
                (a.common, cfg)
            }
            Command::Keff(a) => {
                let cfg = RunConfig {
                    rho_range: a.rho_range,
                    ..a.kick.into_config()
                };
                (a.common, cfg)
            }
            Command::Poincare(a) => {
                let cfg = RunConfig {
                    kicks: a.kicks,
                    grid: a.grid,
                    rho_min: a.rho_min,
                    rho_max: a.rho_max,
                    boundary_line: a.boundary_line.then_some(true),
                    ..a.kick.into_config()
                };
                (a.common, cfg)
            }
            Command::Ensemble(a) => {
                let cfg = RunConfig {
                    atoms: a.atoms,
                    sigma_rho: a.sigma_rho,
                    rho_l: a.rho_l,
                    kicks: a.kicks,
                    record_every: a.record_every,
                    bin_width: a.bin_width,
                    ..a.kick.into_config()
                };
                (a.common, cfg)
            }
            Command::Sweep(a) => {
                let cfg = RunConfig {
                    atoms: a.atoms,
                    sigma_rho: a.sigma_rho,
                    rho_l_values: a.rho_l.map(|v| v.0),
                    kicks: a.kicks,
                    ..a.kick.into_config()
                };
                (a.common, cfg)
            }
            Command::Quantum(a) => {
                let cfg = RunConfig {
                    hbar_eff: a.hbar_eff,
                    grid_size: a.grid_size,
                    kicks: a.kicks,
                    n_beta: a.n_beta,
                    beta: a.beta,
                    sigma_rho: a.sigma_rho,
                    rho_l: a.rho_l,
                    substeps: a.substeps,
                    ..a.kick.into_config()
                };
                (a.common, cfg)
            }
        }
    }
}

/// Failure of a CLI run, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) => EXIT_INTERNAL,
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Record of one run, sufficient to repeat it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub timestamp: String,
    pub seed: Option<u64>,
    pub preset: Option<String>,
    /// Values read from `--config`, before flags were applied.
    pub config_file: Option<RunConfig>,
    /// Values given on the command line.
    pub flags: RunConfig,
    /// Every parameter the run used.
    pub resolved: RunConfig,
    pub scaled: Option<ScaledParams>,
    pub results: serde_json::Value,
    pub outputs: Vec<OutputDigest>,
}

/// Result of a pipeline before the manifest is written.
pub(crate) struct Outcome {
    pub outputs: Vec<OutputDigest>,
    pub results: serde_json::Value,
    pub scaled: Option<ScaledParams>,
    pub report: Vec<String>,
}

/// Merges the configuration layers. A layer that sets only one of `K`/`k`
/// replaces whichever of the two a lower layer set.
pub fn layer(base: RunConfig, top: RunConfig) -> RunConfig {
    let mut base = base;
    if top.kick_strength.is_some() && top.stochasticity.is_none() {
        base.stochasticity = None;
    }
    if top.stochasticity.is_some() && top.kick_strength.is_none() {
        base.kick_strength = None;
    }
    if top.potential_depth.is_some() && top.stochasticity.is_none() {
        base.stochasticity = None;
    }
    base.overlay(top)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match run_report(args) {
        Ok(report) => {
            for line in report {
                println!("{line}");
            }
            EXIT_OK
        }
        Err(e) if e.code == EXIT_OK => {
            print!("{}", e.message);
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message.trim_start_matches("error: ").trim_end());
            e.code
        }
    }
}

/// Like [`run`], but returns the summary lines instead of printing them.
/// `--help` and `--version` come back as an error with exit code 0.
pub fn run_report<I, T>(args: I) -> Result<Vec<String>, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError {
        code: if e.use_stderr() { EXIT_USAGE } else { EXIT_OK },
        message: e.render().to_string(),
    })?;
    execute(cli.command)
}

fn execute(command: Command) -> Result<Vec<String>, CliError> {
    let name = command.name();
    let (common, flags) = command.split();

    let preset = match &common.preset {
        Some(p) => Some(config::preset(p).ok_or_else(|| {
            CliError::usage(format!(
                "unknown preset '{p}' (expected one of {})",
                config::PRESETS.join(", ")
            ))
        })?),
        None => None,
    };
    let file = match &common.config {
        Some(path) => Some(config::load_config(path).map_err(CliError::usage)?),
        None => None,
    };
    let flags = RunConfig {
        seed: common.seed,
        ..flags
    };

    let mut resolved = RunConfig::defaults();
    if let Some(p) = preset {
        resolved = layer(resolved, p);
    }
    if let Some(f) = file.clone() {
        resolved = layer(resolved, f);
    }
    resolved = layer(resolved, flags.clone());

    let out_dir = common.out_dir.clone();
    let run = || commands::dispatch(name, &resolved, &out_dir);
    let outcome = match common.threads {
        Some(0) => return Err(CliError::usage("--threads must be >= 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError {
                code: EXIT_INTERNAL,
                message: e.to_string(),
            })?
            .install(run)?,
        None => run()?,
    };

    let manifest = RunManifest {
        command: name.to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        seed: resolved.seed,
        preset: common.preset.clone(),
        config_file: file,
        flags,
        resolved,
        scaled: outcome.scaled,
        results: outcome.results,
        outputs: outcome.outputs,
    };
    let json = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    let path = out_dir.join(format!("{name}_manifest.json"));
    output::write_atomic(&path, &json).map_err(CliError::from)?;

    let mut report = outcome.report;
    report.push(format!("manifest: {}", path.display()));
    Ok(report)
}
