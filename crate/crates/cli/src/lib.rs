//! The `usd` command-line tool: curve tables, single-scheme Monte Carlo runs,
//! BB84 sessions and the validation suite.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 validation failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use coherent_usd::strategies::BasisRule;
use coherent_usd::validation::Profile;

pub mod config;
pub mod run;

pub use config::{parse_saved, Format, RunConfig, StampedConfig};
pub use run::{execute, format_number, Output, REPORT_SCHEMA_VERSION};

pub const DEFAULT_SEED: u64 = 20_050_401;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<coherent_usd::Error> for CliError {
    fn from(e: coherent_usd::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Internal(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "usd", version, about = "Unambiguous discrimination of symmetric coherent states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Write the output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also save the run configuration as JSON, for `usd replay`.
    #[arg(long)]
    pub save_config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Success-probability curves against mean photon number.
    Curves {
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        mu_min: f64,
        #[arg(long, default_value_t = 3.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
        /// Number of weak copies for the feedback schemes.
        #[arg(long = "m", default_value_t = 1000)]
        copies: u64,
        /// Monte Carlo trials per point; 0 gives analytic columns only.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, env = "USD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Monte Carlo estimate of one scheme against its analytic value.
    Simulate {
        /// bs2, bs3-simple, bs3-feedback, bs4-simple, bs4-feedback,
        /// bsn-simple[:N] or bsn-feedback[:N].
        #[arg(long)]
        scheme: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long = "m", default_value_t = 1000)]
        copies: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, env = "USD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// BB84 session with the 4-step feedback receiver.
    Qkd {
        #[arg(long, default_value_t = 100_000)]
        pulses: u64,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long = "m", default_value_t = 1000)]
        copies: u64,
        #[arg(long, env = "USD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// random, 0 or 1.
        #[arg(long, default_value = "random", value_parser = parse_basis_rule)]
        basis_rule: BasisRule,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Run the self-check suite; exits with 3 if any check fails.
    Validate {
        #[arg(long, default_value = "quick", value_parser = parse_profile)]
        profile: Profile,
        #[arg(long, env = "USD_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a saved configuration or JSON report.
    Replay {
        path: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_basis_rule(s: &str) -> Result<BasisRule, String> {
    match s {
        "random" => Ok(BasisRule::Random),
        "0" => Ok(BasisRule::Fixed(0)),
        "1" => Ok(BasisRule::Fixed(1)),
        _ => Err(format!("expected random, 0 or 1, got {s:?}")),
    }
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: coherent_usd::Error| e.to_string())
}

impl Command {
    /// Splits a parsed command into its run configuration and output options.
    pub fn into_parts(self) -> Result<(RunConfig, Option<PathBuf>, Option<PathBuf>), CliError> {
        Ok(match self {
            Command::Curves { n, mu_min, mu_max, points, copies, trials, seed, eta, format, common } => (
                RunConfig::Curves { n, mu_min, mu_max, points, copies, trials, seed, eta, format },
                common.out,
                common.save_config,
            ),
            Command::Simulate { scheme, n, mu, eta, copies, trials, seed, format, common } => (
                RunConfig::Simulate { scheme, n, mu, eta, copies, trials, seed, format },
                common.out,
                common.save_config,
            ),
            Command::Qkd { pulses, mu, eta, copies, seed, basis_rule, format, common } => {
                (RunConfig::Qkd { pulses, mu, eta, copies, seed, basis_rule, format }, common.out, common.save_config)
            }
            Command::Validate { profile, seed, format, common } => {
                (RunConfig::Validate { profile, seed, format }, common.out, common.save_config)
            }
            Command::Replay { path, out } => {
                let text = fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let cfg = parse_saved(&text).map_err(|e| {
                    CliError::Usage(format!("{}: not a saved configuration or report: {e}", path.display()))
                })?;
                (cfg, out, None)
            }
        })
    }
}

/// RFC 3339 UTC time, or `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse::<i64>().ok())
        .and_then(|t| time::OffsetDateTime::from_unix_timestamp(t).ok())
        .unwrap_or_else(time::OffsetDateTime::now_utc);
    now.format(&time::format_description::well_known::Rfc3339).unwrap_or_default()
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run_command(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run_command(command: Command) -> Result<i32, CliError> {
    let (cfg, out, save_config) = command.into_parts()?;
    if let Some(path) = save_config {
        let text = serde_json::to_string_pretty(&cfg).map_err(|e| CliError::Internal(e.to_string()))?;
        write_file(&path, &(text + "\n"))?;
    }
    log::info!("running {}", cfg.command());
    let output = execute(&cfg, &timestamp())?;
    match out {
        Some(path) => write_file(&path, &output.text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(output.text.as_bytes())
                .map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })?;
        }
    }
    if matches!(cfg, RunConfig::Validate { .. }) && !output.passed {
        eprintln!("validation failed");
        return Ok(3);
    }
    Ok(0)
}
