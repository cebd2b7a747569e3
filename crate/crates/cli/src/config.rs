use serde::{Deserialize, Serialize};

use coherent_usd::strategies::BasisRule;
use coherent_usd::validation::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

/// Everything needed to reproduce one invocation. Output paths are not part
/// of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunConfig {
    Curves {
        n: usize,
        mu_min: f64,
        mu_max: f64,
        points: usize,
        copies: u64,
        trials: u64,
        seed: u64,
        eta: f64,
        format: Format,
    },
    Simulate {
        scheme: String,
        n: Option<usize>,
        mu: f64,
        eta: f64,
        copies: u64,
        trials: u64,
        seed: u64,
        format: Format,
    },
    Qkd {
        pulses: u64,
        mu: f64,
        eta: f64,
        copies: u64,
        seed: u64,
        basis_rule: BasisRule,
        format: Format,
    },
    Validate {
        profile: Profile,
        seed: u64,
        format: Format,
    },
}

impl RunConfig {
    pub fn format(&self) -> Format {
        match self {
            RunConfig::Curves { format, .. }
            | RunConfig::Simulate { format, .. }
            | RunConfig::Qkd { format, .. }
            | RunConfig::Validate { format, .. } => *format,
        }
    }

    pub fn command(&self) -> &'static str {
        match self {
            RunConfig::Curves { .. } => "curves",
            RunConfig::Simulate { .. } => "simulate",
            RunConfig::Qkd { .. } => "qkd",
            RunConfig::Validate { .. } => "validate",
        }
    }
}

/// The `config` block of a JSON report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StampedConfig {
    pub generated_at: String,
    #[serde(flatten)]
    pub run: RunConfig,
}

/// Accepts either a bare saved config or a full JSON report.
pub fn parse_saved(text: &str) -> serde_json::Result<RunConfig> {
    #[derive(Deserialize)]
    struct ReportShell {
        config: StampedConfig,
    }
    match serde_json::from_str::<ReportShell>(text) {
        Ok(r) => Ok(r.config.run),
        Err(_) => serde_json::from_str::<RunConfig>(text),
    }
}
