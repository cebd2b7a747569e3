use serde::Serialize;
use serde_json::{json, Value};

use coherent_usd::montecarlo::{compare_to_analytic, linear_grid, sweep, CurveTable, RunSpec, SweepConfig};
use coherent_usd::qkd::{run_session, SessionConfig};
use coherent_usd::strategies::{BasisRule, Scheme};
use coherent_usd::validation;

use crate::config::{Format, RunConfig, StampedConfig};
use crate::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Rendered output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    /// False when a check failed.
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
struct CheckEntry {
    name: String,
    passed: bool,
    detail: String,
}

impl CheckEntry {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }
}

struct Outcome {
    results: Value,
    checks: Vec<CheckEntry>,
    csv: Vec<(Vec<String>, Vec<Vec<String>>)>,
}

/// Twelve significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn execute(cfg: &RunConfig, generated_at: &str) -> Result<Output, CliError> {
    let outcome = match cfg {
        RunConfig::Curves { n, mu_min, mu_max, points, copies, trials, seed, eta, .. } => {
            curves(*n, *mu_min, *mu_max, *points, *copies, *trials, *seed, *eta)?
        }
        RunConfig::Simulate { scheme, n, mu, eta, copies, trials, seed, .. } => {
            simulate(scheme, *n, *mu, *eta, *copies, *trials, *seed)?
        }
        RunConfig::Qkd { pulses, mu, eta, copies, seed, basis_rule, .. } => {
            qkd(*pulses, *mu, *eta, *copies, *seed, *basis_rule)?
        }
        RunConfig::Validate { profile, seed, .. } => {
            let report = validation::run(*profile, *seed);
            let checks = report.checks.iter().map(|c| CheckEntry::new(&c.name, c.passed, c.detail.clone())).collect();
            let header = vec!["check".into(), "passed".into(), "detail".into()];
            let rows = report.checks.iter().map(|c| vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]);
            Outcome {
                results: json!({ "profile": report.profile, "passed": report.passed() }),
                checks,
                csv: vec![(header, rows.collect())],
            }
        }
    };
    let passed = outcome.checks.iter().all(|c| c.passed);
    let text = match cfg.format() {
        Format::Json => {
            let report = json!({
                "schema_version": REPORT_SCHEMA_VERSION,
                "config": StampedConfig { generated_at: generated_at.into(), run: cfg.clone() },
                "results": outcome.results,
                "checks": outcome.checks,
            });
            let mut s = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => render_csv(&outcome.csv)?,
    };
    Ok(Output { text, passed })
}

fn render_csv(tables: &[(Vec<String>, Vec<Vec<String>>)]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (i, (header, rows)) in tables.iter().enumerate() {
        if i > 0 {
            w.write_record(std::iter::empty::<&str>()).map_err(internal)?;
        }
        w.write_record(header).map_err(internal)?;
        for r in rows {
            w.write_record(r).map_err(internal)?;
        }
    }
    String::from_utf8(w.into_inner().map_err(internal)?).map_err(internal)
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

fn numeric_rows(rows: &[Vec<f64>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r.iter().copied().map(format_number).collect()).collect()
}

fn curve_checks(table: &CurveTable) -> Vec<CheckEntry> {
    let dom = table.dominance_violations(1e-12);
    let mono = table.monotonicity_violations();
    let mut checks = vec![
        CheckEntry::new("dominance", dom.is_empty(), dom.join("; ")),
        CheckEntry::new("monotonicity", mono.is_empty(), mono.join("; ")),
    ];
    if table.n >= 3 {
        let ord = table.ordering_violations(1.0);
        checks.push(CheckEntry::new("feedback-over-simple", ord.is_empty(), ord.join("; ")));
    }
    checks
}

#[allow(clippy::too_many_arguments)]
fn curves(
    n: usize,
    mu_min: f64,
    mu_max: f64,
    points: usize,
    copies: u64,
    trials: u64,
    seed: u64,
    eta: f64,
) -> Result<Outcome, CliError> {
    let table = sweep(&SweepConfig {
        n,
        mu_grid: linear_grid(mu_min, mu_max, points)?,
        efficiency: eta,
        copies,
        trials,
        seed,
    })?;
    let csv = vec![(table.columns.clone(), numeric_rows(&table.rows))];
    let checks = curve_checks(&table);
    Ok(Outcome { results: serde_json::to_value(&table).map_err(internal)?, checks, csv })
}

fn simulate(
    tag: &str,
    n: Option<usize>,
    mu: f64,
    eta: f64,
    copies: u64,
    trials: u64,
    seed: u64,
) -> Result<Outcome, CliError> {
    let scheme = Scheme::from_tag(tag, n.unwrap_or(0))?;
    if let Some(n) = n {
        if n != scheme.n() {
            return Err(CliError::Usage(format!("scheme {tag} runs on N={}, but --n {n} was given", scheme.n())));
        }
    }
    let spec = RunSpec { scheme, mean_photons: mu, efficiency: eta, copies, trials, seed };
    let tally = spec.tally()?;
    let est = tally.estimate();
    let analytic = spec.analytic()?;
    let bias = if scheme.uses_copies() { 5.0 / copies as f64 } else { 0.0 };
    let cmp = compare_to_analytic(&est, analytic, bias)?;
    let stage_fractions: Vec<f64> = (1..=scheme.n() - 1).map(|k| tally.stage_at_least(k).p_hat).collect();
    let results = json!({
        "scheme": scheme.to_string(),
        "n": scheme.n(),
        "estimate": est,
        "analytic": analytic,
        "z_score": cmp.z_score,
        "bias_budget": bias,
        "stage_at_least": stage_fractions,
        "unsound": tally.unsound,
        "mean_copies_consumed": tally.copies_consumed as f64 / tally.trials as f64,
    });
    let header = ["scheme", "n", "mu", "eta", "copies", "trials", "p_hat", "stderr", "analytic", "z_score"]
        .map(String::from)
        .to_vec();
    let row = vec![
        scheme.to_string(),
        scheme.n().to_string(),
        format_number(mu),
        format_number(eta),
        copies.to_string(),
        trials.to_string(),
        format_number(est.p_hat),
        format_number(est.stderr),
        format_number(analytic),
        format_number(cmp.z_score),
    ];
    let checks = vec![
        CheckEntry::new("analytic-agreement", cmp.pass, format!("|p̂ − p| ≤ 4σ + {bias:.1e}: z = {:.3}", cmp.z_score)),
        CheckEntry::new("soundness", tally.unsound == 0, format!("{} unsound outcomes", tally.unsound)),
    ];
    Ok(Outcome { results, checks, csv: vec![(header, vec![row])] })
}

fn qkd(pulses: u64, mu: f64, eta: f64, copies: u64, seed: u64, basis_rule: BasisRule) -> Result<Outcome, CliError> {
    let report = run_session(&SessionConfig { pulses, mean_photons: mu, efficiency: eta, copies, seed, basis_rule })?;
    let s = &report.stats;
    let k = &report.key_fractions;
    let results = json!({
        "stats": s,
        "key_fractions": k,
        "stage_at_least": [s.fraction_at_least(1), s.fraction_at_least(2), s.fraction_at_least(3)],
    });
    let header = [
        "pulses",
        "stage0",
        "stage1",
        "stage2",
        "stage3",
        "key_a",
        "key_b",
        "key_c",
        "key_d",
        "key_fraction",
        "discarded_basis_mismatch",
        "unresolved",
        "coincidence_fraction",
        "qber",
    ]
    .map(String::from)
    .to_vec();
    let mut row = vec![s.pulses.to_string()];
    row.extend(s.stage_counts.iter().map(u64::to_string));
    row.extend([s.key_a, s.key_b, s.key_c, s.key_d].iter().map(u64::to_string));
    row.push(format_number(k.total));
    row.push(s.discarded_basis_mismatch.to_string());
    row.push(s.unresolved.to_string());
    row.push(format_number(s.coincidence_fraction));
    row.push(format_number(s.error_rate));
    let checks = vec![CheckEntry::new("qber-zero", s.errors == 0, format!("{} errors", s.errors))];
    Ok(Outcome { results, checks, csv: vec![(header, vec![row])] })
}
