//! Estimation harness: runs strategies over many independent trials,
//! compares against analytics and builds curve tables.
//!
//! Trial `i` draws from substream `i` of the run's seed, so results do not
//! depend on how trials are spread over threads. Tallies hold integer counts
//! only and merge exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{self, ClosedForm, PhaseAlphabet};
use crate::error::{Error, Result};
use crate::random::{derive_seed, RandomStream};
use crate::strategies::{FeedbackConfig, Scheme, TrueState};

/// Acceptance band half-width in standard errors.
pub const SIGMA_BAND: f64 = 4.0;
pub const CURVE_SCHEMA_VERSION: u32 = 1;
const MAX_STAGES: usize = 65;

/// Aggregate counters of a batch of trials.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub conclusive: u64,
    /// `stage_counts[k]`: trials with exactly `k` clicks.
    pub stage_counts: Vec<u64>,
    /// Trials that eliminated the true phase or named a wrong one.
    pub unsound: u64,
    pub copies_consumed: u64,
}

impl Tally {
    pub fn new() -> Self {
        Self { trials: 0, conclusive: 0, stage_counts: vec![0; MAX_STAGES], unsound: 0, copies_consumed: 0 }
    }

    pub fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.conclusive += other.conclusive;
        self.unsound += other.unsound;
        self.copies_consumed += other.copies_consumed;
        for (a, b) in self.stage_counts.iter_mut().zip(other.stage_counts) {
            *a += b;
        }
        self
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::from_counts(self.conclusive, self.trials)
    }

    /// Fraction of trials with at least `k` clicks.
    pub fn stage_at_least(&self, k: usize) -> Estimate {
        Estimate::from_counts(self.stage_counts[k.min(MAX_STAGES)..].iter().sum(), self.trials)
    }
}

impl Default for Tally {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub stderr: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64) -> Self {
        if trials == 0 {
            return Self { p_hat: 0.0, stderr: 0.0, trials };
        }
        let p = successes as f64 / trials as f64;
        Self { p_hat: p, stderr: (p * (1.0 - p) / trials as f64).sqrt(), trials }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub pass: bool,
    pub z_score: f64,
    pub analytic: f64,
    pub bias_budget: f64,
}

/// Pass iff `|p̂ − analytic| ≤ 4·stderr + bias_budget`.
pub fn compare_to_analytic(estimate: &Estimate, analytic: f64, bias_budget: f64) -> Result<Comparison> {
    if !(0.0..=1.0).contains(&analytic) {
        return Err(Error::param(format!("analytic value {analytic} outside [0, 1]")));
    }
    if !(bias_budget >= 0.0) {
        return Err(Error::param(format!("bias budget {bias_budget} must be ≥ 0")));
    }
    let diff = estimate.p_hat - analytic;
    let z_score = if estimate.stderr > 0.0 {
        diff / estimate.stderr
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(Comparison { pass: diff.abs() <= SIGMA_BAND * estimate.stderr + bias_budget, z_score, analytic, bias_budget })
}

/// A Monte Carlo run specification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub scheme: Scheme,
    pub mean_photons: f64,
    pub efficiency: f64,
    pub copies: u64,
    pub trials: u64,
    pub seed: u64,
}

impl RunSpec {
    pub fn new(scheme: Scheme, mean_photons: f64, copies: u64, trials: u64, seed: u64) -> Self {
        Self { scheme, mean_photons, efficiency: 1.0, copies, trials, seed }
    }

    fn setup(&self) -> Result<(PhaseAlphabet, FeedbackConfig)> {
        if self.trials == 0 {
            return Err(Error::param("need at least one trial"));
        }
        let alphabet = PhaseAlphabet::new(self.scheme.n(), self.mean_photons, self.efficiency)?;
        let cfg = FeedbackConfig::with_copies(self.copies);
        if self.scheme.uses_copies() && self.copies < alphabet.n() as u64 {
            return Err(Error::param(format!("need M ≥ N copies, got M={}", self.copies)));
        }
        Ok((alphabet, cfg))
    }

    /// Runs every trial; the true phase of trial `i` is the first draw of
    /// substream `i`.
    pub fn tally(&self) -> Result<Tally> {
        let (alphabet, cfg) = self.setup()?;
        let tallies: Vec<Result<Tally>> = (0..self.trials)
            .into_par_iter()
            .fold(
                || Ok(Tally::new()),
                |acc: Result<Tally>, i| {
                    let mut acc = acc?;
                    let mut rng = RandomStream::new(self.seed, i);
                    let truth = TrueState::new(rng.index(alphabet.n()), alphabet)?;
                    let out = self.scheme.run(&truth, &cfg, &mut rng)?;
                    acc.trials += 1;
                    acc.conclusive += out.is_conclusive() as u64;
                    acc.unsound += !out.is_sound(truth.phase_index()) as u64;
                    acc.copies_consumed += out.copies_consumed;
                    acc.stage_counts[(out.stage_reached as usize).min(MAX_STAGES - 1)] += 1;
                    Ok(acc)
                },
            )
            .collect();
        tallies.into_iter().try_fold(Tally::new(), |a, b| Ok(a.merge(b?)))
    }

    pub fn estimate(&self) -> Result<Estimate> {
        Ok(self.tally()?.estimate())
    }

    /// The `M → ∞` analytic value at `η·μ`.
    pub fn analytic(&self) -> Result<f64> {
        self.scheme.analytic_limit(self.efficiency * self.mean_photons)
    }
}

/// Conclusive-rate estimate for `scheme`.
pub fn estimate(scheme: Scheme, mu: f64, eta: f64, copies: u64, trials: u64, seed: u64) -> Result<Estimate> {
    RunSpec { scheme, mean_photons: mu, efficiency: eta, copies, trials, seed }.estimate()
}

/// Figure data: one row per mean photon number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub schema_version: u32,
    pub n: usize,
    pub copies: u64,
    pub trials: u64,
    pub seed: u64,
    pub efficiency: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub n: usize,
    pub mu_grid: Vec<f64>,
    pub efficiency: f64,
    pub copies: u64,
    /// Zero gives an analytics-only table.
    pub trials: u64,
    pub seed: u64,
}

/// Schemes plotted for alphabet size `n`: (simple, feedback).
pub fn curve_schemes(n: usize) -> (Scheme, Scheme) {
    match n {
        3 => (Scheme::Simple(3), Scheme::Feedback3),
        4 => (Scheme::Simple(4), Scheme::Receiver4),
        _ => (Scheme::Simple(n), Scheme::FeedbackN(n)),
    }
}

/// Builds the curve table: `p_optimal`, `p_simple_analytic`,
/// `p_feedback_analytic`, `p_pol_analytic` (N = 4 only) and, when trials are
/// requested, Monte Carlo columns with their standard errors.
pub fn sweep(cfg: &SweepConfig) -> Result<CurveTable> {
    if cfg.mu_grid.is_empty() {
        return Err(Error::param("empty μ grid"));
    }
    if cfg.mu_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::param("μ grid must be strictly increasing"));
    }
    let (simple, feedback) = curve_schemes(cfg.n);
    let mut columns: Vec<String> =
        ["mu", "p_optimal", "p_simple_analytic", "p_feedback_analytic"].iter().map(|s| s.to_string()).collect();
    if cfg.n == 4 {
        columns.push("p_pol_analytic".into());
    }
    if cfg.trials > 0 {
        for c in ["p_simple_mc", "p_simple_mc_stderr", "p_feedback_mc", "p_feedback_mc_stderr"] {
            columns.push(c.into());
        }
    }
    let rows = cfg
        .mu_grid
        .iter()
        .enumerate()
        .map(|(i, &mu)| {
            let eff = cfg.efficiency * mu;
            let mut row = vec![
                mu,
                analytics::optimal_usd_prob(cfg.n, eff)?,
                simple.analytic_limit(eff)?,
                feedback.analytic_limit(eff)?,
            ];
            if cfg.n == 4 {
                row.push(analytics::closed_form(ClosedForm::Pol4, eff)?);
            }
            if cfg.trials > 0 {
                for (j, scheme) in [simple, feedback].into_iter().enumerate() {
                    let spec = RunSpec {
                        scheme,
                        mean_photons: mu,
                        efficiency: cfg.efficiency,
                        copies: cfg.copies,
                        trials: cfg.trials,
                        seed: derive_seed(cfg.seed, &[i as u64, j as u64]),
                    };
                    let e = spec.estimate()?;
                    row.push(e.p_hat);
                    row.push(e.stderr);
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveTable {
        schema_version: CURVE_SCHEMA_VERSION,
        n: cfg.n,
        copies: cfg.copies,
        trials: cfg.trials,
        seed: cfg.seed,
        efficiency: cfg.efficiency,
        columns,
        rows,
    })
}

/// `count` evenly spaced points from `lo` to `hi` inclusive.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(hi > lo) || lo < 0.0 {
        return Err(Error::param(format!("grid needs 0 ≤ lo < hi and ≥ 2 points, got [{lo}, {hi}] × {count}")));
    }
    Ok((0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect())
}

impl CurveTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Every analytic column stays at or below `p_optimal + tol`.
    pub fn dominance_violations(&self, tol: f64) -> Vec<String> {
        let opt = self.column("p_optimal").unwrap_or_default();
        let mut bad = Vec::new();
        for name in ["p_simple_analytic", "p_feedback_analytic", "p_pol_analytic"] {
            if let Some(col) = self.column(name) {
                for (i, (&p, &o)) in col.iter().zip(&opt).enumerate() {
                    if p > o + tol {
                        bad.push(format!("{name} row {i}: {p} > optimal {o}"));
                    }
                }
            }
        }
        bad
    }

    /// Analytic columns that decrease anywhere along the grid.
    pub fn monotonicity_violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        for name in ["p_optimal", "p_simple_analytic", "p_feedback_analytic", "p_pol_analytic"] {
            if let Some(col) = self.column(name) {
                for (i, w) in col.windows(2).enumerate() {
                    if w[1] < w[0] {
                        bad.push(format!("{name} decreases at row {}: {} → {}", i + 1, w[0], w[1]));
                    }
                }
            }
        }
        bad
    }

    /// Rows with `μ ≤ mu_max` where feedback falls below simple.
    pub fn ordering_violations(&self, mu_max: f64) -> Vec<String> {
        let (Some(mu), Some(s), Some(f)) =
            (self.column("mu"), self.column("p_simple_analytic"), self.column("p_feedback_analytic"))
        else {
            return vec!["missing columns".into()];
        };
        mu.iter()
            .zip(s.iter().zip(&f))
            .enumerate()
            .filter(|(_, (&m, (&s, &f)))| m <= mu_max && f < s)
            .map(|(i, (m, (s, f)))| format!("row {i} (μ={m}): feedback {f} < simple {s}"))
            .collect()
    }

    /// μ strictly increasing and all probability columns in `[0, 1]`.
    pub fn is_well_formed(&self) -> bool {
        let mu_ok = self.rows.windows(2).all(|w| w[1][0] > w[0][0]);
        let p_ok = self.rows.iter().all(|r| {
            r.iter().zip(&self.columns).skip(1).all(|(&v, c)| c.ends_with("stderr") || (0.0..=1.0).contains(&v))
        });
        mu_ok && p_ok
    }
}
