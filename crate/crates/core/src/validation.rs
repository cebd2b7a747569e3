//! Self-check suite behind `usd validate`.
//!
//! The quick profile covers the analytic oracles and a soundness run at 10⁴
//! trials per scheme. The full profile adds the Monte Carlo agreement,
//! large-scale soundness, BB84 statistics and η-substitution checks.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytics::{
    asymptotic, bb84_finite_m, bb84_p2_finite_closed, closed_form, feedback_finite_m, feedback_limit, optimal_usd_prob,
    symmetric_coefficients, Asymptotic, ClosedForm,
};
use crate::error::{Error, Result};
use crate::montecarlo::{compare_to_analytic, linear_grid, sweep, RunSpec, SweepConfig, SIGMA_BAND};
use crate::oracle;
use crate::qkd::{run_session, SessionConfig};
use crate::strategies::{BasisRule, Scheme};

pub const VALIDATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    Quick,
    Full,
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Quick => "quick",
            Profile::Full => "full",
        })
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Profile::Quick),
            "full" => Ok(Profile::Full),
            _ => Err(Error::param(format!("unknown profile {s:?} (expected quick or full)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), passed, detail: detail.into() }
    }

    fn from_result(name: &str, r: Result<(bool, String)>) -> Self {
        match r {
            Ok((passed, detail)) => Self::new(name, passed, detail),
            Err(e) => Self::new(name, false, format!("error: {e}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub profile: Profile,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Schemes exercised by the soundness and η-substitution checks.
pub fn mixed_schemes() -> Vec<Scheme> {
    vec![
        Scheme::Basis2,
        Scheme::Simple(3),
        Scheme::Feedback3,
        Scheme::Simple(4),
        Scheme::Receiver4,
        Scheme::FeedbackN(5),
        Scheme::Simple(6),
    ]
}

pub fn run(profile: Profile, seed: u64) -> ValidationReport {
    let mut checks = vec![
        Check::from_result("coefficient-oracle", coefficient_oracle()),
        Check::from_result("n2-optimality", n2_optimality()),
        Check::from_result("closed-form-oracle", closed_form_oracle()),
        Check::from_result("curve-properties", curve_properties()),
        Check::from_result("finite-m-oracle", finite_m_oracle()),
        Check::from_result("small-amplitude", small_amplitude()),
        Check::from_result("factor-four", factor_four()),
        Check::from_result("polarization-curve", polarization_curve()),
    ];
    match profile {
        Profile::Quick => {
            checks.push(Check::from_result("soundness", soundness(10_000, seed)));
        }
        Profile::Full => {
            checks.push(Check::from_result("monte-carlo-agreement", monte_carlo_agreement(seed)));
            checks.push(Check::from_result("soundness", soundness(150_000, seed)));
            checks.push(Check::from_result("bb84-statistics", bb84_statistics(seed)));
            checks.push(Check::from_result("efficiency-substitution", efficiency_substitution(20_000, seed)));
        }
    }
    ValidationReport { schema_version: VALIDATION_SCHEMA_VERSION, profile, seed, checks }
}

const COEFF_MUS: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0];

fn coefficient_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut worst_sum = 0.0f64;
    for n in 2..=8 {
        for mu in COEFF_MUS {
            let fast = symmetric_coefficients(n, mu)?;
            let slow = oracle::poisson_mod_n(n, mu)?;
            for (a, b) in fast.values().iter().zip(&slow) {
                worst = worst.max((a - b).abs());
            }
            worst_sum = worst_sum.max((fast.sum() - 1.0).abs());
        }
    }
    Ok((worst <= 1e-10 && worst_sum <= 1e-12, format!("max |Δc| = {worst:.3e}, max |Σc − 1| = {worst_sum:.3e}")))
}

fn n2_optimality() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for mu in linear_grid(0.0, 5.0, 200)? {
        worst = worst.max((closed_form(ClosedForm::Bs2, mu)? - optimal_usd_prob(2, mu)?).abs());
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e} over 200 points")))
}

/// Closed forms against routes that do not use them: direct products, the
/// exponential-polynomial recursion, and Richardson-extrapolated finite-copy
/// sums.
fn closed_form_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    let mut record = |what: &str, mu: f64, got: f64, want: f64, scale: f64| {
        let rel = (got - want).abs() / want.abs().max(1e-300) / scale;
        if rel > worst {
            worst = rel;
            worst_at = format!("{what} at μ={mu}");
        }
    };
    for mu in [0.25, 1.0, 2.0] {
        for (s, n) in [(ClosedForm::Bs3Simple, 3), (ClosedForm::Bs4Simple, 4), (ClosedForm::BsnSimple(6), 6)] {
            record(&s.to_string(), mu, closed_form(s, mu)?, oracle::simple_product(n, mu), 1e-12);
        }
        record("bs2", mu, closed_form(ClosedForm::Bs2, mu)?, feedback_limit(2, mu)?, 1e-12);
        record("bs3-feedback", mu, closed_form(ClosedForm::Bs3Feedback, mu)?, feedback_limit(3, mu)?, 1e-12);
        let extrapolate = |f: &dyn Fn(u64) -> Result<f64>| -> Result<f64> { Ok(2.0 * f(2000)? - f(1000)?) };
        let bs4 = extrapolate(&|m| bb84_finite_m(mu, m))?;
        record("bs4-feedback", mu, closed_form(ClosedForm::Bs4Feedback, mu)?, bs4, 1e-4);
        let p2 = extrapolate(&|m| bb84_p2_finite_closed(mu, m))?;
        record("bs4-p2", mu, closed_form(ClosedForm::Bs4P2, mu)?, p2, 1e-4);
    }
    Ok((worst <= 1.0, format!("worst error {worst:.3} of tolerance ({worst_at})")))
}

fn curve_properties() -> Result<(bool, String)> {
    let mut problems = Vec::new();
    for n in [3, 4] {
        let table = sweep(&SweepConfig {
            n,
            mu_grid: linear_grid(0.0, 3.0, 61)?,
            efficiency: 1.0,
            copies: 1000,
            trials: 0,
            seed: 0,
        })?;
        problems.extend(table.dominance_violations(1e-12).into_iter().map(|p| format!("N={n}: {p}")));
        problems.extend(table.monotonicity_violations().into_iter().map(|p| format!("N={n}: {p}")));
        problems.extend(table.ordering_violations(1.0).into_iter().map(|p| format!("N={n}: {p}")));
    }
    let detail = if problems.is_empty() {
        "N=3,4: dominance, monotonicity and ordering hold".into()
    } else {
        problems.join("; ")
    };
    Ok((problems.is_empty(), detail))
}

fn finite_m_oracle() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for (n, m) in [(3, 60), (4, 80)] {
        for mu in [0.25, 1.0] {
            worst = worst.max((feedback_finite_m(n, mu, m)? - oracle::nested_feedback_sum(n, mu, m)?).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max |DP − nested sum| = {worst:.3e}")))
}

fn small_amplitude() -> Result<(bool, String)> {
    let mu = 0.01;
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [3, 4] {
        let fb = feedback_finite_m(n, mu, 10_000)? / asymptotic(Asymptotic::BsnFeedback, n, mu)?;
        let simple = closed_form(ClosedForm::BsnSimple(n), mu)? / asymptotic(Asymptotic::BsnSimple, n, mu)?;
        ok &= (0.9..=1.1).contains(&fb) && (0.9..=1.1).contains(&simple);
        parts.push(format!("N={n}: feedback ratio {fb:.4}, simple ratio {simple:.4}"));
    }
    Ok((ok, parts.join("; ")))
}

fn factor_four() -> Result<(bool, String)> {
    let mu: f64 = 0.01;
    let single = -(-mu).exp_m1() - mu * (-mu).exp();
    let ratio = closed_form(ClosedForm::Bs4P2, mu)? / single;
    Ok(((ratio / 4.0 - 1.0).abs() <= 0.01, format!("ratio {ratio:.5} at μ = {mu}")))
}

fn polarization_curve() -> Result<(bool, String)> {
    let s2 = std::f64::consts::SQRT_2;
    let reference = 1.0 - (-2.0f64).exp() * (s2 * s2.sinh() + 2.0 * s2.cosh() - 1.0);
    let value = closed_form(ClosedForm::Pol4, 1.0)?;
    let mut above = 0usize;
    for mu in linear_grid(0.0, 5.0, 200)? {
        if closed_form(ClosedForm::Pol4, mu)? > optimal_usd_prob(4, mu)? + 1e-12 {
            above += 1;
        }
    }
    let err = (value - reference).abs();
    Ok((
        err <= 1e-9 && above == 0,
        format!("P_pol(1) = {value:.12}, |Δ| = {err:.2e}, {above} grid points above optimum"),
    ))
}

fn soundness(trials_per_scheme: u64, seed: u64) -> Result<(bool, String)> {
    let mut total = 0u64;
    let mut unsound = 0u64;
    for (i, scheme) in mixed_schemes().into_iter().enumerate() {
        for (j, mu) in [0.3, 2.0].into_iter().enumerate() {
            let t = RunSpec::new(
                scheme,
                mu,
                200,
                trials_per_scheme,
                crate::random::derive_seed(seed, &[i as u64, j as u64]),
            )
            .tally()?;
            total += t.trials;
            unsound += t.unsound;
        }
    }
    Ok((unsound == 0, format!("{unsound} unsound outcomes in {total} trials")))
}

fn monte_carlo_agreement(seed: u64) -> Result<(bool, String)> {
    let copies = 1000u64;
    let schemes = [Scheme::Simple(3), Scheme::Feedback3, Scheme::Simple(4), Scheme::Receiver4, Scheme::FeedbackN(5)];
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, scheme) in schemes.into_iter().enumerate() {
        for (j, mu) in [0.25, 1.0].into_iter().enumerate() {
            let spec =
                RunSpec::new(scheme, mu, copies, 100_000, crate::random::derive_seed(seed, &[i as u64, j as u64]));
            let cmp = compare_to_analytic(&spec.estimate()?, spec.analytic()?, 5.0 / copies as f64)?;
            ok &= cmp.pass;
            parts.push(format!("{scheme} μ={mu}: z={:.2}", cmp.z_score));
        }
    }
    Ok((ok, parts.join("; ")))
}

fn bb84_statistics(seed: u64) -> Result<(bool, String)> {
    let copies = 1000u64;
    let report = run_session(&SessionConfig {
        pulses: 100_000,
        mean_photons: 1.0,
        efficiency: 1.0,
        copies,
        seed,
        basis_rule: BasisRule::Random,
    })?;
    let s = &report.stats;
    let n = s.pulses as f64;
    let band = |p_hat: f64, p: f64, bias: f64| (p_hat - p).abs() <= SIGMA_BAND * (p * (1.0 - p) / n).sqrt() + bias;
    let bias = 5.0 / copies as f64;
    let targets = [
        closed_form(ClosedForm::Bs4P1, 1.0)?,
        closed_form(ClosedForm::Bs4P2, 1.0)?,
        closed_form(ClosedForm::Bs4Feedback, 1.0)?,
    ];
    let mut ok = true;
    for (k, want) in targets.iter().enumerate() {
        ok &= band(s.fraction_at_least(k + 1), *want, bias);
    }
    let two = (s.key_b + s.key_c + s.unresolved) as f64;
    ok &= (s.coincidence_fraction - 0.5).abs() <= SIGMA_BAND * (0.25 / two.max(1.0)).sqrt();
    ok &= s.errors == 0;
    Ok((
        ok,
        format!(
            "stage ≥1/2/3 = {:.5}/{:.5}/{:.5}, coincidence {:.4}, QBER {}",
            s.fraction_at_least(1),
            s.fraction_at_least(2),
            s.fraction_at_least(3),
            s.coincidence_fraction,
            s.error_rate
        ),
    ))
}

fn efficiency_substitution(trials: u64, seed: u64) -> Result<(bool, String)> {
    let mut mismatched = Vec::new();
    for scheme in mixed_schemes() {
        for mu in [0.4, 1.0, 3.0] {
            let lossy = RunSpec { efficiency: 0.25, ..RunSpec::new(scheme, mu, 300, trials, seed) };
            let ideal = RunSpec::new(scheme, 0.25 * mu, 300, trials, seed);
            if lossy.tally()? != ideal.tally()? {
                mismatched.push(format!("{scheme} μ={mu}"));
            }
        }
    }
    let detail = if mismatched.is_empty() { "all tallies identical".into() } else { mismatched.join(", ") };
    Ok((mismatched.is_empty(), detail))
}
