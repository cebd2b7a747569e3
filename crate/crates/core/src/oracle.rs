//! Slow, independent reference routes used to cross-check the fast code.

use crate::analytics::chord_sq;
use crate::error::{Error, Result};

/// `|c_k|²` as Poisson mass on photon numbers `≡ k (mod N)`.
pub fn poisson_mod_n(n: usize, mu: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::param(format!("need N ≥ 2, got {n}")));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::param(format!("mean photon number must be finite and ≥ 0, got {mu}")));
    }
    let mut out = vec![0.0; n];
    if mu == 0.0 {
        out[0] = 1.0;
        return Ok(out);
    }
    let cutoff = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
    let mut log_term = -mu;
    for m in 0..=cutoff {
        if m > 0 {
            log_term += mu.ln() - (m as f64).ln();
        }
        out[m % n] += log_term.exp();
    }
    Ok(out)
}

/// `N · min_k |c_k|²` from [`poisson_mod_n`].
pub fn optimal_usd_poisson(n: usize, mu: f64) -> Result<f64> {
    let c = poisson_mod_n(n, mu)?;
    Ok(n as f64 * c.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Simple `N`-port scheme as a direct product over wrong phases.
pub fn simple_product(n: usize, mu: f64) -> f64 {
    (1..n).map(|d| 1.0 - (-(mu / n as f64) * chord_sq(n, d)).exp()).product()
}

/// Largest `M` accepted by [`nested_feedback_sum`].
pub const NESTED_MAX_COPIES: u64 = 400;

/// The general feedback scheme at finite `M`, written as explicit nested sums
/// over elimination order and silent-round counts. Exponential cost; for
/// `N ≤ 4` and small `M` only.
pub fn nested_feedback_sum(n: usize, mu: f64, copies: u64) -> Result<f64> {
    if !(2..=4).contains(&n) || copies < n as u64 || copies > NESTED_MAX_COPIES {
        return Err(Error::param(format!("nested sum needs 2 ≤ N ≤ 4 and N ≤ M ≤ {NESTED_MAX_COPIES}")));
    }
    let x = mu / copies as f64;
    let wrong: Vec<f64> = (1..n).map(|d| chord_sq(n, d)).collect();
    Ok(nested(&wrong, x, copies))
}

fn nested(wrong: &[f64], x: f64, copies_left: u64) -> f64 {
    if wrong.is_empty() {
        return 1.0;
    }
    let per_round = wrong.len() as u64 + 1;
    let silent: f64 = (-x * wrong.iter().sum::<f64>()).exp();
    let mut total = 0.0;
    let mut k = 0u64;
    while per_round * (k + 1) <= copies_left {
        let left = copies_left - per_round * (k + 1);
        let reach = silent.powi(k as i32);
        for j in 0..wrong.len() {
            let mut rest = wrong.to_vec();
            let a = rest.remove(j);
            total += reach * (1.0 - (-a * x).exp()) * nested(&rest, x, left);
        }
        k += 1;
    }
    total
}

/// `Σ c_i e^{r_i μ}` by its Maclaurin series in exact-order accumulation,
/// avoiding the exponential function altogether.
pub fn exp_sum_series(terms: &[(f64, f64)], mu: f64, order: usize) -> f64 {
    let mut total = 0.0;
    for &(c, r) in terms {
        let mut term = c;
        let mut acc = term;
        for k in 1..=order {
            term *= r * mu / k as f64;
            acc += term;
        }
        total += acc;
    }
    total
}
