//! Finite-copy sums for the feedback schemes, and the exact `M → ∞` limit of
//! the general-`N` scheme.
//!
//! Copy bookkeeping: a stage with `n` surviving candidates spends `n` copies
//! (one per candidate) per round, and the round containing the click is
//! counted as consumed. A stage that cannot afford a full round ends the
//! procedure. Per-round weights are `e^{−k μ A_{≥m}/M}` for `k` silent rounds
//! and `1 − e^{−A_m μ/M}` for the round in which the `m`-th eliminated phase
//! clicks, with `A = |e^{iθ} − 1|²` measured from the true phase.

use super::{check_mu, chord_sq, clamp_probability, ExpSum};
use crate::error::{Error, Result};

/// Largest `N` accepted by [`feedback_finite_m`].
pub const FINITE_M_MAX_N: usize = 6;
/// Largest `N` accepted by [`feedback_limit`].
pub const LIMIT_MAX_N: usize = 8;

fn wrong_chords(n: usize) -> Vec<f64> {
    (1..n).map(|d| chord_sq(n, d)).collect()
}

fn check_copies(n: usize, copies: u64) -> Result<()> {
    if copies < n as u64 {
        return Err(Error::param(format!("need at least N={n} copies, got M={copies}")));
    }
    Ok(())
}

/// General-`N` feedback scheme at finite `M`, summed over every elimination
/// order and every round count.
///
/// Evaluated by dynamic programming over the set of already-eliminated
/// phases: `f_S(c) = q_S f_S(c−n) + Σ_{j∉S} (1 − e^{−A_j μ/M}) f_{S∪j}(c−n)`
/// where `c` is the number of copies left and `n = N − |S|`.
pub fn feedback_finite_m(n: usize, mu: f64, copies: u64) -> Result<f64> {
    if !(2..=FINITE_M_MAX_N).contains(&n) {
        return Err(Error::param(format!("finite-M sum supports 2 ≤ N ≤ {FINITE_M_MAX_N}, got {n}")));
    }
    check_mu(mu)?;
    check_copies(n, copies)?;
    let m = copies as usize;
    let chords = wrong_chords(n);
    let x = mu / copies as f64;
    let click: Vec<f64> = chords.iter().map(|a| -(-a * x).exp_m1()).collect();
    let wrong = n - 1;
    let full = (1usize << wrong) - 1;

    let mut table: Vec<Vec<f64>> = vec![Vec::new(); full + 1];
    table[full] = vec![1.0; m + 1];
    let mut masks: Vec<usize> = (0..full).collect();
    masks.sort_by_key(|s| std::cmp::Reverse(s.count_ones()));
    for s in masks {
        let candidates = n - s.count_ones() as usize;
        let remaining: Vec<usize> = (0..wrong).filter(|j| s & (1 << j) == 0).collect();
        let a_rem: f64 = remaining.iter().map(|&j| chords[j]).sum();
        let silent = (-a_rem * x).exp();
        let mut f = vec![0.0; m + 1];
        for c in candidates..=m {
            let prev = c - candidates;
            let mut v = silent * f[prev];
            for &j in &remaining {
                v += click[j] * table[s | (1 << j)][prev];
            }
            f[c] = v;
        }
        table[s] = f;
    }
    Ok(clamp_probability(table[0][m], "finite-M feedback sum"))
}

/// The `M → ∞` limit of [`feedback_finite_m`] as an exponential polynomial in
/// the mean photon number.
///
/// In the limit, light is spent continuously: with wrong set `W` and
/// `n = |W|+1` candidates, each candidate receives light `x` while the pool
/// loses `n·x`, and wrong phase `j` clicks at rate `A_j` per unit `x`. Hence
/// `P_W(L) = (1/n) e^{−ρL} ∫₀^L e^{ρy} Σ_j A_j P_{W∖j}(y) dy` with
/// `ρ = Σ_{j∈W} A_j / n` and `P_∅ = 1`, which closes over exponential
/// polynomials.
pub fn feedback_limit_expsum(n: usize) -> Result<ExpSum> {
    if !(2..=LIMIT_MAX_N).contains(&n) {
        return Err(Error::param(format!("feedback limit supports 2 ≤ N ≤ {LIMIT_MAX_N}, got {n}")));
    }
    let chords = wrong_chords(n);
    let wrong = n - 1;
    let full = (1usize << wrong) - 1;
    let mut memo: Vec<ExpSum> = vec![ExpSum::zero(); full + 1];
    memo[0] = ExpSum::constant(1.0);
    let mut masks: Vec<usize> = (1..=full).collect();
    masks.sort_by_key(|s| s.count_ones());
    for w in masks {
        let candidates = (w.count_ones() + 1) as f64;
        let mut source = ExpSum::zero();
        let mut a_w = 0.0;
        for j in (0..wrong).filter(|j| w & (1 << j) != 0) {
            source.add_scaled(&memo[w & !(1 << j)], chords[j]);
            a_w += chords[j];
        }
        memo[w] = source.damped_integral(a_w / candidates).scaled(1.0 / candidates);
    }
    Ok(memo[full].clone())
}

/// Success probability of the general-`N` feedback scheme as `M → ∞`.
pub fn feedback_limit(n: usize, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let f = feedback_limit_expsum(n)?;
    Ok(clamp_probability(f.eval(mu), "feedback limit"))
}

/// Probability that the first click of a basis-measurement stage happens on
/// try `k+1`: `e^{−2kμ/M}(1 − e^{−2μ/M})`. The same law holds for the
/// second stage's `m`.
pub fn bb84_first_click_prob(k: u64, mu: f64, copies: u64) -> f64 {
    let x = mu / copies as f64;
    (-2.0 * k as f64 * x).exp() * -(-2.0 * x).exp_m1()
}

/// Final-stage success after clicks on tries `k+1` and `m+1`, using the light
/// of the `M − k − m − 2` copies actually left.
pub fn bb84_stage3_prob(k: u64, m: u64, mu: f64, copies: u64) -> f64 {
    let left = copies.saturating_sub(k + m + 2);
    -(-mu * left as f64 / copies as f64).exp_m1()
}

/// At least two clicks in the 4-step receiver, literal sum over `k`.
pub fn bb84_p2_finite_sum(mu: f64, copies: u64) -> Result<f64> {
    check_mu(mu)?;
    check_copies(1, copies)?;
    let x = mu / copies as f64;
    let s: f64 = (0..copies)
        .map(|k| bb84_first_click_prob(k, mu, copies) * -(-2.0 * (copies - k - 1) as f64 * x).exp_m1())
        .sum();
    Ok(clamp_probability(s, "bb84 P2 sum"))
}

/// `1 − e^{−2μ} − M e^{−2μ}(e^{2μ/M} − 1)`.
pub fn bb84_p2_finite_closed(mu: f64, copies: u64) -> Result<f64> {
    check_mu(mu)?;
    check_copies(1, copies)?;
    let m = copies as f64;
    let p = -(-2.0 * mu).exp_m1() - m * (-2.0 * mu).exp() * (2.0 * mu / m).exp_m1();
    Ok(clamp_probability(p, "bb84 P2 closed form"))
}

/// USD probability of the 4-step receiver at finite `M` (three clicks).
pub fn bb84_finite_m(mu: f64, copies: u64) -> Result<f64> {
    check_mu(mu)?;
    check_copies(2, copies)?;
    let m = copies as usize;
    let x = mu / copies as f64;
    let step: Vec<f64> = (0..m).map(|k| bb84_first_click_prob(k as u64, mu, copies)).collect();
    // stage3[r]: success with r copies left.
    let stage3: Vec<f64> = (0..m).map(|r| -(-(r as f64) * x).exp_m1()).collect();
    let mut total = 0.0;
    for k in 0..m - 1 {
        let mut inner = 0.0;
        for j in 0..=(m - k - 2) {
            inner += step[j] * stage3[m - k - j - 2];
        }
        total += step[k] * inner;
    }
    Ok(clamp_probability(total, "bb84 finite-M sum"))
}

/// `N = 3` feedback scheme at finite `M`: rounds of three copies until a click,
/// then optimal two-state USD with all remaining light.
pub fn feedback3_finite_m(mu: f64, copies: u64) -> Result<f64> {
    check_mu(mu)?;
    check_copies(3, copies)?;
    let x = mu / copies as f64;
    let a = chord_sq(3, 1);
    let click = -(-a * x).exp_m1();
    let mut total = 0.0;
    let mut k = 0u64;
    while 3 * (k + 1) <= copies {
        let left = (copies - 3 * (k + 1)) as f64 * x;
        total += 2.0 * (-2.0 * a * k as f64 * x).exp() * click * -(-a * left / 2.0).exp_m1();
        k += 1;
    }
    Ok(clamp_probability(total, "N=3 finite-M sum"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{closed_form, ClosedForm};

    #[test]
    fn limit_reproduces_known_closed_forms() {
        for mu in [0.0, 1e-4, 0.05, 0.5, 1.0, 3.0, 8.0] {
            let l2 = feedback_limit(2, mu).unwrap();
            assert!((l2 - closed_form(ClosedForm::Bs2, mu).unwrap()).abs() < 1e-13, "N=2 μ={mu}");
            let l3 = feedback_limit(3, mu).unwrap();
            let c3 = closed_form(ClosedForm::Bs3Feedback, mu).unwrap();
            assert!((l3 - c3).abs() < 1e-13 * c3.max(1e-300) + 1e-16, "N=3 μ={mu}: {l3} vs {c3}");
        }
    }

    #[test]
    fn limit_leading_order_is_optimal() {
        for n in 2..=LIMIT_MAX_N {
            let f = feedback_limit_expsum(n).unwrap();
            let a = f.taylor(n);
            let fact: f64 = (1..n).map(|k| k as f64).product();
            for (i, c) in a.iter().enumerate().take(n - 1) {
                assert_eq!(*c, 0.0, "N={n} order {i}");
            }
            assert!((a[n - 1] - n as f64 / fact).abs() < 1e-9, "N={n}: {}", a[n - 1]);
        }
    }

    #[test]
    fn finite_m_converges_to_limit() {
        for (n, mu) in [(3, 1.0), (4, 1.0), (5, 0.25), (5, 1.0)] {
            let lim = feedback_limit(n, mu).unwrap();
            let gaps: Vec<f64> =
                [250u64, 1000, 4000].iter().map(|&m| (lim - feedback_finite_m(n, mu, m).unwrap()).abs()).collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "N={n}: {gaps:?}");
            // O(1/M): quadrupling M cuts the gap by about four.
            let ratio = gaps[1] / gaps[2];
            assert!((3.0..5.0).contains(&ratio), "N={n}: ratio {ratio}");
        }
    }

    #[test]
    fn general_n4_differs_from_four_step_receiver() {
        let general = feedback_limit(4, 1.0).unwrap();
        let receiver = closed_form(ClosedForm::Bs4Feedback, 1.0).unwrap();
        assert!((general - 0.2016).abs() < 1e-3);
        assert!(receiver - general > 3e-3);
        // Same leading order at small μ.
        let mu = 1e-3;
        let g = feedback_limit(4, mu).unwrap();
        let r = closed_form(ClosedForm::Bs4Feedback, mu).unwrap();
        assert!((g / r - 1.0).abs() < 1e-2);
    }

    #[test]
    fn bb84_sum_converges() {
        let lim = closed_form(ClosedForm::Bs4Feedback, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for m in [100u64, 1000, 10_000] {
            let gap = (lim - bb84_finite_m(1.0, m).unwrap()).abs();
            assert!(gap < prev);
            assert!(gap < 5.0 / m as f64);
            prev = gap;
        }
    }

    #[test]
    fn bb84_p2_sum_equals_closed() {
        for (mu, m) in [(0.3, 50u64), (1.0, 1000), (2.5, 7)] {
            let a = bb84_p2_finite_sum(mu, m).unwrap();
            let b = bb84_p2_finite_closed(mu, m).unwrap();
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        let lim = closed_form(ClosedForm::Bs4P2, 1.0).unwrap();
        assert!((bb84_p2_finite_closed(1.0, 1_000_000).unwrap() - lim).abs() < 1e-5);
    }

    #[test]
    fn geometric_first_click_law_sums_to_p1() {
        let (mu, m) = (0.8, 400u64);
        let s: f64 = (0..m).map(|k| bb84_first_click_prob(k, mu, m)).sum();
        assert!((s - closed_form(ClosedForm::Bs4P1, mu).unwrap()).abs() < 1e-12);
        assert_eq!(bb84_stage3_prob(m, m, mu, m), 0.0);
    }

    #[test]
    fn feedback3_sum_converges() {
        let lim = closed_form(ClosedForm::Bs3Feedback, 1.0).unwrap();
        let gap = |m| (lim - feedback3_finite_m(1.0, m).unwrap()).abs();
        assert!(gap(10_000) < gap(1000) && gap(1000) < gap(100));
        assert!(gap(1000) < 5e-3);
    }

    #[test]
    fn zero_light_never_succeeds() {
        for n in 2..=FINITE_M_MAX_N {
            assert_eq!(feedback_finite_m(n, 0.0, 100).unwrap(), 0.0);
        }
        assert_eq!(bb84_finite_m(0.0, 100).unwrap(), 0.0);
        assert_eq!(feedback3_finite_m(0.0, 100).unwrap(), 0.0);
        assert_eq!(feedback_limit(5, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn parameter_errors() {
        assert!(feedback_finite_m(7, 1.0, 100).is_err());
        assert!(feedback_finite_m(1, 1.0, 100).is_err());
        assert!(feedback_finite_m(4, 1.0, 3).is_err());
        assert!(feedback_limit(9, 1.0).is_err());
    }
}
