//! Closed-form success probabilities and related numerics.
//!
//! All functions take the *effective* mean photon number `μ = η|α|²`;
//! detector efficiency enters only through that substitution.

mod closed_form;
mod coefficients;
mod expsum;
mod finite_m;

pub use closed_form::{asymptotic, closed_form, elimination_click_prob, Asymptotic, ClosedForm};
pub use coefficients::{optimal_usd_prob, symmetric_coefficients, CoefficientVector};
pub use expsum::{ExpSum, ExpTerm};
pub use finite_m::{
    bb84_finite_m, bb84_first_click_prob, bb84_p2_finite_closed, bb84_p2_finite_sum, bb84_stage3_prob,
    feedback3_finite_m, feedback_finite_m, feedback_limit, feedback_limit_expsum, FINITE_M_MAX_N, LIMIT_MAX_N,
};

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Clamping beyond this raises a numerical-health warning.
pub const CLAMP_WARN: f64 = 1e-9;

/// The signal ensemble: `N` equally spaced phases `2πk/N` on a coherent state
/// of mean photon number `μ`, received with detector efficiency `η`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseAlphabet {
    n: usize,
    mean_photons: f64,
    efficiency: f64,
}

impl PhaseAlphabet {
    pub fn new(n: usize, mean_photons: f64, efficiency: f64) -> Result<Self> {
        if !(2..=64).contains(&n) {
            return Err(Error::param(format!("alphabet size N={n} outside 2..=64")));
        }
        check_mu(mean_photons)?;
        if !(0.0..=1.0).contains(&efficiency) {
            return Err(Error::param(format!("efficiency {efficiency} outside [0, 1]")));
        }
        Ok(Self { n, mean_photons, efficiency })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mean_photons(&self) -> f64 {
        self.mean_photons
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    /// `η·μ`, the only intensity the simulation ever uses.
    pub fn effective_mean_photons(&self) -> f64 {
        self.efficiency * self.mean_photons
    }

    pub fn phase(&self, k: usize) -> f64 {
        2.0 * PI * (k % self.n) as f64 / self.n as f64
    }

    /// `|e^{iφ_j} − e^{iφ_k}|² = 4 sin²(π(j−k)/N)`.
    pub fn chord_sq(&self, j: usize, k: usize) -> f64 {
        chord_sq(self.n, (j + self.n - k % self.n) % self.n)
    }
}

/// Squared chord between phases `d` steps apart on the `N`-gon.
pub fn chord_sq(n: usize, d: usize) -> f64 {
    let s = (PI * (d % n) as f64 / n as f64).sin();
    4.0 * s * s
}

pub(crate) fn check_mu(mu: f64) -> Result<()> {
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::param(format!("mean photon number {mu} must be finite and ≥ 0")));
    }
    Ok(())
}

/// Clamps to `[0, 1]`, warning when the excursion exceeds [`CLAMP_WARN`].
pub fn clamp_probability(p: f64, what: &str) -> f64 {
    if p < -CLAMP_WARN || p > 1.0 + CLAMP_WARN || p.is_nan() {
        log::warn!("numerical health: {what} evaluated to {p}, clamped to [0, 1]");
    }
    if p.is_nan() {
        return 0.0;
    }
    p.clamp(0.0, 1.0)
}
