use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{check_mu, clamp_probability};
use crate::error::{Error, Result};

/// `|c_k|²`, the weight of photon numbers `n ≡ k (mod N)` in the state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector(pub Vec<f64>);

impl CoefficientVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// `|c_k|² = (1/N) Σ_j Re[e^{−2πijk/N} e^{μ(e^{2πij/N} − 1)}]`.
pub fn symmetric_coefficients(n: usize, mu: f64) -> Result<CoefficientVector> {
    if n < 2 {
        return Err(Error::param(format!("symmetric coefficients need N ≥ 2, got {n}")));
    }
    check_mu(mu)?;
    // Per j: magnitude e^{μ(cos θ_j − 1)} and phase μ sin θ_j.
    let spectrum: Vec<(f64, f64)> = (0..n)
        .map(|j| {
            let theta = 2.0 * PI * j as f64 / n as f64;
            ((mu * (theta.cos() - 1.0)).exp(), mu * theta.sin())
        })
        .collect();
    let values = (0..n)
        .map(|k| {
            let s: f64 = spectrum
                .iter()
                .enumerate()
                .map(|(j, &(mag, ph))| {
                    let twist = 2.0 * PI * ((j * k) % n) as f64 / n as f64;
                    mag * (ph - twist).cos()
                })
                .sum();
            s / n as f64
        })
        .collect();
    Ok(CoefficientVector(values))
}

/// Optimal USD success probability `N · min_k |c_k|²`.
pub fn optimal_usd_prob(n: usize, mu: f64) -> Result<f64> {
    let c = symmetric_coefficients(n, mu)?;
    Ok(clamp_probability(n as f64 * c.min(), "optimal USD probability"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vacuum_is_all_in_k0() {
        let c = symmetric_coefficients(5, 0.0).unwrap();
        assert_eq!(c.values()[0], 1.0);
        assert!(c.values()[1..].iter().all(|&v| v.abs() < 1e-16));
    }

    #[test]
    fn n2_odd_weight() {
        // e^{−1} sinh 1
        let c = symmetric_coefficients(2, 1.0).unwrap();
        assert!((c.values()[1] - 0.432_332_358_381_693_65).abs() < 1e-15);
    }

    #[test]
    fn n2_optimum_is_two_state_bound() {
        for i in 0..50 {
            let mu = i as f64 * 0.1;
            let p = optimal_usd_prob(2, mu).unwrap();
            assert!((p + (-2.0 * mu).exp_m1()).abs() < 1e-12);
        }
    }

    #[test]
    fn small_mu_scaling() {
        let mu = 1e-3;
        assert!((optimal_usd_prob(3, mu).unwrap() / (1.5 * mu * mu) - 1.0).abs() < 1e-2);
        assert!((optimal_usd_prob(4, mu).unwrap() / (2.0 / 3.0 * mu.powi(3)) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(symmetric_coefficients(1, 1.0).is_err());
        assert!(symmetric_coefficients(3, -0.1).is_err());
    }
}
