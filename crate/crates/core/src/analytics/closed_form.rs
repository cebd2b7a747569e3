use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::{check_mu, chord_sq, clamp_probability, ExpSum};
use crate::error::{Error, Result};

/// Schemes with a closed-form success probability in the `M → ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClosedForm {
    /// N = 2 basis measurement, `1 − e^{−2μ}`.
    Bs2,
    /// Two-state USD for arbitrary phases by two elimination setups.
    Bs2a {
        phi0: f64,
        phi1: f64,
    },
    Bs3Simple,
    Bs3Feedback,
    Bs4Simple,
    /// The 4-step feedback receiver (three photodetection events).
    Bs4Feedback,
    /// 4-step receiver, at least one photon detected.
    Bs4P1,
    /// 4-step receiver, at least two photons detected.
    Bs4P2,
    /// Optimal USD of the four polarization-encoded mixed states.
    Pol4,
    BsnSimple(usize),
}

impl fmt::Display for ClosedForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClosedForm::Bs2 => write!(f, "bs2"),
            ClosedForm::Bs2a { phi0, phi1 } => write!(f, "bs2a:{phi0},{phi1}"),
            ClosedForm::Bs3Simple => write!(f, "bs3-simple"),
            ClosedForm::Bs3Feedback => write!(f, "bs3-feedback"),
            ClosedForm::Bs4Simple => write!(f, "bs4-simple"),
            ClosedForm::Bs4Feedback => write!(f, "bs4-feedback"),
            ClosedForm::Bs4P1 => write!(f, "bs4-p1"),
            ClosedForm::Bs4P2 => write!(f, "bs4-p2"),
            ClosedForm::Pol4 => write!(f, "pol4"),
            ClosedForm::BsnSimple(n) => write!(f, "bsn-simple:{n}"),
        }
    }
}

impl FromStr for ClosedForm {
    type Err = Error;

    /// Tags as printed by `Display`, e.g. `bs3-feedback`, `bsn-simple:5`, `bs2a:0,1.5`.
    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownScheme(s.to_string());
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        Ok(match (head, arg) {
            ("bs2", None) => ClosedForm::Bs2,
            ("bs3-simple", None) => ClosedForm::Bs3Simple,
            ("bs3-feedback", None) => ClosedForm::Bs3Feedback,
            ("bs4-simple", None) => ClosedForm::Bs4Simple,
            ("bs4-feedback", None) => ClosedForm::Bs4Feedback,
            ("bs4-p1", None) => ClosedForm::Bs4P1,
            ("bs4-p2", None) => ClosedForm::Bs4P2,
            ("pol4", None) => ClosedForm::Pol4,
            ("bsn-simple", Some(n)) => ClosedForm::BsnSimple(n.parse().map_err(|_| unknown())?),
            ("bs2a", Some(args)) => {
                let (a, b) = args.split_once(',').ok_or_else(unknown)?;
                ClosedForm::Bs2a {
                    phi0: a.trim().parse().map_err(|_| unknown())?,
                    phi1: b.trim().parse().map_err(|_| unknown())?,
                }
            }
            _ => return Err(unknown()),
        })
    }
}

impl ClosedForm {
    /// Alphabet size the scheme discriminates.
    pub fn n(&self) -> usize {
        match self {
            ClosedForm::Bs2 | ClosedForm::Bs2a { .. } => 2,
            ClosedForm::Bs3Simple | ClosedForm::Bs3Feedback => 3,
            ClosedForm::Bs4Simple
            | ClosedForm::Bs4Feedback
            | ClosedForm::Bs4P1
            | ClosedForm::Bs4P2
            | ClosedForm::Pol4 => 4,
            ClosedForm::BsnSimple(n) => *n,
        }
    }

    /// `true` for measurements built from beamsplitters and detectors only.
    /// The stage probabilities and the polarization optimum are not.
    pub fn is_linear_optics_usd(&self) -> bool {
        !matches!(self, ClosedForm::Bs4P1 | ClosedForm::Bs4P2 | ClosedForm::Pol4)
    }

    /// The polynomial-exponential form, for schemes that cancel at small μ.
    pub fn expsum(&self) -> Option<ExpSum> {
        let one = ExpSum::constant(1.0);
        match self {
            ClosedForm::Bs3Feedback => Some(one.with(3.0, 0, -2.0).with(-4.0, 0, -1.5)),
            ClosedForm::Bs4Feedback => Some(one.with(3.0, 0, -2.0).with(2.0, 1, -2.0).with(-4.0, 0, -1.0)),
            ClosedForm::Bs4P2 => Some(one.with(-1.0, 0, -2.0).with(-2.0, 1, -2.0)),
            ClosedForm::Pol4 => {
                // e^{−2μ}(√2 sinh √2μ + 2 cosh √2μ − 1) expanded into exponentials.
                let h = SQRT_2 / 2.0;
                Some(one.with(-(1.0 + h), 0, SQRT_2 - 2.0).with(-(1.0 - h), 0, -(2.0 + SQRT_2)).with(1.0, 0, -2.0))
            }
            _ => None,
        }
    }
}

/// `1 − exp(−η μ |e^{iΔφ} − 1|²)`.
pub fn elimination_click_prob(mu: f64, eta: f64, delta_phi: f64) -> f64 {
    let s = (delta_phi / 2.0).sin();
    -(-eta * mu * 4.0 * s * s).exp_m1()
}

fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// Success probability of `scheme` at mean photon number `mu`.
pub fn closed_form(scheme: ClosedForm, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let p = match scheme {
        ClosedForm::Bs2 | ClosedForm::Bs4P1 => one_minus_exp(2.0 * mu),
        ClosedForm::Bs2a { phi0, phi1 } => {
            let s = ((phi0 - phi1) / 2.0).sin();
            one_minus_exp(mu * 4.0 * s * s / 2.0)
        }
        ClosedForm::Bs3Simple => one_minus_exp(mu).powi(2),
        ClosedForm::Bs4Simple => one_minus_exp(mu / 2.0).powi(2) * one_minus_exp(mu),
        ClosedForm::BsnSimple(n) => {
            if n < 2 {
                return Err(Error::param(format!("simple scheme needs N ≥ 2, got {n}")));
            }
            (1..n).map(|k| one_minus_exp(mu / n as f64 * chord_sq(n, k))).product()
        }
        ClosedForm::Bs3Feedback | ClosedForm::Bs4Feedback | ClosedForm::Bs4P2 | ClosedForm::Pol4 => {
            scheme.expsum().expect("cancelling schemes have an expsum").eval(mu)
        }
    };
    Ok(clamp_probability(p, &scheme.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Asymptotic {
    Optimal,
    BsnSimple,
    BsnFeedback,
}

/// Leading small-μ behaviour: `N μ^{N−1}/(N−1)!` for the optimum and the
/// general feedback scheme, `μ^{N−1}/N^{N−3}` for the simple split.
pub fn asymptotic(kind: Asymptotic, n: usize, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    if n < 2 {
        return Err(Error::param(format!("asymptotics need N ≥ 2, got {n}")));
    }
    let e = (n - 1) as i32;
    Ok(match kind {
        Asymptotic::Optimal | Asymptotic::BsnFeedback => {
            let fact: f64 = (1..n).map(|k| k as f64).product();
            n as f64 * mu.powi(e) / fact
        }
        Asymptotic::BsnSimple => mu.powi(e) / (n as f64).powi(n as i32 - 3),
    })
}
