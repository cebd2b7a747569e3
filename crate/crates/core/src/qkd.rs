//! BB84 with faint pulses, Bob running the 4-step receiver.
//!
//! Alice's encoding is fixed:
//!
//! | bit | basis | phase  | index |
//! |-----|-------|--------|-------|
//! | 0   | plus  | 0      | 0     |
//! | 0   | cross | π/2    | 1     |
//! | 1   | plus  | π      | 2     |
//! | 1   | cross | 3π/2   | 3     |
//!
//! Sifting categories by number of clicks on Bob's side:
//!
//! - **A** (one click): standard BB84. Bob's click ruled out one phase of his
//!   basis; the pulse is kept iff Alice used that basis. Mismatched pulses are
//!   discarded.
//! - **B** (two clicks, survivors carry the same bit): kept without any basis
//!   exchange.
//! - **C** (two clicks, survivors carry different bits): kept after Alice
//!   reveals her basis.
//! - **D** (three clicks): the state itself is known.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::PhaseAlphabet;
use crate::error::{Error, Result};
use crate::random::RandomStream;
use crate::strategies::{basis_phases, run_feedback_scheme_4, BasisRule, FeedbackConfig, PhaseSet, TrueState};

pub const SESSION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    /// Phases {0, π}.
    Plus,
    /// Phases {π/2, 3π/2}.
    Cross,
}

impl Basis {
    pub fn index(self) -> usize {
        match self {
            Basis::Plus => 0,
            Basis::Cross => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i.is_multiple_of(2) {
            Basis::Plus
        } else {
            Basis::Cross
        }
    }
}

pub fn encode(bit: bool, basis: Basis) -> usize {
    basis.index() + 2 * bit as usize
}

pub fn decode(phase_index: usize) -> (bool, Basis) {
    (phase_index % 4 >= 2, Basis::from_index(phase_index))
}

fn bit_of(phase_index: usize) -> bool {
    decode(phase_index).0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AliceRecord {
    pub bit: bool,
    pub basis: Basis,
    pub phase_index: usize,
}

impl AliceRecord {
    pub fn new(bit: bool, basis: Basis) -> Self {
        Self { bit, basis, phase_index: encode(bit, basis) }
    }
}

/// What Bob can conclude from his clicks alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Inference {
    None,
    /// One phase of `basis` ruled out.
    BasisOutcome {
        basis: Basis,
        eliminated: usize,
    },
    /// Both survivors carry this bit.
    UnambiguousBit(bool),
    /// Two survivors with different bits; needs Alice's basis.
    SurvivorPair([usize; 2]),
    UnambiguousState(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobRecord {
    pub stage_reached: u32,
    pub basis_order: (Basis, Basis),
    pub eliminated: PhaseSet,
    pub inference: Inference,
}

/// One pulse through Bob's 4-step receiver.
pub fn bob_measure(truth: &TrueState, cfg: &FeedbackConfig, rng: &mut RandomStream) -> Result<BobRecord> {
    let out = run_feedback_scheme_4(truth, cfg, rng)?;
    let first = Basis::from_index(out.first_basis.unwrap_or(0));
    let second = Basis::from_index(first.index() + 1);
    let survivors: Vec<usize> = PhaseSet::all(4).difference(out.eliminated).iter().collect();
    let inference = match (out.conclusive, survivors.as_slice()) {
        (Some(state), _) => Inference::UnambiguousState(state),
        (None, &[a, b]) if bit_of(a) == bit_of(b) => Inference::UnambiguousBit(bit_of(a)),
        (None, &[a, b]) => Inference::SurvivorPair([a, b]),
        (None, _) => match out.eliminated.iter().next() {
            Some(e) => Inference::BasisOutcome { basis: Basis::from_index(e), eliminated: e },
            None => Inference::None,
        },
    };
    Ok(BobRecord {
        stage_reached: out.stage_reached,
        basis_order: (first, second),
        eliminated: out.eliminated,
        inference,
    })
}

/// Per-session counters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionStats {
    pub pulses: u64,
    /// Pulses with exactly 0, 1, 2, 3 clicks.
    pub stage_counts: [u64; 4],
    pub key_a: u64,
    pub key_b: u64,
    pub key_c: u64,
    pub key_d: u64,
    /// Category A pulses dropped for basis mismatch.
    pub discarded_basis_mismatch: u64,
    /// Two-click pulses where both survivors lie in one basis.
    pub unresolved: u64,
    pub errors: u64,
    /// Fraction of two-click pulses whose survivors carry the same bit.
    pub coincidence_fraction: f64,
    pub error_rate: f64,
}

impl SessionStats {
    pub fn sifted_key_length(&self) -> u64 {
        self.key_a + self.key_b + self.key_c + self.key_d
    }

    pub fn fraction_at_least(&self, stage: usize) -> f64 {
        self.stage_counts[stage.min(4)..].iter().sum::<u64>() as f64 / self.pulses.max(1) as f64
    }

    /// Key bits per pulse, by category.
    pub fn key_fractions(&self) -> KeyFractions {
        let p = self.pulses.max(1) as f64;
        KeyFractions {
            a: self.key_a as f64 / p,
            b: self.key_b as f64 / p,
            c: self.key_c as f64 / p,
            d: self.key_d as f64 / p,
            total: self.sifted_key_length() as f64 / p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyFractions {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub total: f64,
}

/// Sifts aligned Alice/Bob records and checks every kept bit against Alice's.
pub fn sift(alice: &[AliceRecord], bob: &[BobRecord]) -> Result<SessionStats> {
    if alice.len() != bob.len() {
        return Err(Error::param(format!("record length mismatch: {} vs {}", alice.len(), bob.len())));
    }
    let mut s = SessionStats { pulses: alice.len() as u64, ..SessionStats::default() };
    let mut two_click = 0u64;
    let mut coincide = 0u64;
    for (a, b) in alice.iter().zip(bob) {
        s.stage_counts[(b.stage_reached as usize).min(3)] += 1;
        let key = match b.inference {
            Inference::None => None,
            Inference::BasisOutcome { basis, eliminated } => {
                if basis == a.basis {
                    s.key_a += 1;
                    Some(!bit_of(eliminated))
                } else {
                    s.discarded_basis_mismatch += 1;
                    None
                }
            }
            Inference::UnambiguousBit(bit) => {
                two_click += 1;
                coincide += 1;
                s.key_b += 1;
                Some(bit)
            }
            Inference::SurvivorPair(pair) => {
                two_click += 1;
                let in_basis: Vec<usize> =
                    pair.iter().copied().filter(|&p| basis_phases(a.basis.index()).contains(p)).collect();
                if let [only] = in_basis.as_slice() {
                    s.key_c += 1;
                    Some(bit_of(*only))
                } else {
                    s.unresolved += 1;
                    None
                }
            }
            Inference::UnambiguousState(state) => {
                s.key_d += 1;
                Some(bit_of(state))
            }
        };
        if key.is_some_and(|k| k != a.bit) {
            s.errors += 1;
        }
    }
    s.coincidence_fraction = if two_click > 0 { coincide as f64 / two_click as f64 } else { 0.0 };
    let kept = s.sifted_key_length();
    s.error_rate = if kept > 0 { s.errors as f64 / kept as f64 } else { 0.0 };
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionConfig {
    pub pulses: u64,
    pub mean_photons: f64,
    pub efficiency: f64,
    pub copies: u64,
    pub seed: u64,
    pub basis_rule: BasisRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub schema_version: u32,
    pub config: SessionConfig,
    pub stats: SessionStats,
    pub key_fractions: KeyFractions,
}

/// Uniformly random Alice bits and bases, one substream per pulse.
pub fn run_session(cfg: &SessionConfig) -> Result<SessionReport> {
    if cfg.pulses == 0 {
        return Err(Error::param("a session needs at least one pulse"));
    }
    let alphabet = PhaseAlphabet::new(4, cfg.mean_photons, cfg.efficiency)?;
    let fb = FeedbackConfig { copies: cfg.copies, basis_rule: cfg.basis_rule, audit: false };
    let records: Vec<(AliceRecord, BobRecord)> = (0..cfg.pulses)
        .into_par_iter()
        .map(|i| {
            let mut rng = RandomStream::new(cfg.seed, i);
            let bit = rng.coin();
            let basis = if rng.coin() { Basis::Cross } else { Basis::Plus };
            let alice = AliceRecord::new(bit, basis);
            let truth = TrueState::new(alice.phase_index, alphabet)?;
            Ok((alice, bob_measure(&truth, &fb, &mut rng)?))
        })
        .collect::<Result<_>>()?;
    let (alice, bob): (Vec<_>, Vec<_>) = records.into_iter().unzip();
    let stats = sift(&alice, &bob)?;
    Ok(SessionReport {
        schema_version: SESSION_SCHEMA_VERSION,
        config: cfg.clone(),
        key_fractions: stats.key_fractions(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn session(pulses: u64, mu: f64, eta: f64, seed: u64) -> SessionReport {
        run_session(&SessionConfig {
            pulses,
            mean_photons: mu,
            efficiency: eta,
            copies: 1000,
            seed,
            basis_rule: BasisRule::Random,
        })
        .unwrap()
    }

    #[test]
    fn encoding_table() {
        assert_eq!(encode(false, Basis::Plus), 0);
        assert_eq!(encode(false, Basis::Cross), 1);
        assert_eq!(encode(true, Basis::Plus), 2);
        assert_eq!(encode(true, Basis::Cross), 3);
        for bit in [false, true] {
            for basis in [Basis::Plus, Basis::Cross] {
                assert_eq!(decode(encode(bit, basis)), (bit, basis));
            }
        }
    }

    #[test]
    fn noiseless_session_has_no_errors() {
        let r = session(20_000, 1.0, 1.0, 5);
        let s = &r.stats;
        assert_eq!(s.errors, 0);
        assert_eq!(s.error_rate, 0.0);
        assert_eq!(s.stage_counts.iter().sum::<u64>(), s.pulses);
        assert!(s.key_a > 0 && s.key_b > 0 && s.key_c > 0 && s.key_d > 0);
    }

    #[test]
    fn two_click_coincidence_is_half() {
        let r = session(40_000, 1.5, 1.0, 8);
        let s = &r.stats;
        let two = s.key_b + s.key_c + s.unresolved;
        let p = 0.5;
        let sigma = (p * (1.0 - p) / two as f64).sqrt();
        assert!((s.coincidence_fraction - 0.5).abs() < 4.0 * sigma, "{}", s.coincidence_fraction);
    }

    #[test]
    fn weak_pulse_first_click_rate() {
        let r = session(200_000, 0.1, 1.0, 13);
        let want: f64 = 0.181_269_246_922_018_15;
        let sigma = (want * (1.0 - want) / 200_000.0).sqrt();
        assert!((r.stats.fraction_at_least(1) - want).abs() < 4.0 * sigma + 5e-3);
    }

    #[test]
    fn half_photon_three_click_rate() {
        let r = session(100_000, 0.5, 1.0, 31);
        let want: f64 = 0.045_395_125_835_235_592;
        let sigma = (want * (1.0 - want) / 100_000.0).sqrt();
        assert!((r.stats.fraction_at_least(3) - want).abs() < 4.0 * sigma + 5e-3);
    }

    #[test]
    fn blind_detector_gives_nothing() {
        let r = session(2000, 1.0, 0.0, 1);
        assert_eq!(r.stats.stage_counts[0], 2000);
        assert_eq!(r.stats.sifted_key_length(), 0);
    }

    #[test]
    fn deterministic_by_seed() {
        assert_eq!(session(3000, 0.8, 1.0, 4), session(3000, 0.8, 1.0, 4));
        assert_ne!(session(3000, 0.8, 1.0, 4).stats, session(3000, 0.8, 1.0, 8).stats);
    }

    #[test]
    fn three_clicks_name_the_state() {
        let alphabet = PhaseAlphabet::new(4, 3.0, 1.0).unwrap();
        let cfg = FeedbackConfig::with_copies(500);
        let mut seen = 0;
        for i in 0..2000 {
            let mut rng = RandomStream::new(21, i);
            let truth = TrueState::new(rng.index(4), alphabet).unwrap();
            let b = bob_measure(&truth, &cfg, &mut rng).unwrap();
            match b.inference {
                Inference::UnambiguousState(s) => {
                    assert_eq!(s, truth.phase_index());
                    assert_eq!(b.stage_reached, 3);
                    seen += 1;
                }
                Inference::UnambiguousBit(bit) => {
                    assert_eq!(bit, bit_of(truth.phase_index()));
                    assert!(b.stage_reached >= 2);
                }
                _ => {}
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn sift_rejects_misaligned_records() {
        assert!(sift(&[AliceRecord::new(false, Basis::Plus)], &[]).is_err());
    }
}
