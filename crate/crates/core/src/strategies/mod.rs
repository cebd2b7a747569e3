//! Event-level execution of the measurement procedures.
//!
//! Every procedure works on a [`Lab`], which holds the received signal and
//! hands out copies of it. Scheme logic decides which phases to test and
//! learns only whether detectors clicked; the true phase stays inside the
//! lab. Detector efficiency is folded into the signal amplitude up front
//! (`α → √η α`), after which all detectors are ideal.

mod feedback;
mod lab;
mod receiver;
mod simple;

pub use feedback::{run_feedback_scheme_3, run_feedback_scheme_n};
pub use receiver::{basis_phases, run_feedback_scheme_4};
pub use simple::{run_basis_measurement_2, run_simple_scheme};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::analytics::{self, ClosedForm, PhaseAlphabet};
use crate::error::{Error, Result};
use crate::optics::{self, CoherentMode, Detector};
use crate::random::RandomStream;

/// Default number of copies for the feedback schemes.
pub const DEFAULT_COPIES: u64 = 1000;

/// The phase actually sent. Only the lab reads it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueState {
    phase_index: usize,
    alphabet: PhaseAlphabet,
}

impl TrueState {
    pub fn new(phase_index: usize, alphabet: PhaseAlphabet) -> Result<Self> {
        if phase_index >= alphabet.n() {
            return Err(Error::param(format!("phase index {phase_index} outside 0..{}", alphabet.n())));
        }
        Ok(Self { phase_index, alphabet })
    }

    pub fn phase_index(&self) -> usize {
        self.phase_index
    }

    pub fn alphabet(&self) -> &PhaseAlphabet {
        &self.alphabet
    }
}

/// Set of phase indices (`N ≤ 64`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhaseSet(u64);

impl PhaseSet {
    pub fn empty() -> Self {
        Self(0)
    }

    pub fn all(n: usize) -> Self {
        Self(if n >= 64 { u64::MAX } else { (1u64 << n) - 1 })
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty();
        for i in indices {
            s.insert(i);
        }
        s
    }

    pub fn insert(&mut self, i: usize) {
        self.0 |= 1 << i;
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn len(&self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        Self(self.0 | other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Self(self.0 & !other.0)
    }

    pub fn bits(&self) -> u64 {
        self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..64).filter(move |&i| self.contains(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub round: u64,
    pub tested_phase: usize,
    pub clicked: bool,
}

/// Result of one measurement run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub eliminated: PhaseSet,
    /// Present iff `N − 1` phases were eliminated.
    pub conclusive: Option<usize>,
    /// Number of detector clicks.
    pub stage_reached: u32,
    pub copies_consumed: u64,
    /// Signal light sent into detection setups.
    pub light_used: f64,
    /// Signal light never measured.
    pub light_discarded: f64,
    /// First basis of the 4-step receiver (`0` = {0, π}, `1` = {π/2, 3π/2}).
    pub first_basis: Option<usize>,
    /// Per-detector record, kept only when auditing.
    pub click_log: Option<Vec<ClickEvent>>,
}

impl StrategyOutcome {
    pub fn is_conclusive(&self) -> bool {
        self.conclusive.is_some()
    }

    /// No eliminated phase is the truth and any conclusive answer is the truth.
    pub fn is_sound(&self, true_index: usize) -> bool {
        !self.eliminated.contains(true_index) && self.conclusive.is_none_or(|c| c == true_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisRule {
    Random,
    /// Always start with basis `0` ({0, π}) or `1` ({π/2, 3π/2}).
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeedbackConfig {
    /// Number of weak copies `M` the signal is split into.
    pub copies: u64,
    pub basis_rule: BasisRule,
    pub audit: bool,
}

impl Default for FeedbackConfig {
    fn default() -> Self {
        Self { copies: DEFAULT_COPIES, basis_rule: BasisRule::Random, audit: false }
    }
}

impl FeedbackConfig {
    pub fn with_copies(copies: u64) -> Self {
        Self { copies, ..Self::default() }
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.copies < n as u64 {
            return Err(Error::param(format!("need M ≥ N copies, got M={} for N={n}", self.copies)));
        }
        if let BasisRule::Fixed(b) = self.basis_rule {
            if b > 1 {
                return Err(Error::param(format!("first basis must be 0 or 1, got {b}")));
            }
        }
        Ok(())
    }
}

/// One elimination test: a copy of mean photon number `intensity` carrying the
/// true phase is displaced by the test phase's amplitude and detected.
/// A click proves the phase is not `test_index`.
pub fn eliminate_phase_trial(
    intensity: f64,
    true_index: usize,
    test_index: usize,
    alphabet: &PhaseAlphabet,
    rng: &mut RandomStream,
) -> Result<bool> {
    if !(intensity.is_finite() && intensity >= 0.0) {
        return Err(Error::param(format!("copy intensity {intensity} must be finite and ≥ 0")));
    }
    let amp = intensity.sqrt();
    let copy = CoherentMode::from_polar(amp, alphabet.phase(true_index))?;
    let displaced = optics::displace(copy, -Complex64::from_polar(amp, alphabet.phase(test_index)));
    let detector = Detector::new(alphabet.efficiency())?;
    Ok(optics::sample_click(displaced, &detector, rng))
}

/// Two-state USD between arbitrary phases `phi0`, `phi1`: the signal (mean
/// photon number `intensity`) is split in half and each half is tested
/// against one of the phases. Returns which of the two were eliminated.
pub fn pair_elimination_trial(
    intensity: f64,
    true_phase: f64,
    phi0: f64,
    phi1: f64,
    rng: &mut RandomStream,
) -> Result<(bool, bool)> {
    let signal = CoherentMode::from_polar(intensity.sqrt(), true_phase)?;
    let halves = optics::split_equal(signal, 2)?;
    let half_amp = (intensity / 2.0).sqrt();
    let mut test = |mode: CoherentMode, phi: f64| {
        let d = optics::displace(mode, -Complex64::from_polar(half_amp, phi));
        optics::sample_click(d, &Detector::ideal(), rng)
    };
    let a = test(halves[0], phi0);
    let b = test(halves[1], phi1);
    Ok((a, b))
}

/// A complete procedure together with the alphabet size it runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// N = 2 measurement in the {0, π} basis.
    Basis2,
    /// Split into N equal parts, test each phase once.
    Simple(usize),
    /// N = 3: eliminate one phase with weak copies, then two-state USD.
    Feedback3,
    /// N = 4: the 4-step basis-measurement receiver.
    Receiver4,
    /// General N: weak copies tested against every surviving phase.
    FeedbackN(usize),
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Basis2 => write!(f, "bs2"),
            Scheme::Simple(n) => write!(f, "bsn-simple:{n}"),
            Scheme::Feedback3 => write!(f, "bs3-feedback"),
            Scheme::Receiver4 => write!(f, "bs4-feedback"),
            Scheme::FeedbackN(n) => write!(f, "bsn-feedback:{n}"),
        }
    }
}

impl Scheme {
    /// Parses a tag; `n` fills in the alphabet size for the `bsn-*` tags.
    pub fn from_tag(tag: &str, n: usize) -> Result<Self> {
        let (head, arg) = match tag.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<usize>().map_err(|_| Error::UnknownScheme(tag.into()))?)),
            None => (tag, None),
        };
        let n = arg.unwrap_or(n);
        let scheme = match head {
            "bs2" => Scheme::Basis2,
            "bs3-simple" => Scheme::Simple(3),
            "bs3-feedback" => Scheme::Feedback3,
            "bs4-simple" => Scheme::Simple(4),
            "bs4-feedback" => Scheme::Receiver4,
            "bsn-simple" => Scheme::Simple(n),
            "bsn-feedback" => Scheme::FeedbackN(n),
            _ => return Err(Error::UnknownScheme(tag.into())),
        };
        if scheme.n() < 2 {
            return Err(Error::param(format!("scheme {tag} needs N ≥ 2")));
        }
        Ok(scheme)
    }

    pub fn n(&self) -> usize {
        match self {
            Scheme::Basis2 => 2,
            Scheme::Feedback3 => 3,
            Scheme::Receiver4 => 4,
            Scheme::Simple(n) | Scheme::FeedbackN(n) => *n,
        }
    }

    pub fn uses_copies(&self) -> bool {
        matches!(self, Scheme::Feedback3 | Scheme::Receiver4 | Scheme::FeedbackN(_))
    }

    /// Success probability in the `M → ∞` limit at effective mean photon number `mu`.
    pub fn analytic_limit(&self, mu: f64) -> Result<f64> {
        match self {
            Scheme::Basis2 => analytics::closed_form(ClosedForm::Bs2, mu),
            Scheme::Simple(n) => analytics::closed_form(ClosedForm::BsnSimple(*n), mu),
            Scheme::Feedback3 => analytics::closed_form(ClosedForm::Bs3Feedback, mu),
            Scheme::Receiver4 => analytics::closed_form(ClosedForm::Bs4Feedback, mu),
            Scheme::FeedbackN(n) => analytics::feedback_limit(*n, mu),
        }
    }

    /// Runs one trial.
    pub fn run(&self, truth: &TrueState, cfg: &FeedbackConfig, rng: &mut RandomStream) -> Result<StrategyOutcome> {
        if truth.alphabet().n() != self.n() {
            return Err(Error::param(format!(
                "scheme {self} needs N={}, alphabet has N={}",
                self.n(),
                truth.alphabet().n()
            )));
        }
        match self {
            Scheme::Basis2 => run_basis_measurement_2(truth, cfg.audit, rng),
            Scheme::Simple(_) => run_simple_scheme(truth, cfg.audit, rng),
            Scheme::Feedback3 => run_feedback_scheme_3(truth, cfg, rng),
            Scheme::Receiver4 => run_feedback_scheme_4(truth, cfg, rng),
            Scheme::FeedbackN(_) => run_feedback_scheme_n(truth, cfg, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn alphabet(n: usize, mu: f64) -> PhaseAlphabet {
        PhaseAlphabet::new(n, mu, 1.0).unwrap()
    }

    #[test]
    fn true_phase_never_clicks() {
        let a = alphabet(4, 3.0);
        let mut rng = RandomStream::new(1, 1);
        for t in 0..4 {
            assert!((0..10_000).all(|_| !eliminate_phase_trial(3.0, t, t, &a, &mut rng).unwrap()));
        }
    }

    #[test]
    fn opposite_phase_rate_n2() {
        let mu = 0.2;
        let a = alphabet(2, mu);
        let n = 200_000;
        let mut rng = RandomStream::new(8, 0);
        let hits = (0..n).filter(|_| eliminate_phase_trial(mu, 0, 1, &a, &mut rng).unwrap()).count();
        let p = -(-4.0 * mu).exp_m1();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn quarter_turn_rate_n4() {
        // Δφ = π/2, μ = 0.5: 1 − e^{−1}.
        let a = alphabet(4, 0.5);
        let n = 1_000_000;
        let mut rng = RandomStream::new(77, 3);
        let hits = (0..n).filter(|_| eliminate_phase_trial(0.5, 0, 1, &a, &mut rng).unwrap()).count();
        let p = 0.632_120_558_828_557_7;
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((hits as f64 / n as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn pair_elimination_matches_two_state_formula() {
        let (mu, phi0, phi1) = (0.9, 0.3, 1.9);
        let n = 200_000;
        let mut rng = RandomStream::new(5, 5);
        let mut wins = 0;
        for _ in 0..n {
            let (a, b) = pair_elimination_trial(mu, phi1, phi0, phi1, &mut rng).unwrap();
            assert!(!b);
            wins += a as u32;
        }
        let p = analytics::closed_form(ClosedForm::Bs2a { phi0, phi1 }, mu).unwrap();
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((wins as f64 / n as f64 - p).abs() < 4.0 * sigma);
        let _ = PI;
    }

    #[test]
    fn phase_set_ops() {
        let mut s = PhaseSet::empty();
        s.insert(3);
        s.insert(0);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 3]);
        assert_eq!(PhaseSet::all(4).difference(s).iter().collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(PhaseSet::all(64).len(), 64);
    }

    #[test]
    fn scheme_tags() {
        assert_eq!(Scheme::from_tag("bs4-feedback", 9).unwrap(), Scheme::Receiver4);
        assert_eq!(Scheme::from_tag("bsn-feedback", 5).unwrap(), Scheme::FeedbackN(5));
        assert_eq!(Scheme::from_tag("bsn-simple:6", 2).unwrap(), Scheme::Simple(6));
        assert!(matches!(Scheme::from_tag("bs9", 4), Err(Error::UnknownScheme(_))));
        assert!(Scheme::from_tag("bsn-simple", 1).is_err());
        for s in [Scheme::Basis2, Scheme::Simple(5), Scheme::Feedback3, Scheme::Receiver4, Scheme::FeedbackN(6)] {
            assert_eq!(Scheme::from_tag(&s.to_string(), 0).unwrap(), s);
        }
    }

    #[test]
    fn scheme_alphabet_mismatch() {
        let t = TrueState::new(0, alphabet(3, 1.0)).unwrap();
        let mut rng = RandomStream::new(0, 0);
        assert!(Scheme::Receiver4.run(&t, &FeedbackConfig::default(), &mut rng).is_err());
        assert!(TrueState::new(3, alphabet(3, 1.0)).is_err());
        let cfg = FeedbackConfig { copies: 2, ..FeedbackConfig::default() };
        assert!(Scheme::Feedback3.run(&t, &cfg, &mut rng).is_err());
    }
}
