use num_complex::Complex64;

use super::{ClickEvent, PhaseSet, StrategyOutcome, TrueState};
use crate::analytics::PhaseAlphabet;
use crate::error::Result;
use crate::optics::{self, Beamsplitter, CoherentMode, Detector};
use crate::random::RandomStream;

/// Holds the received signal, divided into `copies` equal portions, and runs
/// detection setups on it.
pub(crate) struct Lab<'r> {
    signal: CoherentMode,
    alphabet: PhaseAlphabet,
    /// `√(ημ)`, known to the receiver.
    alpha: f64,
    copies: u64,
    used: u64,
    light_used: f64,
    round: u64,
    rng: &'r mut RandomStream,
    log: Option<Vec<ClickEvent>>,
    eliminated: PhaseSet,
    clicks: u32,
}

/// A detection setup prepared for repeated use on equal copies.
struct Probe {
    tested: usize,
    click: f64,
    light: f64,
}

impl<'r> Lab<'r> {
    pub(crate) fn new(truth: &TrueState, copies: u64, audit: bool, rng: &'r mut RandomStream) -> Result<Self> {
        let alphabet = *truth.alphabet();
        let alpha = alphabet.effective_mean_photons().sqrt();
        let signal = CoherentMode::from_polar(alpha, alphabet.phase(truth.phase_index()))?;
        Ok(Self {
            signal,
            alphabet,
            alpha,
            copies,
            used: 0,
            light_used: 0.0,
            round: 0,
            rng,
            log: audit.then(Vec::new),
            eliminated: PhaseSet::empty(),
            clicks: 0,
        })
    }

    pub(crate) fn n(&self) -> usize {
        self.alphabet.n()
    }

    pub(crate) fn remaining(&self) -> u64 {
        self.copies - self.used
    }

    pub(crate) fn eliminated(&self) -> PhaseSet {
        self.eliminated
    }

    pub(crate) fn rng(&mut self) -> &mut RandomStream {
        self.rng
    }

    /// Portion of the signal worth `share` copies.
    fn portion(&self, share: f64) -> CoherentMode {
        let f = (share / self.copies as f64).sqrt();
        CoherentMode::new(self.signal.amplitude() * f).expect("finite signal")
    }

    fn reference(&self, share: f64, phase_index: usize) -> Complex64 {
        let f = (share / self.copies as f64).sqrt();
        Complex64::from_polar(self.alpha * f, self.alphabet.phase(phase_index))
    }

    /// Elimination setup for `tested` on a portion worth `share` copies.
    fn elimination_probe(&self, tested: usize, share: f64) -> Probe {
        let copy = self.portion(share);
        let displaced = optics::displace(copy, -self.reference(share, tested));
        Probe { tested, click: optics::click_probability(&displaced, &Detector::ideal()), light: copy.mean_photons() }
    }

    /// Basis measurement on one copy: interfere with `i·α_copy·e^{iφ_b}` on a
    /// balanced splitter. Output 1 carries `e^{iφ} − e^{iφ_b}` and tests `b`;
    /// output 2 carries `e^{iφ} + e^{iφ_b}` and tests `b + N/2`.
    fn basis_probes(&self, basis: usize) -> [Probe; 2] {
        let copy = self.portion(1.0);
        let reference = CoherentMode::new(Complex64::i() * self.reference(1.0, basis)).expect("finite reference");
        let (o1, o2) = optics::beamsplit(copy, reference, &Beamsplitter::balanced());
        let partner = (basis + self.n() / 2) % self.n();
        let ideal = Detector::ideal();
        [
            Probe { tested: basis, click: optics::click_probability(&o1, &ideal), light: copy.mean_photons() },
            Probe { tested: partner, click: optics::click_probability(&o2, &ideal), light: 0.0 },
        ]
    }

    fn fire(&mut self, probe: &Probe) -> bool {
        self.light_used += probe.light;
        let clicked = self.rng.bernoulli(probe.click);
        if let Some(log) = self.log.as_mut() {
            log.push(ClickEvent { round: self.round, tested_phase: probe.tested, clicked });
        }
        if clicked {
            self.eliminated.insert(probe.tested);
            self.clicks += 1;
        }
        clicked
    }

    /// Rounds of one copy per candidate until some detector clicks. Returns
    /// the phases eliminated in the clicking round, or `None` once fewer
    /// copies remain than candidates.
    pub(crate) fn elimination_stage(&mut self, candidates: PhaseSet) -> Option<PhaseSet> {
        let probes: Vec<Probe> = candidates.iter().map(|k| self.elimination_probe(k, 1.0)).collect();
        let per_round = probes.len() as u64;
        while self.remaining() >= per_round {
            self.used += per_round;
            let mut hit = PhaseSet::empty();
            for p in &probes {
                if self.fire(p) {
                    hit.insert(p.tested);
                }
            }
            self.round += 1;
            if !hit.is_empty() {
                return Some(hit);
            }
        }
        None
    }

    /// Repeated basis measurements, one copy each, until a click.
    pub(crate) fn basis_stage(&mut self, basis: usize) -> Option<PhaseSet> {
        let probes = self.basis_probes(basis);
        while self.remaining() >= 1 {
            self.used += 1;
            let mut hit = PhaseSet::empty();
            for p in &probes {
                if self.fire(p) {
                    hit.insert(p.tested);
                }
            }
            self.round += 1;
            if !hit.is_empty() {
                return Some(hit);
            }
        }
        None
    }

    /// All remaining light split equally between elimination setups for
    /// `tests`, measured once.
    pub(crate) fn final_split(&mut self, tests: PhaseSet) -> PhaseSet {
        let left = self.remaining();
        if left == 0 || tests.is_empty() {
            return PhaseSet::empty();
        }
        let share = left as f64 / tests.len() as f64;
        let probes: Vec<Probe> = tests.iter().map(|k| self.elimination_probe(k, share)).collect();
        self.used = self.copies;
        let mut hit = PhaseSet::empty();
        for p in &probes {
            if self.fire(p) {
                hit.insert(p.tested);
            }
        }
        self.round += 1;
        hit
    }

    pub(crate) fn finish(self, first_basis: Option<usize>) -> StrategyOutcome {
        let n = self.n();
        let conclusive = (self.eliminated.len() == n - 1)
            .then(|| PhaseSet::all(n).difference(self.eliminated).iter().next())
            .flatten();
        let unused = self.remaining() as f64 / self.copies as f64;
        StrategyOutcome {
            eliminated: self.eliminated,
            conclusive,
            stage_reached: self.clicks,
            copies_consumed: self.used,
            light_used: self.light_used,
            light_discarded: self.signal.mean_photons() * unused,
            first_basis,
            click_log: self.log,
        }
    }
}
