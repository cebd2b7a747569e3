use super::lab::Lab;
use super::{PhaseSet, StrategyOutcome, TrueState};
use crate::error::{Error, Result};
use crate::random::RandomStream;

/// Split into `N` equal parts and test each phase once. Conclusive iff all
/// `N − 1` wrong phases click.
pub fn run_simple_scheme(truth: &TrueState, audit: bool, rng: &mut RandomStream) -> Result<StrategyOutcome> {
    let n = truth.alphabet().n();
    let mut lab = Lab::new(truth, n as u64, audit, rng)?;
    lab.elimination_stage(PhaseSet::all(n));
    Ok(lab.finish(None))
}

/// `N = 2`: the whole signal goes through one basis measurement against the
/// reference `iα`; whichever output clicks rules out its phase.
pub fn run_basis_measurement_2(truth: &TrueState, audit: bool, rng: &mut RandomStream) -> Result<StrategyOutcome> {
    if truth.alphabet().n() != 2 {
        return Err(Error::param("basis measurement needs N = 2"));
    }
    let mut lab = Lab::new(truth, 1, audit, rng)?;
    lab.basis_stage(0);
    Ok(lab.finish(Some(0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics::{closed_form, ClosedForm, PhaseAlphabet};

    fn rate(n: usize, mu: f64, trials: u64, seed: u64) -> f64 {
        let a = PhaseAlphabet::new(n, mu, 1.0).unwrap();
        let mut wins = 0;
        for i in 0..trials {
            let mut rng = RandomStream::new(seed, i);
            let t = TrueState::new(rng.index(n), a).unwrap();
            let out = run_simple_scheme(&t, false, &mut rng).unwrap();
            assert!(out.is_sound(t.phase_index()));
            wins += out.is_conclusive() as u64;
        }
        wins as f64 / trials as f64
    }

    #[test]
    fn simple_n3_and_n4_rates() {
        let trials = 200_000;
        for (n, scheme) in [(3, ClosedForm::Bs3Simple), (4, ClosedForm::Bs4Simple)] {
            let p = closed_form(scheme, 1.0).unwrap();
            let got = rate(n, 1.0, trials, 10 + n as u64);
            let sigma = (p * (1.0 - p) / trials as f64).sqrt();
            assert!((got - p).abs() < 4.0 * sigma, "N={n}: {got} vs {p}");
        }
    }

    #[test]
    fn no_light_no_answer() {
        assert_eq!(rate(3, 0.0, 1000, 1), 0.0);
    }

    #[test]
    fn basis_measurement_rate() {
        let mu = 0.35;
        let a = PhaseAlphabet::new(2, mu, 1.0).unwrap();
        let trials = 200_000;
        let mut wins = 0;
        for i in 0..trials {
            let mut rng = RandomStream::new(4, i);
            let t = TrueState::new((i % 2) as usize, a).unwrap();
            let out = run_basis_measurement_2(&t, false, &mut rng).unwrap();
            assert!(out.is_sound(t.phase_index()));
            assert!(out.stage_reached <= 1);
            wins += out.is_conclusive() as u64;
        }
        let p = -(-2.0 * mu).exp_m1();
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((wins as f64 / trials as f64 - p).abs() < 4.0 * sigma);
    }

    #[test]
    fn light_accounting() {
        let a = PhaseAlphabet::new(5, 1.7, 1.0).unwrap();
        let mut rng = RandomStream::new(0, 0);
        let t = TrueState::new(2, a).unwrap();
        let out = run_simple_scheme(&t, true, &mut rng).unwrap();
        assert!((out.light_used + out.light_discarded - 1.7).abs() < 1e-12);
        assert_eq!(out.copies_consumed, 5);
        assert_eq!(out.click_log.unwrap().len(), 5);
    }
}
