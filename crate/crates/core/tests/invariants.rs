use coherent_usd::analytics::{closed_form, optimal_usd_prob, ClosedForm, PhaseAlphabet};
use coherent_usd::montecarlo::{RunSpec, Tally};
use coherent_usd::random::RandomStream;
use coherent_usd::strategies::{FeedbackConfig, Scheme, TrueState};
use proptest::prelude::*;

fn scheme_strategy() -> impl Strategy<Value = Scheme> {
    prop_oneof![
        Just(Scheme::Basis2),
        (2usize..=7).prop_map(Scheme::Simple),
        Just(Scheme::Feedback3),
        Just(Scheme::Receiver4),
        (2usize..=6).prop_map(Scheme::FeedbackN),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_outcome_is_sound(scheme in scheme_strategy(), mu in 0.0f64..6.0, copies in 8u64..300, seed: u64) {
        let alphabet = PhaseAlphabet::new(scheme.n(), mu, 1.0).unwrap();
        let cfg = FeedbackConfig::with_copies(copies);
        for i in 0..50 {
            let mut rng = RandomStream::new(seed, i);
            let truth = TrueState::new(rng.index(scheme.n()), alphabet).unwrap();
            let out = scheme.run(&truth, &cfg, &mut rng).unwrap();
            prop_assert!(out.is_sound(truth.phase_index()));
            prop_assert!(out.copies_consumed <= copies.max(scheme.n() as u64));
            prop_assert!(out.light_used + out.light_discarded <= mu + 1e-9);
        }
    }

    #[test]
    fn efficiency_folds_into_mean_photons(scheme in scheme_strategy(), mu in 0.0f64..4.0, seed: u64) {
        let lossy = RunSpec { efficiency: 0.25, ..RunSpec::new(scheme, mu, 64, 200, seed) };
        let ideal = RunSpec::new(scheme, 0.25 * mu, 64, 200, seed);
        prop_assert_eq!(lossy.tally().unwrap(), ideal.tally().unwrap());
    }

    #[test]
    fn tally_merge_is_order_free(a in 0u64..1000, b in 0u64..1000, c in 0u64..1000) {
        let t = |k: u64| {
            let mut t = Tally::new();
            t.trials = k + 3;
            t.conclusive = k;
            t.stage_counts[(k % 4) as usize] = k + 3;
            t
        };
        let left = t(a).merge(t(b)).merge(t(c));
        let right = t(c).merge(t(b).merge(t(a)));
        prop_assert_eq!(left.estimate(), right.estimate());
        prop_assert_eq!(left, right);
    }

    #[test]
    fn analytic_curves_below_optimum(mu in 0.0f64..8.0) {
        for (s, n) in [
            (ClosedForm::Bs3Simple, 3),
            (ClosedForm::Bs3Feedback, 3),
            (ClosedForm::Bs4Simple, 4),
            (ClosedForm::Bs4Feedback, 4),
            (ClosedForm::Pol4, 4),
            (ClosedForm::BsnSimple(5), 5),
        ] {
            prop_assert!(closed_form(s, mu).unwrap() <= optimal_usd_prob(n, mu).unwrap() + 1e-12);
        }
    }
}

#[test]
fn runs_are_reproducible_and_thread_independent() {
    let spec = RunSpec::new(Scheme::Receiver4, 0.9, 500, 20_000, 99);
    let a = spec.tally().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = pool.install(|| spec.tally().unwrap());
    assert_eq!(a, b);
}

#[test]
fn bias_shrinks_with_more_copies() {
    // N = 4 receiver at μ = 1: finite-M deficit is O(1/M).
    let target = closed_form(ClosedForm::Bs4Feedback, 1.0).unwrap();
    let trials = 400_000;
    let coarse = RunSpec::new(Scheme::Receiver4, 1.0, 8, trials, 3).estimate().unwrap();
    let fine = RunSpec::new(Scheme::Receiver4, 1.0, 1000, trials, 4).estimate().unwrap();
    let band = 4.0 * (coarse.stderr.powi(2) + fine.stderr.powi(2)).sqrt();
    assert!((target - coarse.p_hat) > (target - fine.p_hat).abs() - band, "{coarse:?} {fine:?}");
    assert!((fine.p_hat - target).abs() <= 4.0 * fine.stderr + 5e-3);
}
