use super::lab::Lab;
use super::{BasisRule, FeedbackConfig, PhaseSet, StrategyOutcome, TrueState};
use crate::error::{Error, Result};
use crate::random::RandomStream;

/// Phase indices `{b, b + 2}` of basis `b` in the 4-phase alphabet.
pub fn basis_phases(basis: usize) -> PhaseSet {
    PhaseSet::from_indices([basis % 2, basis % 2 + 2])
}

/// The 4-step receiver for `N = 4`.
///
/// 1. The signal is split into `M` copies.
/// 2. Basis measurements in a first basis, one copy at a time, until a click.
/// 3. Basis measurements in the conjugate basis on the remaining copies until
///    a click.
/// 4. All remaining light is split equally between elimination setups for the
///    two surviving phases.
///
/// A round in which both outputs of a basis measurement click eliminates the
/// whole basis; after step 2 this jumps to step 4 on the conjugate pair.
pub fn run_feedback_scheme_4(
    truth: &TrueState,
    cfg: &FeedbackConfig,
    rng: &mut RandomStream,
) -> Result<StrategyOutcome> {
    if truth.alphabet().n() != 4 {
        return Err(Error::param("the 4-step receiver needs a 4-phase alphabet"));
    }
    cfg.check(4)?;
    let mut lab = Lab::new(truth, cfg.copies, cfg.audit, rng)?;
    let first = match cfg.basis_rule {
        BasisRule::Random => lab.rng().index(2),
        BasisRule::Fixed(b) => b,
    };
    let second = 1 - first;

    let Some(hit) = lab.basis_stage(first) else {
        return Ok(lab.finish(Some(first)));
    };
    if hit.len() == 1 && lab.basis_stage(second).is_none() {
        return Ok(lab.finish(Some(first)));
    }
    let survivors = PhaseSet::all(4).difference(lab.eliminated());
    if survivors.len() == 2 {
        lab.final_split(survivors);
    }
    Ok(lab.finish(Some(first)))
}
