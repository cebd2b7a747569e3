use super::lab::Lab;
use super::{FeedbackConfig, PhaseSet, StrategyOutcome, TrueState};
use crate::error::{Error, Result};
use crate::random::RandomStream;

/// General-`N` feedback scheme. Stage `m` tests each of the `N − m + 1`
/// surviving phases with one copy per round; every click removes the clicked
/// phase and advances the stage. Stops when one phase survives or when the
/// copies cannot fund another round.
pub fn run_feedback_scheme_n(
    truth: &TrueState,
    cfg: &FeedbackConfig,
    rng: &mut RandomStream,
) -> Result<StrategyOutcome> {
    let n = truth.alphabet().n();
    cfg.check(n)?;
    let mut lab = Lab::new(truth, cfg.copies, cfg.audit, rng)?;
    loop {
        let candidates = PhaseSet::all(n).difference(lab.eliminated());
        if candidates.len() <= 1 || lab.elimination_stage(candidates).is_none() {
            break;
        }
    }
    Ok(lab.finish(None))
}

/// `N = 3` feedback scheme: rounds of three copies until one wrong phase
/// clicks, then optimal two-state USD (remaining light split in half between
/// the two survivors' elimination setups).
pub fn run_feedback_scheme_3(
    truth: &TrueState,
    cfg: &FeedbackConfig,
    rng: &mut RandomStream,
) -> Result<StrategyOutcome> {
    if truth.alphabet().n() != 3 {
        return Err(Error::param("the N = 3 feedback scheme needs a 3-phase alphabet"));
    }
    cfg.check(3)?;
    let mut lab = Lab::new(truth, cfg.copies, cfg.audit, rng)?;
    if lab.elimination_stage(PhaseSet::all(3)).is_some() && lab.eliminated().len() == 1 {
        let survivors = PhaseSet::all(3).difference(lab.eliminated());
        lab.final_split(survivors);
    }
    Ok(lab.finish(None))
}
