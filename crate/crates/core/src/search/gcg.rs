use std::time::Instant;

use super::{argmin_evaluated, generate_candidates, Mode, SearchConfig, StepRecord};
use crate::error::Result;
use crate::rng::{stream, SeededRng};
use crate::scoring::ScorerHandle;
use crate::tokens::{AttackInstance, TokenSeq};

/// Score every candidate on the target and keep the best (lowest index on
/// ties). The new suffix replaces the old one unconditionally.
pub fn gcg_step(
    target: &ScorerHandle,
    inst: &AttackInstance,
    cfg: &SearchConfig,
    iteration: usize,
    iter_rng: &SeededRng,
) -> Result<(AttackInstance, StepRecord)> {
    let start = Instant::now();
    let batch = generate_candidates(target, inst, cfg, &mut iter_rng.derive(stream::CANDIDATES))?;
    let scored = target.loss_batch(inst, &batch.candidates)?;
    let losses: Vec<Option<f64>> = scored.losses.iter().copied().map(Some).collect();
    let (best_index, best_loss) = argmin_evaluated(&losses).expect("nonempty batch");

    let suffix = batch.candidates[best_index].suffix.clone();
    let next = inst.with_suffix(TokenSeq::new(suffix.clone(), inst.vocab().clone())?)?;
    let record = StepRecord {
        iteration,
        mode: Mode::Gcg,
        batch_size: batch.len(),
        best_index,
        best_loss,
        target_evals: batch.len(),
        draft_evals: 0,
        target_flops: scored.flops,
        draft_flops: 0.0,
        gradient_flops: target.gradient_flops(inst),
        probe: None,
        temperature: None,
        accepted: true,
        suffix,
        current_loss: best_loss,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((next, record))
}
