use std::thread;
use std::time::Instant;

use log::warn;

use super::{
    argmin_evaluated, filtered_size, generate_candidates, FilterPolicy, LossSummary, Mode,
    ProbeReport, SearchConfig, StepRecord,
};
use crate::correlation::agreement;
use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};
use crate::scoring::{LossBatch, ScorerHandle};
use crate::tokens::{AttackInstance, TokenId, TokenSeq};

/// Agreement used when the probe losses are degenerate (all tied, or fewer
/// than two probes).
pub const FALLBACK_ALPHA: f64 = 0.5;

/// One probe-sampling iteration.
///
/// 1. Draft losses on all candidates and target losses on `k` uniformly
///    sampled probes (concurrently when `cfg.parallel`).
/// 2. Agreement between the probes' draft and target losses; the draft
///    values are read from the full draft batch.
/// 3. The `clamp(floor((1 - alpha) B / R), 1, B)` candidates with the
///    smallest draft loss form the filtered set (ties to the lower index).
/// 4. Target losses on the filtered set, skipping candidates already scored
///    as probes; the result is the argmin over probes and filtered set.
pub fn probe_sampling_step(
    target: &ScorerHandle,
    draft: &ScorerHandle,
    inst: &AttackInstance,
    cfg: &SearchConfig,
    iteration: usize,
    iter_rng: &SeededRng,
) -> Result<(AttackInstance, StepRecord)> {
    let start = Instant::now();
    let batch = generate_candidates(target, inst, cfg, &mut iter_rng.derive(stream::CANDIDATES))?;
    let b = batch.len();
    let k = cfg.probe_size.min(b);
    let probe_indices = iter_rng.derive(stream::PROBE).sample_distinct(b, k);
    let probe_suffixes: Vec<&[TokenId]> = probe_indices
        .iter()
        .map(|&i| batch.candidates[i].suffix.as_slice())
        .collect();

    let (draft_batch, probe_batch) = evaluate_parallel_region(
        target,
        draft,
        inst,
        &batch.candidates,
        &probe_suffixes,
        cfg.parallel,
    )?;

    let (alpha, alpha_fallback) = match cfg.filter {
        FilterPolicy::Fixed(a) => (a, false),
        FilterPolicy::Adaptive => {
            let probe_draft: Vec<f64> =
                probe_indices.iter().map(|&i| draft_batch.losses[i]).collect();
            match agreement(cfg.correlation, &probe_draft, &probe_batch.losses) {
                Ok(score) => (score.value, false),
                Err(e @ (Error::Degenerate(_) | Error::InsufficientSample(_))) => {
                    warn!("iteration {iteration}: {e}; agreement falls back to {FALLBACK_ALPHA}");
                    (FALLBACK_ALPHA, true)
                }
                Err(e) => return Err(e),
            }
        }
    };

    let n_filtered = filtered_size(alpha, b, cfg.reduction);
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by(|&i, &j| {
        draft_batch.losses[i]
            .total_cmp(&draft_batch.losses[j])
            .then(i.cmp(&j))
    });
    order.truncate(n_filtered);
    let filtered_indices = order;

    let mut target_losses: Vec<Option<f64>> = vec![None; b];
    for (&i, &l) in probe_indices.iter().zip(&probe_batch.losses) {
        target_losses[i] = Some(l);
    }
    let fresh: Vec<usize> = filtered_indices
        .iter()
        .copied()
        .filter(|&i| target_losses[i].is_none())
        .collect();
    let overlap = filtered_indices.len() - fresh.len();
    let mut target_flops = probe_batch.flops;
    if !fresh.is_empty() {
        let suffixes: Vec<&[TokenId]> = fresh
            .iter()
            .map(|&i| batch.candidates[i].suffix.as_slice())
            .collect();
        let filtered_batch = target.loss_batch(inst, &suffixes)?;
        target_flops += filtered_batch.flops;
        for (&i, &l) in fresh.iter().zip(&filtered_batch.losses) {
            target_losses[i] = Some(l);
        }
    }

    let (best_index, best_loss) = argmin_evaluated(&target_losses).expect("probe set nonempty");
    let suffix = batch.candidates[best_index].suffix.clone();
    let next = inst.with_suffix(TokenSeq::new(suffix.clone(), inst.vocab().clone())?)?;
    let record = StepRecord {
        iteration,
        mode: Mode::Ps,
        batch_size: b,
        best_index,
        best_loss,
        target_evals: k + fresh.len(),
        draft_evals: b,
        target_flops,
        draft_flops: draft_batch.flops,
        gradient_flops: target.gradient_flops(inst),
        probe: Some(ProbeReport {
            probe_indices,
            alpha,
            alpha_fallback,
            filtered_size: n_filtered,
            filtered_indices,
            overlap,
            draft_losses: LossSummary::of(&draft_batch.losses),
        }),
        temperature: None,
        accepted: true,
        suffix,
        current_loss: best_loss,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    Ok((next, record))
}

/// Draft losses on the whole batch and target losses on the probes. The two
/// evaluations share no mutable state, so the result does not depend on
/// whether they overlap in time.
fn evaluate_parallel_region<C: AsRef<[TokenId]> + Sync>(
    target: &ScorerHandle,
    draft: &ScorerHandle,
    inst: &AttackInstance,
    candidates: &[C],
    probes: &[&[TokenId]],
    parallel: bool,
) -> Result<(LossBatch, LossBatch)> {
    if !parallel {
        let d = draft.loss_batch(inst, candidates)?;
        let t = target.loss_batch(inst, probes)?;
        return Ok((d, t));
    }
    thread::scope(|s| {
        let draft_job = s.spawn(|| draft.loss_batch(inst, candidates));
        let t = target.loss_batch(inst, probes);
        let d = draft_job
            .join()
            .unwrap_or_else(|p| std::panic::resume_unwind(p));
        Ok((d?, t?))
    })
}
