use std::fmt;

use super::{anneal_step, gcg_step, probe_sampling_step, Mode, SearchConfig, StepRecord};
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scoring::ScorerHandle;
use crate::tokens::{AttackInstance, TokenId};

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub final_instance: AttackInstance,
    pub final_loss: f64,
    /// Lowest target loss seen, including the initial suffix.
    pub best_suffix: Vec<TokenId>,
    pub best_loss: f64,
    pub initial_loss: f64,
    /// Target FLOPs spent scoring the initial suffix.
    pub initial_flops: f64,
    pub records: Vec<StepRecord>,
    /// Iteration after which the stop criterion fired.
    pub stopped_at: Option<usize>,
}

/// A failed run. `records` holds every iteration completed before the error.
#[derive(Debug, Clone)]
pub struct RunError {
    pub error: Error,
    pub records: Vec<StepRecord>,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "run failed after {} iterations: {}",
            self.records.len(),
            self.error
        )
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        Self {
            error,
            records: Vec::new(),
        }
    }
}

/// Outer loop. `stop` sees the instance after each iteration; when it
/// returns true the run ends early and records the iteration.
pub fn run(
    mode: Mode,
    target: &ScorerHandle,
    draft: Option<&ScorerHandle>,
    inst: &AttackInstance,
    cfg: &SearchConfig,
    mut stop: impl FnMut(&AttackInstance) -> bool,
) -> std::result::Result<RunOutcome, RunError> {
    cfg.validate(target.vocab_size())?;
    if target.vocab_size() != inst.vocab().size() {
        return Err(Error::Config(format!(
            "target scorer vocabulary {} differs from instance vocabulary {}",
            target.vocab_size(),
            inst.vocab().size()
        ))
        .into());
    }
    if mode.uses_draft() {
        let d = draft.ok_or_else(|| Error::Config(format!("mode {mode} needs a draft scorer")))?;
        if d.vocab_size() != target.vocab_size() {
            return Err(Error::Config(format!(
                "draft vocabulary {} differs from target vocabulary {}",
                d.vocab_size(),
                target.vocab_size()
            ))
            .into());
        }
    }

    let initial = target.loss_batch(inst, &[inst.suffix().tokens()])?;
    let initial_loss = initial.losses[0];
    let root = SeededRng::new(cfg.seed);

    let mut current = inst.clone();
    let mut current_loss = initial_loss;
    let mut best_suffix = inst.suffix().tokens().to_vec();
    let mut best_loss = initial_loss;
    let mut records = Vec::with_capacity(cfg.steps);
    let mut stopped_at = None;

    for t in 0..cfg.steps {
        let iter_rng = root.derive(t as u64);
        let step: Result<(AttackInstance, StepRecord)> = match mode {
            Mode::Gcg => gcg_step(target, &current, cfg, t, &iter_rng),
            Mode::Ps => probe_sampling_step(
                target,
                draft.expect("checked above"),
                &current,
                cfg,
                t,
                &iter_rng,
            ),
            Mode::GcgAnneal | Mode::PsAnneal => {
                anneal_step(mode, target, draft, &current, current_loss, cfg, t, &iter_rng)
            }
        };
        let (next, record) = match step {
            Ok(s) => s,
            Err(error) => return Err(RunError { error, records }),
        };
        current = next;
        current_loss = record.current_loss;
        if current_loss < best_loss {
            best_loss = current_loss;
            best_suffix = current.suffix().tokens().to_vec();
        }
        records.push(record);
        if stop(&current) {
            stopped_at = Some(t);
            break;
        }
    }

    Ok(RunOutcome {
        final_instance: current,
        final_loss: current_loss,
        best_suffix,
        best_loss,
        initial_loss,
        initial_flops: initial.flops,
        records,
        stopped_at,
    })
}
