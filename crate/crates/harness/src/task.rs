//! Builds the attack instance and scorers a config describes.

use std::sync::Arc;

use probe_core::rng::SeededRng;
use probe_core::scoring::{BridgeScorer, ScorerHandle, ToyScorer};
use probe_core::tokens::{make_instance, AttackInstance, TokenId, TokenSeq, Vocabulary};
use probe_core::toylm::{ToyLmDims, ToyLmParams};

use crate::config::{DraftModel, ExperimentConfig, ModelDims, ScorerSpec};
use crate::error::HarnessError;

/// Key of the stream all task construction draws from, under the run seed.
const TASK_STREAM: u64 = 0x7A5C_0000_0000_0001;

mod draw {
    pub const TARGET_PARAMS: u64 = 1;
    pub const DRAFT_PARAMS: u64 = 2;
    pub const PROMPT: u64 = 3;
    pub const HIDDEN_SUFFIX: u64 = 4;
    pub const SUFFIX_INIT: u64 = 5;
}

pub struct Task {
    pub instance: AttackInstance,
    pub target: ScorerHandle,
    pub draft: Option<ScorerHandle>,
    /// The toy target, when there is one; success judging decodes with it.
    pub target_params: Option<Arc<ToyLmParams>>,
    /// Suffix the generated target continuation was decoded from.
    pub planted_suffix: Option<Vec<TokenId>>,
}

fn dims(vocab_size: usize, m: &ModelDims) -> ToyLmDims {
    ToyLmDims {
        vocab_size,
        embed_dim: m.embed_dim,
        hidden_dim: m.hidden_dim,
        context: m.context,
        decay: m.decay,
        init_scale: m.init_scale,
    }
}

pub fn build_task(cfg: &ExperimentConfig) -> Result<Task, HarnessError> {
    cfg.validate()?;
    let t = &cfg.task;
    let rng = SeededRng::new(cfg.seed).derive(TASK_STREAM);
    let vocab = match &t.display {
        Some(table) => Vocabulary::with_display(table.clone())?,
        None => Vocabulary::new(t.vocab_size)?,
    };

    let target_params = match (&cfg.scorer, &t.target_model_file, &t.target_model) {
        (ScorerSpec::Bridge(_), ..) => None,
        (ScorerSpec::Toy, Some(path), _) => Some(Arc::new(ToyLmParams::load_json(path)?)),
        (ScorerSpec::Toy, None, Some(m)) => Some(Arc::new(ToyLmParams::random(
            dims(t.vocab_size, m),
            &mut rng.derive(draw::TARGET_PARAMS),
        )?)),
        (ScorerSpec::Toy, None, None) => unreachable!("rejected by validate"),
    };
    if let Some(p) = &target_params {
        if p.vocab_size() != t.vocab_size {
            return Err(HarnessError::Config(format!(
                "target model vocabulary {} differs from task.vocab_size {}",
                p.vocab_size(),
                t.vocab_size
            )));
        }
    }

    let target = match &cfg.scorer {
        ScorerSpec::Toy => ScorerHandle::new(ToyScorer::new(
            "target",
            Arc::clone(target_params.as_ref().expect("toy target")),
        )),
        ScorerSpec::Bridge(cmd) => ScorerHandle::new(BridgeScorer::spawn("target", cmd)?),
    };

    let draft = if cfg.mode.uses_draft() {
        Some(match &cfg.draft_scorer {
            ScorerSpec::Bridge(cmd) => ScorerHandle::new(BridgeScorer::spawn("draft", cmd)?),
            ScorerSpec::Toy => {
                let params = match &t.draft_model {
                    DraftModel::Same => Arc::clone(target_params.as_ref().ok_or_else(|| {
                        HarnessError::Config("draft_model `same` needs a toy target".into())
                    })?),
                    DraftModel::Truncated {
                        embed_dim,
                        hidden_dim,
                    } => Arc::new(
                        target_params
                            .as_ref()
                            .ok_or_else(|| {
                                HarnessError::Config(
                                    "draft_model `truncated` needs a toy target".into(),
                                )
                            })?
                            .truncated(*embed_dim, *hidden_dim)?,
                    ),
                    DraftModel::Independent(m) => Arc::new(ToyLmParams::random(
                        dims(t.vocab_size, m),
                        &mut rng.derive(draw::DRAFT_PARAMS),
                    )?),
                    DraftModel::File { path } => Arc::new(ToyLmParams::load_json(path)?),
                };
                ScorerHandle::new(ToyScorer::new("draft", params).without_gradient())
            }
        })
    } else {
        None
    };

    let prompt_ids: Vec<TokenId> = match &t.prompt {
        Some(ids) => ids.clone(),
        None => {
            let mut r = rng.derive(draw::PROMPT);
            (0..t.prompt_len)
                .map(|_| r.below(t.vocab_size) as TokenId)
                .collect()
        }
    };
    let prompt = TokenSeq::new(prompt_ids, Arc::clone(&vocab))?;

    let (target_ids, planted_suffix) = match (&t.target, &target_params) {
        (Some(ids), _) => (ids.clone(), None),
        (None, Some(params)) => {
            let mut r = rng.derive(draw::HIDDEN_SUFFIX);
            let planted: Vec<TokenId> = (0..t.suffix_len)
                .map(|_| r.below(t.vocab_size) as TokenId)
                .collect();
            let mut context = prompt.tokens().to_vec();
            context.extend_from_slice(&planted);
            let decoded = params.greedy_decode(
                &TokenSeq::new(context.clone(), Arc::clone(&vocab))?,
                t.target_len,
            )?;
            (decoded.tokens()[context.len()..].to_vec(), Some(planted))
        }
        (None, None) => unreachable!("rejected by validate"),
    };
    let target_seq = TokenSeq::new(target_ids, Arc::clone(&vocab))?;

    let instance = make_instance(
        prompt,
        t.suffix_len,
        target_seq,
        t.suffix_init,
        &mut rng.derive(draw::SUFFIX_INIT),
    )?;

    if target.vocab_size() != t.vocab_size {
        return Err(HarnessError::Config(format!(
            "target scorer reports vocabulary {}, task.vocab_size is {}",
            target.vocab_size(),
            t.vocab_size
        )));
    }

    Ok(Task {
        instance,
        target,
        draft,
        target_params,
        planted_suffix,
    })
}
