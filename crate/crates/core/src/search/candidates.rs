use serde::{Deserialize, Serialize};

use super::SearchConfig;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::scoring::ScorerHandle;
use crate::tokens::{AttackInstance, TokenId};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub suffix: Vec<TokenId>,
    pub position: usize,
    pub token: TokenId,
}

impl AsRef<[TokenId]> for Candidate {
    fn as_ref(&self) -> &[TokenId] {
        &self.suffix
    }
}

/// `B` single-token substitutions of a base suffix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateBatch {
    pub base: Vec<TokenId>,
    pub candidates: Vec<Candidate>,
    pub topk: Vec<Vec<TokenId>>,
    /// Seed of the stream the batch was drawn from.
    pub stream_seed: u64,
}

impl CandidateBatch {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn suffixes(&self) -> impl Iterator<Item = &[TokenId]> {
        self.candidates.iter().map(|c| c.suffix.as_slice())
    }
}

/// One gradient query, then `cfg.batch_size` candidates, each changing a
/// uniformly chosen position to a uniformly chosen member of that position's
/// top-K list. Per candidate the position is drawn before the token.
pub fn generate_candidates(
    scorer: &ScorerHandle,
    inst: &AttackInstance,
    cfg: &SearchConfig,
    rng: &mut SeededRng,
) -> Result<CandidateBatch> {
    if !scorer.supports_gradient() {
        return Err(Error::NoGradient {
            scorer: scorer.label().to_string(),
        });
    }
    let topk = scorer.gradient_topk(inst, cfg.top_k)?;
    let base = inst.suffix().tokens().to_vec();
    let stream_seed = rng.seed();
    let candidates = (0..cfg.batch_size)
        .map(|_| {
            let position = rng.below(base.len());
            let token = topk[position][rng.below(cfg.top_k)];
            let mut suffix = base.clone();
            suffix[position] = token;
            Candidate {
                suffix,
                position,
                token,
            }
        })
        .collect();
    Ok(CandidateBatch {
        base,
        candidates,
        topk,
        stream_seed,
    })
}
