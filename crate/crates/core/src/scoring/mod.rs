//! Scorers: the loss and gradient sources the search loops run against.
//!
//! A [`Scorer`] evaluates the adversarial loss of candidate suffixes and,
//! optionally, ranks substitution tokens by their one-hot gradient. The engine
//! only talks to scorers through a [`ScorerHandle`], which adds cost
//! accounting and serializes access to scorers that are not safe to call
//! concurrently.

mod bridge;
pub mod protocol;
mod toy;

use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::tokens::{AttackInstance, TokenId};

pub use bridge::BridgeScorer;
pub use toy::ToyScorer;

/// Forward plus backward pass, in forward-pass units.
pub const GRADIENT_COST_FACTOR: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Capabilities {
    pub supports_gradient: bool,
    pub concurrent_safe: bool,
}

pub trait Scorer: Send + Sync {
    fn label(&self) -> &str;

    fn capabilities(&self) -> Capabilities;

    /// Vocabulary size the scorer accepts.
    fn vocab_size(&self) -> usize;

    fn flops_per_token(&self) -> f64;

    /// Loss of `inst` with each suffix substituted in, in input order.
    fn losses(&self, inst: &AttackInstance, suffixes: &[&[TokenId]]) -> Result<Vec<f64>>;

    /// For each suffix position, the `k` ids with the largest negative
    /// one-hot gradient, best first, ties toward the smaller id.
    fn gradient_topk(&self, _inst: &AttackInstance, _k: usize) -> Result<Vec<Vec<TokenId>>> {
        Err(Error::NoGradient {
            scorer: self.label().to_string(),
        })
    }
}

/// Losses for one batch plus what they cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBatch {
    pub losses: Vec<f64>,
    pub tokens: u64,
    pub flops: f64,
    pub wall_ms: f64,
}

impl LossBatch {
    pub fn len(&self) -> usize {
        self.losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.losses.is_empty()
    }
}

/// A bound scorer. Cloning is cheap and shares the underlying scorer.
#[derive(Clone)]
pub struct ScorerHandle {
    inner: Arc<dyn Scorer>,
    gate: Option<Arc<Mutex<()>>>,
}

impl fmt::Debug for ScorerHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScorerHandle")
            .field("label", &self.label())
            .field("capabilities", &self.capabilities())
            .field("flops_per_token", &self.flops_per_token())
            .finish()
    }
}

impl ScorerHandle {
    pub fn new(scorer: impl Scorer + 'static) -> Self {
        Self::from_arc(Arc::new(scorer))
    }

    pub fn from_arc(inner: Arc<dyn Scorer>) -> Self {
        let gate = if inner.capabilities().concurrent_safe {
            None
        } else {
            Some(Arc::new(Mutex::new(())))
        };
        Self { inner, gate }
    }

    /// Same scorer, but every call is serialized even if the scorer claims
    /// to be concurrency safe.
    pub fn serialized(&self) -> Self {
        Self {
            inner: Arc::clone(&self.inner),
            gate: Some(self.gate.clone().unwrap_or_default()),
        }
    }

    pub fn label(&self) -> &str {
        self.inner.label()
    }

    pub fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    pub fn supports_gradient(&self) -> bool {
        self.capabilities().supports_gradient
    }

    pub fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    pub fn flops_per_token(&self) -> f64 {
        self.inner.flops_per_token()
    }

    pub fn flops_estimate(&self, token_count: u64) -> f64 {
        self.flops_per_token() * token_count as f64
    }

    /// Charged cost of scoring one candidate of `inst`.
    pub fn flops_per_candidate(&self, inst: &AttackInstance) -> f64 {
        self.flops_estimate(inst.total_len() as u64)
    }

    pub fn gradient_flops(&self, inst: &AttackInstance) -> f64 {
        GRADIENT_COST_FACTOR * self.flops_per_candidate(inst)
    }

    fn with_gate<T>(&self, f: impl FnOnce() -> T) -> T {
        match &self.gate {
            Some(g) => {
                let _guard = g.lock().unwrap_or_else(|p| p.into_inner());
                f()
            }
            None => f(),
        }
    }

    pub fn loss_batch<S: AsRef<[TokenId]>>(
        &self,
        inst: &AttackInstance,
        candidates: &[S],
    ) -> Result<LossBatch> {
        if candidates.is_empty() {
            return Err(Error::Shape("loss_batch needs at least one candidate".into()));
        }
        let want = inst.suffix().len();
        let vocab = inst.vocab();
        let mut refs = Vec::with_capacity(candidates.len());
        for (i, c) in candidates.iter().enumerate() {
            let c = c.as_ref();
            let bad = if c.len() != want {
                Some(format!("suffix length {} != {}", c.len(), want))
            } else {
                c.iter()
                    .find(|&&t| vocab.check(t).is_err())
                    .map(|t| format!("token id {t} outside vocabulary"))
            };
            if let Some(message) = bad {
                return Err(Error::Scorer {
                    scorer: self.label().to_string(),
                    index: Some(i),
                    message,
                });
            }
            refs.push(c);
        }

        let start = Instant::now();
        let losses = self.with_gate(|| self.inner.losses(inst, &refs))?;
        let wall_ms = start.elapsed().as_secs_f64() * 1e3;

        if losses.len() != refs.len() {
            return Err(Error::Scorer {
                scorer: self.label().to_string(),
                index: None,
                message: format!("returned {} losses for {} candidates", losses.len(), refs.len()),
            });
        }
        if let Some(i) = losses.iter().position(|l| !l.is_finite()) {
            return Err(Error::Scorer {
                scorer: self.label().to_string(),
                index: Some(i),
                message: format!("non-finite loss {}", losses[i]),
            });
        }
        let tokens = (refs.len() * inst.total_len()) as u64;
        Ok(LossBatch {
            losses,
            tokens,
            flops: self.flops_estimate(tokens),
            wall_ms,
        })
    }

    pub fn gradient_topk(&self, inst: &AttackInstance, k: usize) -> Result<Vec<Vec<TokenId>>> {
        if !self.supports_gradient() {
            return Err(Error::NoGradient {
                scorer: self.label().to_string(),
            });
        }
        let v = self.vocab_size();
        if k == 0 || k > v {
            return Err(Error::Config(format!("top-k {k} not in [1, {v}]")));
        }
        let lists = self.with_gate(|| self.inner.gradient_topk(inst, k))?;
        if lists.len() != inst.suffix().len() || lists.iter().any(|l| l.len() != k) {
            return Err(Error::Scorer {
                scorer: self.label().to_string(),
                index: None,
                message: "gradient top-k has the wrong shape".into(),
            });
        }
        Ok(lists)
    }
}

/// Ids `0..V` ordered by descending `-grad` (ascending `grad`), ties toward
/// the smaller id, truncated to `k`.
pub fn topk_from_gradient(grad: &[f64], k: usize) -> Vec<TokenId> {
    let mut ids: Vec<usize> = (0..grad.len()).collect();
    ids.sort_by(|&a, &b| grad[a].total_cmp(&grad[b]).then(a.cmp(&b)));
    ids.truncate(k);
    ids.into_iter().map(|i| i as TokenId).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topk_orders_by_negative_gradient() {
        let g = [0.5, -1.0, 0.0, -1.0, 2.0];
        assert_eq!(topk_from_gradient(&g, 5), vec![1, 3, 2, 0, 4]);
        assert_eq!(topk_from_gradient(&g, 2), vec![1, 3]);
    }

    #[test]
    fn topk_zero_gradient_breaks_ties_by_id() {
        assert_eq!(topk_from_gradient(&[0.0; 6], 3), vec![0, 1, 2]);
    }
}
