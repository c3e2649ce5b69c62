use std::sync::Arc;

use super::{topk_from_gradient, Capabilities, Scorer};
use crate::error::{Error, Result};
use crate::tokens::{AttackInstance, TokenId};
use crate::toylm::ToyLmParams;

/// In-process scorer backed by a [`ToyLmParams`] model.
///
/// Cost model: `2 * P` FLOPs per token, `P` the parameter count.
#[derive(Debug, Clone)]
pub struct ToyScorer {
    label: String,
    params: Arc<ToyLmParams>,
    gradient: bool,
}

impl ToyScorer {
    pub fn new(label: impl Into<String>, params: Arc<ToyLmParams>) -> Self {
        Self {
            label: label.into(),
            params,
            gradient: true,
        }
    }

    /// Loss-only scorer; `gradient_topk` reports a capability error.
    pub fn without_gradient(mut self) -> Self {
        self.gradient = false;
        self
    }

    pub fn params(&self) -> &Arc<ToyLmParams> {
        &self.params
    }
}

impl Scorer for ToyScorer {
    fn label(&self) -> &str {
        &self.label
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            supports_gradient: self.gradient,
            concurrent_safe: true,
        }
    }

    fn vocab_size(&self) -> usize {
        self.params.vocab_size()
    }

    fn flops_per_token(&self) -> f64 {
        2.0 * self.params.parameter_count() as f64
    }

    fn losses(&self, inst: &AttackInstance, suffixes: &[&[TokenId]]) -> Result<Vec<f64>> {
        suffixes
            .iter()
            .enumerate()
            .map(|(i, s)| {
                self.params
                    .nll_loss_with_suffix(inst, s)
                    .map_err(|e| Error::Scorer {
                        scorer: self.label.clone(),
                        index: Some(i),
                        message: e.to_string(),
                    })
            })
            .collect()
    }

    fn gradient_topk(&self, inst: &AttackInstance, k: usize) -> Result<Vec<Vec<TokenId>>> {
        if !self.gradient {
            return Err(Error::NoGradient {
                scorer: self.label.clone(),
            });
        }
        Ok(self
            .params
            .onehot_gradients(inst)?
            .iter()
            .map(|g| topk_from_gradient(g, k))
            .collect())
    }
}
