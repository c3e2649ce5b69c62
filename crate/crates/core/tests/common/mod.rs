#![allow(dead_code)]

use std::sync::{Arc, Mutex};

use probe_core::rng::SeededRng;
use probe_core::scoring::{Capabilities, Scorer, ScorerHandle, ToyScorer};
use probe_core::tokens::{AttackInstance, TokenId, TokenSeq, Vocabulary};
use probe_core::toylm::{ToyLmDims, ToyLmParams};
use probe_core::Result;

pub fn dims(v: usize, d: usize, h: usize) -> ToyLmDims {
    ToyLmDims {
        vocab_size: v,
        embed_dim: d,
        hidden_dim: h,
        context: 6,
        decay: 0.9,
        init_scale: 0.5,
    }
}

pub fn model(v: usize, d: usize, h: usize, seed: u64) -> Arc<ToyLmParams> {
    Arc::new(ToyLmParams::random(dims(v, d, h), &mut SeededRng::new(seed)).unwrap())
}

pub fn instance(v: usize, prompt: &[TokenId], suffix: &[TokenId], target: &[TokenId]) -> AttackInstance {
    let vocab = Vocabulary::new(v).unwrap();
    AttackInstance::new(
        TokenSeq::new(prompt.to_vec(), Arc::clone(&vocab)).unwrap(),
        TokenSeq::new(suffix.to_vec(), Arc::clone(&vocab)).unwrap(),
        TokenSeq::new(target.to_vec(), vocab).unwrap(),
    )
    .unwrap()
}

pub fn random_instance(v: usize, prompt: usize, suffix: usize, target: usize, seed: u64) -> AttackInstance {
    let mut rng = SeededRng::new(seed);
    let mut draw = |n: usize| -> Vec<TokenId> { (0..n).map(|_| rng.below(v) as TokenId).collect() };
    let (p, s, t) = (draw(prompt), draw(suffix), draw(target));
    instance(v, &p, &s, &t)
}

pub fn toy(label: &str, params: &Arc<ToyLmParams>) -> ScorerHandle {
    ScorerHandle::new(ToyScorer::new(label, Arc::clone(params)))
}

pub fn toy_draft(params: &Arc<ToyLmParams>) -> ScorerHandle {
    ScorerHandle::new(ToyScorer::new("draft", Arc::clone(params)).without_gradient())
}

/// Wraps a scorer and logs the token count of every loss call.
pub struct Counting {
    pub inner: ToyScorer,
    pub calls: Arc<Mutex<Vec<u64>>>,
}

impl Counting {
    pub fn wrap(inner: ToyScorer) -> (ScorerHandle, Arc<Mutex<Vec<u64>>>) {
        let calls = Arc::new(Mutex::new(Vec::new()));
        let h = ScorerHandle::new(Counting {
            inner,
            calls: Arc::clone(&calls),
        });
        (h, calls)
    }
}

impl Scorer for Counting {
    fn label(&self) -> &str {
        self.inner.label()
    }

    fn capabilities(&self) -> Capabilities {
        self.inner.capabilities()
    }

    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn flops_per_token(&self) -> f64 {
        self.inner.flops_per_token()
    }

    fn losses(&self, inst: &AttackInstance, suffixes: &[&[TokenId]]) -> Result<Vec<f64>> {
        let tokens: usize = suffixes
            .iter()
            .map(|s| inst.prompt().len() + s.len() + inst.target().len())
            .sum();
        self.calls.lock().unwrap().push(tokens as u64);
        self.inner.losses(inst, suffixes)
    }

    fn gradient_topk(&self, inst: &AttackInstance, k: usize) -> Result<Vec<Vec<TokenId>>> {
        self.inner.gradient_topk(inst, k)
    }
}
