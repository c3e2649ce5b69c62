//! A small differentiable language model used as an in-process scorer.
//!
//! For position `t` the context vector is a decayed bag of the previous `c`
//! embeddings, `m_t = sum_{i=1..c} decay^i * E[tok_{t-i}]` (positions before
//! the start contribute nothing). Then `h_t = tanh(m_t W)`, `logits_t = h_t U`
//! and the next-token distribution is the softmax of the logits.
//!
//! Matrices are stored row-major: `E` is `V x d`, `W` is `d x h`, `U` is `h x V`.
//!
//! # Parameter file format
//!
//! [`ToyLmParams::save_json`] writes a single JSON object:
//!
//! ```json
//! {"format":"toylm-v1","vocab_size":V,"embed_dim":d,"hidden_dim":h,
//!  "context":c,"decay":g,"embed":[...],"hidden":[...],"output":[...]}
//! ```
//!
//! The three arrays are the flattened row-major matrices. Floats are written
//! in shortest round-trip form, so save followed by load is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tokens::{AttackInstance, TokenId, TokenSeq};

const FORMAT_TAG: &str = "toylm-v1";

/// Shape and initialization of a toy model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyLmDims {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub context: usize,
    pub decay: f64,
    /// Parameters are drawn uniformly from `[-init_scale, init_scale]`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_init_scale() -> f64 {
    0.5
}

impl ToyLmDims {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::VocabTooSmall(self.vocab_size));
        }
        if self.embed_dim == 0 || self.hidden_dim == 0 || self.context == 0 {
            return Err(Error::Shape(
                "embed_dim, hidden_dim and context must all be at least 1".into(),
            ));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(Error::Shape(format!("decay {} not in (0, 1]", self.decay)));
        }
        if !self.init_scale.is_finite() || self.init_scale < 0.0 {
            return Err(Error::NonFinite(format!("init_scale {}", self.init_scale)));
        }
        Ok(())
    }

    pub fn parameter_count(&self) -> usize {
        let (v, d, h) = (self.vocab_size, self.embed_dim, self.hidden_dim);
        v * d + d * h + h * v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLmParams {
    format: String,
    vocab_size: usize,
    embed_dim: usize,
    hidden_dim: usize,
    context: usize,
    decay: f64,
    embed: Vec<f64>,
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl ToyLmParams {
    pub fn from_parts(
        dims: ToyLmDims,
        embed: Vec<f64>,
        hidden: Vec<f64>,
        output: Vec<f64>,
    ) -> Result<Self> {
        let p = Self {
            format: FORMAT_TAG.to_string(),
            vocab_size: dims.vocab_size,
            embed_dim: dims.embed_dim,
            hidden_dim: dims.hidden_dim,
            context: dims.context,
            decay: dims.decay,
            embed,
            hidden,
            output,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn zeros(dims: ToyLmDims) -> Result<Self> {
        dims.validate()?;
        let (v, d, h) = (dims.vocab_size, dims.embed_dim, dims.hidden_dim);
        Self::from_parts(dims, vec![0.0; v * d], vec![0.0; d * h], vec![0.0; h * v])
    }

    /// Every parameter uniform in `[-init_scale, init_scale]`, drawn in the
    /// order embed, hidden, output.
    pub fn random(dims: ToyLmDims, rng: &mut SeededRng) -> Result<Self> {
        dims.validate()?;
        let (v, d, h) = (dims.vocab_size, dims.embed_dim, dims.hidden_dim);
        let s = dims.init_scale;
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.uniform_range(-s, s)).collect() };
        let embed = draw(v * d);
        let hidden = draw(d * h);
        let output = draw(h * v);
        Self::from_parts(dims, embed, hidden, output)
    }

    /// Leading `embed_dim x hidden_dim` block of this model: the first
    /// embedding columns, the matching block of `W`, and the first rows of `U`.
    pub fn truncated(&self, embed_dim: usize, hidden_dim: usize) -> Result<Self> {
        if embed_dim == 0
            || hidden_dim == 0
            || embed_dim > self.embed_dim
            || hidden_dim > self.hidden_dim
        {
            return Err(Error::Shape(format!(
                "cannot truncate {}x{} model to {}x{}",
                self.embed_dim, self.hidden_dim, embed_dim, hidden_dim
            )));
        }
        let v = self.vocab_size;
        let mut embed = Vec::with_capacity(v * embed_dim);
        for row in self.embed.chunks(self.embed_dim) {
            embed.extend_from_slice(&row[..embed_dim]);
        }
        let mut hidden = Vec::with_capacity(embed_dim * hidden_dim);
        for row in self.hidden.chunks(self.hidden_dim).take(embed_dim) {
            hidden.extend_from_slice(&row[..hidden_dim]);
        }
        let output = self.output[..hidden_dim * v].to_vec();
        let dims = ToyLmDims {
            embed_dim,
            hidden_dim,
            ..self.dims()
        };
        Self::from_parts(dims, embed, hidden, output)
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT_TAG {
            return Err(Error::Shape(format!("unknown format tag `{}`", self.format)));
        }
        self.dims().validate()?;
        let (v, d, h) = (self.vocab_size, self.embed_dim, self.hidden_dim);
        for (name, data, want) in [
            ("embed", &self.embed, v * d),
            ("hidden", &self.hidden, d * h),
            ("output", &self.output, h * v),
        ] {
            if data.len() != want {
                return Err(Error::Shape(format!(
                    "{name} has {} values, expected {want}",
                    data.len()
                )));
            }
            if let Some(i) = data.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFinite(format!("{name}[{i}] = {}", data[i])));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> ToyLmDims {
        ToyLmDims {
            vocab_size: self.vocab_size,
            embed_dim: self.embed_dim,
            hidden_dim: self.hidden_dim,
            context: self.context,
            decay: self.decay,
            init_scale: default_init_scale(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn parameter_count(&self) -> usize {
        self.dims().parameter_count()
    }

    pub fn embedding(&self, token: TokenId) -> &[f64] {
        let d = self.embed_dim;
        &self.embed[token as usize * d..(token as usize + 1) * d]
    }

    /// Row-major `d x h` hidden map.
    pub fn hidden_weights(&self) -> &[f64] {
        &self.hidden
    }

    /// Row-major `h x V` output map.
    pub fn output_weights(&self) -> &[f64] {
        &self.output
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("params serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(s).map_err(|e| Error::Shape(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    fn check_ids(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|&&t| t as usize >= self.vocab_size) {
            Some(&id) => Err(Error::InvalidToken {
                id,
                vocab_size: self.vocab_size,
            }),
            None => Ok(()),
        }
    }

    /// Decayed context vector for predicting position `t` of `ids`.
    fn context_vector(&self, ids: &[TokenId], t: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.embed_dim];
        let mut w = 1.0;
        for i in 1..=self.context.min(t) {
            w *= self.decay;
            for (acc, e) in m.iter_mut().zip(self.embedding(ids[t - i])) {
                *acc += w * e;
            }
        }
        m
    }

    fn hidden_state(&self, m: &[f64]) -> Vec<f64> {
        let h = self.hidden_dim;
        let mut pre = vec![0.0; h];
        for (a, &ma) in m.iter().enumerate() {
            if ma == 0.0 {
                continue;
            }
            let row = &self.hidden[a * h..(a + 1) * h];
            for (p, w) in pre.iter_mut().zip(row) {
                *p += ma * w;
            }
        }
        pre.iter_mut().for_each(|p| *p = p.tanh());
        pre
    }

    fn log_probs(&self, hidden: &[f64]) -> Vec<f64> {
        let v = self.vocab_size;
        let mut logits = vec![0.0; v];
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &self.output[j * v..(j + 1) * v];
            for (l, u) in logits.iter_mut().zip(row) {
                *l += hj * u;
            }
        }
        log_softmax(&mut logits);
        logits
    }

    fn position(&self, ids: &[TokenId], t: usize) -> PositionOutput {
        let context = self.context_vector(ids, t);
        let hidden = self.hidden_state(&context);
        let log_probs = self.log_probs(&hidden);
        PositionOutput {
            context,
            hidden,
            log_probs,
        }
    }

    pub fn forward(&self, seq: &TokenSeq) -> Result<LmOutput> {
        self.forward_ids(seq.tokens())
    }

    pub fn forward_ids(&self, ids: &[TokenId]) -> Result<LmOutput> {
        if ids.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_ids(ids)?;
        let positions = (1..ids.len()).map(|t| self.position(ids, t)).collect();
        Ok(LmOutput { positions })
    }

    /// Next-token log-probabilities after `prefix`.
    pub fn next_log_probs(&self, prefix: &[TokenId]) -> Result<Vec<f64>> {
        if prefix.is_empty() {
            return Err(Error::EmptySequence);
        }
        self.check_ids(prefix)?;
        let mut ids = prefix.to_vec();
        ids.push(0);
        Ok(self.position(&ids, prefix.len()).log_probs)
    }

    /// Sum of `-log p(ids[t] | ids[..t])` over `t` in `scored`.
    pub fn sequence_nll(&self, ids: &[TokenId], scored: std::ops::Range<usize>) -> Result<f64> {
        self.check_ids(ids)?;
        if scored.start == 0 || scored.end > ids.len() {
            return Err(Error::IndexOutOfRange {
                index: scored.end,
                len: ids.len(),
            });
        }
        Ok(scored
            .map(|t| -self.position(ids, t).log_probs[ids[t] as usize])
            .sum())
    }

    /// Adversarial loss `-log p(y | x, s)`, summed over target tokens.
    pub fn nll_loss(&self, inst: &AttackInstance) -> Result<f64> {
        self.sequence_nll(&inst.input_ids(), inst.target_positions())
    }

    /// Loss of `inst` with its suffix swapped for `suffix`.
    pub fn nll_loss_with_suffix(&self, inst: &AttackInstance, suffix: &[TokenId]) -> Result<f64> {
        if suffix.len() != inst.suffix().len() {
            return Err(Error::Shape(format!(
                "suffix length {} differs from instance suffix length {}",
                suffix.len(),
                inst.suffix().len()
            )));
        }
        self.sequence_nll(&inst.input_ids_with(suffix), inst.target_positions())
    }

    /// Gradient of the loss with respect to a relaxed one-hot input at every
    /// suffix position. Row `j` has length `V`.
    pub fn onehot_gradients(&self, inst: &AttackInstance) -> Result<Vec<Vec<f64>>> {
        let ids = inst.input_ids();
        self.check_ids(&ids)?;
        let (d, h, v) = (self.embed_dim, self.hidden_dim, self.vocab_size);
        let targets = inst.target_positions();

        // dL/dm_t for every scored position.
        let mut grad_context: Vec<(usize, Vec<f64>)> = Vec::with_capacity(targets.len());
        for t in targets {
            let out = self.position(&ids, t);
            let mut dlogits: Vec<f64> = out.log_probs.iter().map(|lp| lp.exp()).collect();
            dlogits[ids[t] as usize] -= 1.0;
            let mut dpre = vec![0.0; h];
            for (j, dp) in dpre.iter_mut().enumerate() {
                let row = &self.output[j * v..(j + 1) * v];
                let dh: f64 = row.iter().zip(&dlogits).map(|(u, g)| u * g).sum();
                *dp = dh * (1.0 - out.hidden[j] * out.hidden[j]);
            }
            let dm: Vec<f64> = (0..d)
                .map(|a| {
                    let row = &self.hidden[a * h..(a + 1) * h];
                    row.iter().zip(&dpre).map(|(w, g)| w * g).sum()
                })
                .collect();
            grad_context.push((t, dm));
        }

        let mut grads = Vec::with_capacity(inst.suffix().len());
        for q in inst.suffix_positions() {
            let mut demb = vec![0.0; d];
            for (t, dm) in &grad_context {
                let lag = t - q;
                if lag >= 1 && lag <= self.context {
                    let w = self.decay.powi(lag as i32);
                    for (acc, g) in demb.iter_mut().zip(dm) {
                        *acc += w * g;
                    }
                }
            }
            let row: Vec<f64> = (0..v)
                .map(|tok| {
                    self.embedding(tok as TokenId)
                        .iter()
                        .zip(&demb)
                        .map(|(e, g)| e * g)
                        .sum()
                })
                .collect();
            grads.push(row);
        }
        Ok(grads)
    }

    /// Gradient at a single suffix position (index into the suffix).
    pub fn onehot_gradient(&self, inst: &AttackInstance, position: usize) -> Result<Vec<f64>> {
        let len = inst.suffix().len();
        if position >= len {
            return Err(Error::IndexOutOfRange {
                index: position,
                len,
            });
        }
        Ok(self.onehot_gradients(inst)?.swap_remove(position))
    }

    /// Append `steps` argmax tokens to `prefix`; ties go to the smaller id.
    pub fn greedy_decode(&self, prefix: &TokenSeq, steps: usize) -> Result<TokenSeq> {
        if steps == 0 {
            return Err(Error::Shape("greedy_decode needs steps >= 1".into()));
        }
        let mut ids = prefix.tokens().to_vec();
        for _ in 0..steps {
            let lp = self.next_log_probs(&ids)?;
            ids.push(argmax_first(&lp) as TokenId);
        }
        TokenSeq::new(ids, prefix.vocab().clone())
    }
}

/// Index of the largest value; the first one on ties.
pub fn argmax_first(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(xs: &mut [f64]) {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
    xs.iter_mut().for_each(|x| *x -= lse);
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositionOutput {
    pub context: Vec<f64>,
    pub hidden: Vec<f64>,
    pub log_probs: Vec<f64>,
}

/// Outputs for positions `1..len`; `positions[i]` predicts token `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmOutput {
    pub positions: Vec<PositionOutput>,
}

impl LmOutput {
    pub fn log_probs(&self, position: usize) -> &[f64] {
        &self.positions[position - 1].log_probs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokens::{make_instance, SuffixInit, Vocabulary};

    fn hand_model() -> ToyLmParams {
        let dims = ToyLmDims {
            vocab_size: 2,
            embed_dim: 1,
            hidden_dim: 1,
            context: 1,
            decay: 1.0,
            init_scale: 0.5,
        };
        ToyLmParams::from_parts(dims, vec![1.0, -1.0], vec![1.0], vec![1.0, -1.0]).unwrap()
    }

    fn dims(v: usize, d: usize, h: usize, c: usize, g: f64) -> ToyLmDims {
        ToyLmDims {
            vocab_size: v,
            embed_dim: d,
            hidden_dim: h,
            context: c,
            decay: g,
            init_scale: 0.5,
        }
    }

    #[test]
    fn zero_model_is_uniform() {
        let p = ToyLmParams::zeros(dims(8, 3, 4, 2, 0.9)).unwrap();
        let v = Vocabulary::new(8).unwrap();
        let out = p.forward(&TokenSeq::new(vec![1, 2, 3, 4], v).unwrap()).unwrap();
        assert_eq!(out.positions.len(), 3);
        for pos in &out.positions {
            for lp in &pos.log_probs {
                assert!((lp + 8f64.ln()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_model_position() {
        // m = 1, h = tanh(1), logits = (h, -h), p0 = 1 / (1 + exp(-2h)).
        let p = hand_model();
        let v = Vocabulary::new(2).unwrap();
        let out = p.forward(&TokenSeq::new(vec![0, 0], v).unwrap()).unwrap();
        let pos = &out.positions[0];
        assert!((pos.hidden[0] - 0.761_594_155_955_764_9).abs() < 1e-12);
        let p0 = pos.log_probs[0].exp();
        let p1 = pos.log_probs[1].exp();
        assert!((p0 - 0.821_007_496_006).abs() < 1e-12);
        assert!((p0 - 0.8211).abs() < 2e-4);
        assert!((p1 - 0.178_992_503_994).abs() < 1e-12);
    }

    #[test]
    fn probabilities_normalized() {
        let mut rng = SeededRng::new(3);
        let p = ToyLmParams::random(dims(11, 4, 5, 3, 0.8), &mut rng).unwrap();
        let v = Vocabulary::new(11).unwrap();
        let ids: Vec<TokenId> = (0..9).map(|_| rng.below(11) as TokenId).collect();
        let out = p.forward(&TokenSeq::new(ids, v).unwrap()).unwrap();
        for pos in &out.positions {
            let s: f64 = pos.log_probs.iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn non_finite_params_rejected() {
        let d = dims(2, 1, 1, 1, 1.0);
        let err = ToyLmParams::from_parts(d, vec![f64::NAN, 0.0], vec![0.0], vec![0.0, 0.0]);
        assert!(matches!(err, Err(Error::NonFinite(_))));
    }

    fn instance(v: usize, x: &[TokenId], s: &[TokenId], y: &[TokenId]) -> AttackInstance {
        let vocab = Vocabulary::new(v).unwrap();
        AttackInstance::new(
            TokenSeq::new(x.to_vec(), vocab.clone()).unwrap(),
            TokenSeq::new(s.to_vec(), vocab.clone()).unwrap(),
            TokenSeq::new(y.to_vec(), vocab).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_model_loss() {
        let p = ToyLmParams::zeros(dims(8, 2, 2, 2, 1.0)).unwrap();
        let inst = instance(8, &[1], &[2, 3], &[4, 5, 6]);
        assert!((p.nll_loss(&inst).unwrap() - 3.0 * 8f64.ln()).abs() < 1e-12);
        assert!((3.0 * 8f64.ln() - 6.2383).abs() < 1e-4);
    }

    #[test]
    fn hand_model_loss() {
        let p = hand_model();
        let inst = instance(2, &[1], &[0], &[0]);
        let loss = p.nll_loss(&inst).unwrap();
        assert!((loss - 0.197_223_039_235_215).abs() < 1e-12);
        assert!((loss - 0.1971).abs() < 2e-4);
    }

    #[test]
    fn saturated_model_loss_near_zero() {
        let d = dims(2, 1, 1, 1, 1.0);
        let p = ToyLmParams::from_parts(d, vec![50.0, 50.0], vec![1.0], vec![100.0, -100.0])
            .unwrap();
        let inst = instance(2, &[1], &[1], &[0]);
        assert!(p.nll_loss(&inst).unwrap() < 1e-12);
    }

    #[test]
    fn loss_matches_forward_output() {
        let mut rng = SeededRng::new(11);
        let p = ToyLmParams::random(dims(9, 3, 4, 3, 0.7), &mut rng).unwrap();
        let inst = instance(9, &[1, 2], &[3, 4, 5], &[6, 7]);
        let ids = inst.input_ids();
        let out = p.forward_ids(&ids).unwrap();
        let direct: f64 = inst
            .target_positions()
            .map(|t| -out.log_probs(t)[ids[t] as usize])
            .sum();
        assert_eq!(direct, p.nll_loss(&inst).unwrap());
    }

    #[test]
    fn gradient_zero_outside_receptive_field() {
        let mut rng = SeededRng::new(2);
        let p = ToyLmParams::random(dims(6, 3, 3, 2, 0.9), &mut rng).unwrap();
        // Suffix positions 1..5, targets at 7..9; position 1 is 6 steps before the first target.
        let inst = instance(6, &[0], &[1, 2, 3, 4], &[0, 0, 5, 1]);
        let g = p.onehot_gradient(&inst, 0).unwrap();
        assert_eq!(g.len(), 6);
        assert!(g.iter().all(|&x| x == 0.0));
        let last = p.onehot_gradient(&inst, 3).unwrap();
        assert!(last.iter().any(|&x| x != 0.0));
        assert!(matches!(
            p.onehot_gradient(&inst, 4),
            Err(Error::IndexOutOfRange { index: 4, len: 4 })
        ));
    }

    #[test]
    fn greedy_decode_examples() {
        let v = Vocabulary::new(5).unwrap();
        let zero = ToyLmParams::zeros(dims(5, 2, 2, 2, 1.0)).unwrap();
        let out = zero
            .greedy_decode(&TokenSeq::new(vec![3, 4], v.clone()).unwrap(), 3)
            .unwrap();
        assert_eq!(out.tokens(), &[3, 4, 0, 0, 0]);
        let one = zero
            .greedy_decode(&TokenSeq::new(vec![3], v.clone()).unwrap(), 1)
            .unwrap();
        assert_eq!(one.len(), 2);
        assert!(zero
            .greedy_decode(&TokenSeq::new(vec![3], v).unwrap(), 0)
            .is_err());

        let hand = hand_model();
        let v2 = Vocabulary::new(2).unwrap();
        let out = hand
            .greedy_decode(&TokenSeq::new(vec![0], v2).unwrap(), 1)
            .unwrap();
        assert_eq!(out.tokens(), &[0, 0]);
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut rng = SeededRng::new(99);
        let p = ToyLmParams::random(dims(13, 3, 7, 4, 0.85), &mut rng).unwrap();
        let q = ToyLmParams::from_json(&p.to_json()).unwrap();
        assert_eq!(p, q);
        for (a, b) in p.embed.iter().zip(&q.embed) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn load_rejects_wrong_shape() {
        let p = ToyLmParams::zeros(dims(4, 2, 2, 1, 1.0)).unwrap();
        let json = p.to_json().replace("\"vocab_size\":4", "\"vocab_size\":5");
        assert!(matches!(ToyLmParams::from_json(&json), Err(Error::Shape(_))));
    }

    #[test]
    fn truncation_shapes() {
        let mut rng = SeededRng::new(1);
        let p = ToyLmParams::random(dims(7, 6, 8, 3, 0.9), &mut rng).unwrap();
        let q = p.truncated(2, 3).unwrap();
        assert_eq!(q.parameter_count(), 7 * 2 + 2 * 3 + 3 * 7);
        assert_eq!(q.embedding(4), &p.embedding(4)[..2]);
        assert!(p.truncated(7, 3).is_err());
    }

    #[test]
    fn parameter_count_formula() {
        assert_eq!(dims(10, 3, 4, 1, 1.0).parameter_count(), 30 + 12 + 40);
    }

    #[test]
    fn instance_from_make_instance_scores() {
        let v = Vocabulary::new(8).unwrap();
        let mut rng = SeededRng::new(0);
        let inst = make_instance(
            TokenSeq::new(vec![1, 2], v.clone()).unwrap(),
            3,
            TokenSeq::new(vec![4], v).unwrap(),
            SuffixInit::Constant(0),
            &mut rng,
        )
        .unwrap();
        let p = ToyLmParams::random(dims(8, 2, 2, 2, 1.0), &mut rng).unwrap();
        assert!(p.nll_loss(&inst).unwrap() > 0.0);
    }
}
