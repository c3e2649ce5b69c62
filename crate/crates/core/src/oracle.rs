//! Slow reference implementations used by the validation suites and tests.
//!
//! Nothing here shares code with the production paths it checks: ranks are
//! counted explicitly, pairs are enumerated, and the toy model's gradient is
//! recovered by central finite differences on an independently written
//! forward pass over relaxed one-hot inputs.

use crate::tokens::{AttackInstance, TokenId};
use crate::toylm::ToyLmParams;

/// Rank of each element by counting: `1 + #smaller + (#equal - 1) / 2`.
pub fn ranks_by_counting(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let less = xs.iter().filter(|&&y| y < x).count() as f64;
            let equal = xs.iter().filter(|&&y| y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let k = a.len() as f64;
    let ra = ranks_by_counting(a);
    let rb = ranks_by_counting(b);
    let mut sum_d2 = 0.0;
    for i in 0..a.len() {
        let d = ra[i] - rb[i];
        sum_d2 += d * d;
    }
    (1.0 - 3.0 * sum_d2 / (k * (k * k - 1.0))).clamp(0.0, 1.0)
}

/// Pearson r written over pairs:
/// `sum_{i<j} da db / sqrt(sum da^2 * sum db^2)` with `da = a_i - a_j`.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            sab += da * db;
            saa += da * da;
            sbb += db * db;
        }
    }
    (sab / (saa * sbb).sqrt() + 1.0) / 2.0
}

/// (concordant, discordant, tied only in a, tied only in b, tied in both).
pub fn pair_census(a: &[f64], b: &[f64]) -> (u64, u64, u64, u64, u64) {
    let (mut c, mut d, mut ta, mut tb, mut tab) = (0, 0, 0, 0, 0);
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let sa = (a[i] - a[j]).signum() * (a[i] != a[j]) as i32 as f64;
            let sb = (b[i] - b[j]).signum() * (b[i] != b[j]) as i32 as f64;
            match (sa == 0.0, sb == 0.0) {
                (true, true) => tab += 1,
                (true, false) => ta += 1,
                (false, true) => tb += 1,
                (false, false) if sa == sb => c += 1,
                (false, false) => d += 1,
            }
        }
    }
    (c, d, ta, tb, tab)
}

pub fn kendall(a: &[f64], b: &[f64]) -> f64 {
    let (c, d, ta, tb, _) = pair_census(a, b);
    let tau = (c as f64 - d as f64) / (((c + d + ta) as f64) * ((c + d + tb) as f64)).sqrt();
    (tau + 1.0) / 2.0
}

pub fn gamma(a: &[f64], b: &[f64]) -> f64 {
    let (c, d, ..) = pair_census(a, b);
    ((c as f64 - d as f64) / (c + d) as f64 + 1.0) / 2.0
}

/// Loss of `inst` where the input at absolute position `relaxed_at` is the
/// mixture `sum_v weights[v] * E[v]` instead of a single embedding.
pub fn relaxed_loss(
    params: &ToyLmParams,
    inst: &AttackInstance,
    relaxed_at: usize,
    weights: &[f64],
) -> f64 {
    let dims = params.dims();
    let ids: Vec<TokenId> = inst.input_ids();
    let embed_of = |pos: usize| -> Vec<f64> {
        if pos == relaxed_at {
            let mut e = vec![0.0; dims.embed_dim];
            for (v, w) in weights.iter().enumerate() {
                for (a, x) in params.embedding(v as TokenId).iter().enumerate() {
                    e[a] += w * x;
                }
            }
            e
        } else {
            params.embedding(ids[pos]).to_vec()
        }
    };
    let hidden = params.hidden_weights();
    let output = params.output_weights();

    let mut loss = 0.0;
    for t in inst.target_positions() {
        let mut m = vec![0.0; dims.embed_dim];
        for i in 1..=dims.context {
            if i > t {
                break;
            }
            let w = dims.decay.powi(i as i32);
            for (a, x) in embed_of(t - i).iter().enumerate() {
                m[a] += w * x;
            }
        }
        let mut h = vec![0.0; dims.hidden_dim];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut s = 0.0;
            for (a, ma) in m.iter().enumerate() {
                s += ma * hidden[a * dims.hidden_dim + j];
            }
            *hj = s.tanh();
        }
        let logits: Vec<f64> = (0..dims.vocab_size)
            .map(|v| {
                h.iter()
                    .enumerate()
                    .map(|(j, hj)| hj * output[j * dims.vocab_size + v])
                    .sum()
            })
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        loss -= logits[ids[t] as usize] - max - z.ln();
    }
    loss
}

/// Central finite-difference gradient of the loss with respect to the
/// one-hot input at suffix index `position`.
pub fn finite_difference_gradient(
    params: &ToyLmParams,
    inst: &AttackInstance,
    position: usize,
    step: f64,
) -> Vec<f64> {
    let v = params.vocab_size();
    let at = inst.suffix_positions().start + position;
    let mut onehot = vec![0.0; v];
    onehot[inst.suffix().tokens()[position] as usize] = 1.0;
    (0..v)
        .map(|tok| {
            let mut plus = onehot.clone();
            plus[tok] += step;
            let mut minus = onehot.clone();
            minus[tok] -= step;
            (relaxed_loss(params, inst, at, &plus) - relaxed_loss(params, inst, at, &minus))
                / (2.0 * step)
        })
        .collect()
}

/// `max_i |a_i - b_i| / max(max_i |a_i|, max_i |b_i|)`; 0 when both vanish.
pub fn max_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(b)
        .fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}
