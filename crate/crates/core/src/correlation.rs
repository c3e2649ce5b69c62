//! Agreement between draft and target loss rankings, mapped onto `[0, 1]`.
//!
//! The Spearman score is `1 - 3 * sum(d_i^2) / (k (k^2 - 1))` over rank
//! differences `d_i`, which equals `(1 + rho) / 2` for the classical
//! coefficient. The Pearson, Kendall tau-b and Goodman-Kruskal gamma
//! alternatives are normalized the same way, as `(c + 1) / 2`.
//!
//! Ties: average ranks for Spearman, tau-b correction for Kendall, tied pairs
//! dropped for gamma. Inputs where either list is constant are degenerate.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationMethod {
    #[default]
    Spearman,
    Pearson,
    Kendall,
    Gamma,
}

impl CorrelationMethod {
    pub const ALL: [CorrelationMethod; 4] = [
        CorrelationMethod::Spearman,
        CorrelationMethod::Pearson,
        CorrelationMethod::Kendall,
        CorrelationMethod::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CorrelationMethod::Spearman => "spearman",
            CorrelationMethod::Pearson => "pearson",
            CorrelationMethod::Kendall => "kendall",
            CorrelationMethod::Gamma => "gamma",
        }
    }
}

impl fmt::Display for CorrelationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorrelationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown correlation method `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementScore {
    pub value: f64,
    pub method: CorrelationMethod,
    pub sample_size: usize,
}

impl AgreementScore {
    fn from_coefficient(c: f64, method: CorrelationMethod, k: usize) -> Self {
        Self {
            value: ((c + 1.0) / 2.0).clamp(0.0, 1.0),
            method,
            sample_size: k,
        }
    }
}

pub fn agreement(method: CorrelationMethod, a: &[f64], b: &[f64]) -> Result<AgreementScore> {
    match method {
        CorrelationMethod::Spearman => spearman_alpha(a, b),
        CorrelationMethod::Pearson => pearson_alpha(a, b),
        CorrelationMethod::Kendall => kendall_alpha(a, b),
        CorrelationMethod::Gamma => gamma_alpha(a, b),
    }
}

fn check_inputs(a: &[f64], b: &[f64]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!(
            "agreement inputs differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InsufficientSample(a.len()));
    }
    if let Some(x) = a.iter().chain(b).find(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("agreement input {x}")));
    }
    Ok(a.len())
}

fn is_constant(xs: &[f64]) -> bool {
    xs.iter().all(|&x| x == xs[0])
}

/// 1-based ranks; tied values share the average of the ranks they span.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && xs[order[end]] == xs[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman_alpha(a: &[f64], b: &[f64]) -> Result<AgreementScore> {
    let k = check_inputs(a, b)?;
    if is_constant(a) || is_constant(b) {
        return Err(Error::Degenerate("all values tied in one list".into()));
    }
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let sum_d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    let kf = k as f64;
    let denom = kf * (kf * kf - 1.0);
    let value = ((denom - 3.0 * sum_d2) / denom).clamp(0.0, 1.0);
    Ok(AgreementScore {
        value,
        method: CorrelationMethod::Spearman,
        sample_size: k,
    })
}

pub fn pearson_alpha(a: &[f64], b: &[f64]) -> Result<AgreementScore> {
    let k = check_inputs(a, b)?;
    let n = k as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 || is_constant(a) || is_constant(b) {
        return Err(Error::Degenerate("zero variance".into()));
    }
    let r = (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0);
    Ok(AgreementScore::from_coefficient(r, CorrelationMethod::Pearson, k))
}

/// Pair counts behind Kendall's tau-b and Goodman-Kruskal gamma.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    pub total: u64,
    pub concordant: u64,
    pub discordant: u64,
    /// Pairs tied in `a` (including those also tied in `b`).
    pub tied_a: u64,
    /// Pairs tied in `b` (including those also tied in `a`).
    pub tied_b: u64,
    pub tied_both: u64,
}

fn tie_pairs<T: Copy>(sorted: &[T], eq: impl Fn(T, T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(w[0], w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort `xs` in place, returning the number of strict inversions.
fn sort_count_inversions(xs: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = xs.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_count_inversions(&mut xs[..mid], buf);
    swaps += sort_count_inversions(&mut xs[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if xs[j] < xs[i] {
            swaps += (mid - i) as u64;
            buf.push(xs[j]);
            j += 1;
        } else {
            buf.push(xs[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&xs[i..mid]);
    buf.extend_from_slice(&xs[j..n]);
    xs.copy_from_slice(buf);
    swaps
}

/// Concordance counts in O(k log k) (Knight's algorithm).
pub fn pair_counts(a: &[f64], b: &[f64]) -> PairCounts {
    let n = a.len() as u64;
    let total = n * n.saturating_sub(1) / 2;
    let mut order: Vec<usize> = (0..a.len()).collect();
    order.sort_by(|&i, &j| {
        a[i].total_cmp(&a[j])
            .then_with(|| b[i].total_cmp(&b[j]))
    });
    let tied_a = tie_pairs(&order, |i, j| a[i] == a[j]);
    let tied_both = tie_pairs(&order, |i, j| a[i] == a[j] && b[i] == b[j]);
    let mut bs: Vec<f64> = order.iter().map(|&i| b[i]).collect();
    let mut buf = Vec::with_capacity(bs.len());
    let discordant = sort_count_inversions(&mut bs, &mut buf);
    let tied_b = tie_pairs(&bs, |x, y| x.partial_cmp(&y) == Some(Ordering::Equal));
    let concordant = total + tied_both - tied_a - tied_b - discordant;
    PairCounts {
        total,
        concordant,
        discordant,
        tied_a,
        tied_b,
        tied_both,
    }
}

pub fn kendall_alpha(a: &[f64], b: &[f64]) -> Result<AgreementScore> {
    let k = check_inputs(a, b)?;
    let pc = pair_counts(a, b);
    let left = (pc.total - pc.tied_a) as f64;
    let right = (pc.total - pc.tied_b) as f64;
    if left == 0.0 || right == 0.0 {
        return Err(Error::Degenerate("all pairs tied in one list".into()));
    }
    let tau = (pc.concordant as f64 - pc.discordant as f64) / (left * right).sqrt();
    Ok(AgreementScore::from_coefficient(
        tau.clamp(-1.0, 1.0),
        CorrelationMethod::Kendall,
        k,
    ))
}

pub fn gamma_alpha(a: &[f64], b: &[f64]) -> Result<AgreementScore> {
    let k = check_inputs(a, b)?;
    let pc = pair_counts(a, b);
    let untied = pc.concordant + pc.discordant;
    if untied == 0 {
        return Err(Error::Degenerate("no untied pairs".into()));
    }
    let gamma = (pc.concordant as f64 - pc.discordant as f64) / untied as f64;
    Ok(AgreementScore::from_coefficient(gamma, CorrelationMethod::Gamma, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL: [CorrelationMethod; 4] = CorrelationMethod::ALL;

    #[test]
    fn spearman_fixed_points() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(spearman_alpha(&a, &a).unwrap().value, 1.0);
        assert_eq!(spearman_alpha(&a, &[3.0, 2.0, 1.0]).unwrap().value, 0.0);
        let s = spearman_alpha(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(s.value, 0.9);
        assert_eq!(s.sample_size, 4);
    }

    #[test]
    fn pearson_examples() {
        let a = [1.0, 2.0, 3.0, 7.5];
        let b: Vec<f64> = a.iter().map(|x| 2.0 * x + 3.0).collect();
        assert!((pearson_alpha(&a, &b).unwrap().value - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        assert!(pearson_alpha(&a, &neg).unwrap().value.abs() < 1e-15);
        let p = pearson_alpha(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap();
        assert!((p.value - 0.75).abs() < 1e-15);
        assert!(matches!(
            pearson_alpha(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn kendall_and_gamma_worked_example() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [1.0, 2.0, 4.0, 3.0];
        let pc = pair_counts(&a, &b);
        assert_eq!((pc.concordant, pc.discordant), (5, 1));
        assert!((kendall_alpha(&a, &b).unwrap().value - 5.0 / 6.0).abs() < 1e-15);
        assert!((gamma_alpha(&a, &b).unwrap().value - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn identical_and_reversed() {
        let a = [0.3, 1.7, -2.0, 5.5, 0.0];
        let rev: Vec<f64> = a.iter().map(|x| -x).collect();
        for m in ALL {
            assert_eq!(agreement(m, &a, &a).unwrap().value, 1.0, "{m}");
            assert!(agreement(m, &a, &rev).unwrap().value.abs() < 1e-15, "{m}");
        }
    }

    #[test]
    fn input_errors() {
        for m in ALL {
            assert_eq!(
                agreement(m, &[1.0], &[2.0]).unwrap_err(),
                Error::InsufficientSample(1)
            );
            assert!(matches!(
                agreement(m, &[1.0, f64::NAN], &[2.0, 3.0]),
                Err(Error::NonFinite(_))
            ));
            assert!(matches!(
                agreement(m, &[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]),
                Err(Error::Degenerate(_))
            ));
            assert!(matches!(
                agreement(m, &[1.0, 2.0], &[1.0, 2.0, 3.0]),
                Err(Error::Shape(_))
            ));
        }
    }

    #[test]
    fn ties_use_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        // Duplicate losses: ranks (1, 2.5, 2.5, 4) vs (1, 2, 3, 4), sum d^2 = 0.5.
        let s = spearman_alpha(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.value, 1.0 - 1.5 / 60.0);
    }

    #[test]
    fn tau_b_tie_correction() {
        // a has one tied pair, b none: C=5, D=0, n0=6, n1=1, n2=0.
        let a = [1.0, 1.0, 2.0, 3.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let pc = pair_counts(&a, &b);
        assert_eq!((pc.concordant, pc.discordant, pc.tied_a), (5, 0, 1));
        let tau = 5.0 / (5.0f64 * 6.0).sqrt();
        assert!((kendall_alpha(&a, &b).unwrap().value - (tau + 1.0) / 2.0).abs() < 1e-15);
        assert_eq!(gamma_alpha(&a, &b).unwrap().value, 1.0);
    }

    #[test]
    fn parse_method_names() {
        for m in ALL {
            assert_eq!(m.name().parse::<CorrelationMethod>().unwrap(), m);
        }
        assert!("spearmanr".parse::<CorrelationMethod>().is_err());
    }
}
