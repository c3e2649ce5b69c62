//! The optimization loops: vanilla GCG, probe sampling and their annealed
//! variants.
//!
//! Randomness: the run owns a root [`SeededRng`]. Iteration `t` works from
//! the child stream `root.derive(t)`, which in turn hands out separate
//! streams for candidate generation, probe selection and the annealing
//! acceptance draw. GCG and probe sampling therefore see the same candidate
//! batch for the same seed and iteration.

mod anneal;
mod candidates;
mod gcg;
mod probe;
mod run;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMethod;
use crate::error::{Error, Result};
use crate::tokens::TokenId;

pub use anneal::{anneal_step, effective_batch_size, metropolis_accept, temperature};
pub use candidates::{generate_candidates, Candidate, CandidateBatch};
pub use gcg::gcg_step;
pub use probe::probe_sampling_step;
pub use run::{run, RunError, RunOutcome};

#[cfg(doc)]
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Gcg,
    Ps,
    GcgAnneal,
    PsAnneal,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Gcg, Mode::Ps, Mode::GcgAnneal, Mode::PsAnneal];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Gcg => "gcg",
            Mode::Ps => "ps",
            Mode::GcgAnneal => "gcg-anneal",
            Mode::PsAnneal => "ps-anneal",
        }
    }

    pub fn uses_draft(self) -> bool {
        matches!(self, Mode::Ps | Mode::PsAnneal)
    }

    pub fn anneals(self) -> bool {
        matches!(self, Mode::GcgAnneal | Mode::PsAnneal)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown mode `{s}`")))
    }
}

/// How the filtered-set size is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FilterPolicy {
    /// Agreement measured on the probe set every iteration.
    #[default]
    Adaptive,
    /// A constant agreement score.
    Fixed(f64),
}

/// Batch-size decay plus Metropolis acceptance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealSchedule {
    pub initial_temperature: f64,
    pub temperature_decay: f64,
    pub batch_decay: f64,
    /// Smallest effective batch; `None` means `B / 8`.
    pub batch_floor: Option<usize>,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self {
            initial_temperature: 1.0,
            temperature_decay: 0.99,
            batch_decay: 0.995,
            batch_floor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub batch_size: usize,
    pub top_k: usize,
    pub reduction: f64,
    pub probe_size: usize,
    pub steps: usize,
    pub correlation: CorrelationMethod,
    pub filter: FilterPolicy,
    pub anneal: AnnealSchedule,
    /// Run the draft batch and the target probe evaluation concurrently.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            batch_size: 512,
            top_k: 256,
            reduction: 8.0,
            probe_size: 512 / 16,
            steps: 500,
            correlation: CorrelationMethod::Spearman,
            filter: FilterPolicy::Adaptive,
            anneal: AnnealSchedule::default(),
            parallel: true,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.batch_size == 0 {
            return fail("batch_size must be at least 1".into());
        }
        if self.probe_size == 0 || self.probe_size > self.batch_size {
            return fail(format!(
                "probe_size {} not in [1, batch_size = {}]",
                self.probe_size, self.batch_size
            ));
        }
        if self.top_k == 0 || self.top_k > vocab_size {
            return fail(format!("top_k {} not in [1, V = {vocab_size}]", self.top_k));
        }
        if !self.reduction.is_finite() || self.reduction < 1.0 {
            return fail(format!("reduction {} must be a finite value >= 1", self.reduction));
        }
        if self.steps == 0 {
            return fail("steps must be at least 1".into());
        }
        if let FilterPolicy::Fixed(a) = self.filter {
            if !(0.0..=1.0).contains(&a) {
                return fail(format!("fixed agreement {a} not in [0, 1]"));
            }
        }
        let s = &self.anneal;
        if !s.initial_temperature.is_finite() || s.initial_temperature < 0.0 {
            return fail("anneal.initial_temperature must be finite and >= 0".into());
        }
        for (name, v) in [
            ("anneal.temperature_decay", s.temperature_decay),
            ("anneal.batch_decay", s.batch_decay),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return fail(format!("{name} {v} not in (0, 1]"));
            }
        }
        if let Some(f) = s.batch_floor {
            if f == 0 || f > self.batch_size {
                return fail(format!("anneal.batch_floor {f} not in [1, batch_size]"));
            }
        }
        Ok(())
    }
}

/// Filtered-set size: `clamp(floor((1 - alpha) * B / R), 1, B)`.
pub fn filtered_size(alpha: f64, batch_size: usize, reduction: f64) -> usize {
    let raw = ((1.0 - alpha) * batch_size as f64 / reduction).floor();
    if raw.is_nan() || raw < 1.0 {
        1
    } else {
        (raw as usize).min(batch_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossSummary {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl LossSummary {
    pub fn of(xs: &[f64]) -> Self {
        let min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        Self { min, mean, max }
    }
}

/// Probe-sampling state for one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe_indices: Vec<usize>,
    pub alpha: f64,
    /// The correlation was degenerate and `alpha` fell back to 0.5.
    pub alpha_fallback: bool,
    pub filtered_size: usize,
    pub filtered_indices: Vec<usize>,
    /// Filtered candidates that were already scored as probes.
    pub overlap: usize,
    pub draft_losses: LossSummary,
}

/// What one iteration did. Everything except `wall_ms` is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub iteration: usize,
    pub mode: Mode,
    pub batch_size: usize,
    pub best_index: usize,
    /// Target loss of the selected candidate.
    pub best_loss: f64,
    pub target_evals: usize,
    pub draft_evals: usize,
    pub target_flops: f64,
    pub draft_flops: f64,
    pub gradient_flops: f64,
    pub probe: Option<ProbeReport>,
    pub temperature: Option<f64>,
    pub accepted: bool,
    /// Suffix and its target loss after the step.
    pub suffix: Vec<TokenId>,
    pub current_loss: f64,
    pub wall_ms: f64,
}

/// First index of the smallest value among `Some` entries.
pub(crate) fn argmin_evaluated(losses: &[Option<f64>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, l) in losses.iter().enumerate() {
        if let Some(l) = *l {
            if best.is_none_or(|(_, b)| l < b) {
                best = Some((i, l));
            }
        }
    }
    best
}
