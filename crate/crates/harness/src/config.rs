//! Experiment configuration (JSON).
//!
//! ```json
//! {
//!   "mode": "ps",
//!   "seed": 3,
//!   "search": { "batch_size": 128, "top_k": 16, "probe_size": 8, "reduction": 8, "steps": 200 },
//!   "task": {
//!     "vocab_size": 64, "prompt_len": 4, "suffix_len": 8, "target_len": 4,
//!     "target_model": { "embed_dim": 16, "hidden_dim": 32, "context": 12, "decay": 0.9 },
//!     "draft_model": { "kind": "truncated", "embed_dim": 8, "hidden_dim": 16 }
//!   },
//!   "scorer": "toy",
//!   "judge": { "mode": "target_prefix", "prefix_len": 4 },
//!   "out": "runs/example"
//! }
//! ```
//!
//! Every field except `task` has a default. `search` takes every
//! [`SearchConfig`] field; its `seed` is overwritten by the top-level `seed`.
//! A bench config adds `modes` and `seeds`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use probe_core::search::{Mode, SearchConfig};
use probe_core::tokens::{SuffixInit, TokenId};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub search: SearchConfig,
    pub task: TaskConfig,
    #[serde(default)]
    pub scorer: ScorerSpec,
    /// Draft scorer for probe-sampling modes; defaults to the toy draft model.
    #[serde(default)]
    pub draft_scorer: ScorerSpec,
    #[serde(default)]
    pub judge: JudgeConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Bench only: modes to compare, the first is the baseline.
    #[serde(default)]
    pub modes: Vec<Mode>,
    /// Bench only: seeds to run per mode.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Bench only: run seeds on multiple threads.
    #[serde(default = "default_true")]
    pub bench_parallel: bool,
}

fn default_mode() -> Mode {
    Mode::Gcg
}

fn default_true() -> bool {
    true
}

/// `"toy"` or `"bridge:<command line>"`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ScorerSpec {
    #[default]
    Toy,
    Bridge(String),
}

impl std::str::FromStr for ScorerSpec {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        if s == "toy" {
            Ok(ScorerSpec::Toy)
        } else if let Some(cmd) = s.strip_prefix("bridge:") {
            if cmd.trim().is_empty() {
                return Err(HarnessError::Config("bridge scorer needs a command".into()));
            }
            Ok(ScorerSpec::Bridge(cmd.to_string()))
        } else {
            Err(HarnessError::Config(format!(
                "scorer `{s}` is neither `toy` nor `bridge:<command>`"
            )))
        }
    }
}

impl Serialize for ScorerSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ScorerSpec::Toy => s.serialize_str("toy"),
            ScorerSpec::Bridge(cmd) => s.serialize_str(&format!("bridge:{cmd}")),
        }
    }
}

impl<'de> Deserialize<'de> for ScorerSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDims {
    pub embed_dim: usize,
    pub hidden_dim: usize,
    #[serde(default = "default_context")]
    pub context: usize,
    #[serde(default = "default_decay")]
    pub decay: f64,
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
}

fn default_context() -> usize {
    12
}

fn default_decay() -> f64 {
    0.9
}

fn default_init_scale() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DraftModel {
    /// Leading block of the target's parameters.
    Truncated { embed_dim: usize, hidden_dim: usize },
    /// Freshly initialized model with its own dimensions.
    Independent(ModelDims),
    /// The target model itself.
    Same,
    /// Parameters loaded from a saved model file.
    File { path: PathBuf },
}

impl Default for DraftModel {
    fn default() -> Self {
        DraftModel::Truncated {
            embed_dim: 8,
            hidden_dim: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskConfig {
    pub vocab_size: usize,
    #[serde(default = "default_prompt_len")]
    pub prompt_len: usize,
    pub suffix_len: usize,
    #[serde(default = "default_target_len")]
    pub target_len: usize,
    #[serde(default)]
    pub target_model: Option<ModelDims>,
    #[serde(default)]
    pub target_model_file: Option<PathBuf>,
    #[serde(default)]
    pub draft_model: DraftModel,
    /// Explicit prompt ids; random when absent.
    #[serde(default)]
    pub prompt: Option<Vec<TokenId>>,
    /// Explicit target ids; otherwise the target model's greedy continuation
    /// of the prompt plus a hidden random suffix, so a solution exists.
    #[serde(default)]
    pub target: Option<Vec<TokenId>>,
    #[serde(default)]
    pub suffix_init: SuffixInit,
    /// Optional id -> text table for rendering generations.
    #[serde(default)]
    pub display: Option<Vec<String>>,
}

fn default_prompt_len() -> usize {
    4
}

fn default_target_len() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum JudgeConfig {
    TargetPrefix {
        #[serde(default)]
        prefix_len: Option<usize>,
    },
    PhraseMatch {
        #[serde(default)]
        phrases: Option<Vec<String>>,
        #[serde(default)]
        phrases_file: Option<PathBuf>,
        #[serde(default = "default_decode_len")]
        decode_len: usize,
    },
    /// Never stop early.
    None,
}

fn default_decode_len() -> usize {
    8
}

impl Default for JudgeConfig {
    fn default() -> Self {
        JudgeConfig::TargetPrefix { prefix_len: None }
    }
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub scorer: Option<ScorerSpec>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self, HarnessError> {
        serde_json::from_str(text).map_err(|e| HarnessError::ConfigAt {
            path: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_json_str(&text, &path.display().to_string())?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Relative model and phrase file paths are taken relative to the config file.
    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = self.task.target_model_file.as_mut() {
            fix(p);
        }
        if let DraftModel::File { path } = &mut self.task.draft_model {
            fix(path);
        }
        if let JudgeConfig::PhraseMatch {
            phrases_file: Some(p),
            ..
        } = &mut self.judge
        {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.mode {
            self.mode = m;
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(n) = o.steps {
            self.search.steps = n;
        }
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
        if let Some(s) = &o.scorer {
            self.scorer = s.clone();
        }
    }

    /// Search settings with the top-level seed applied.
    pub fn search_config(&self) -> SearchConfig {
        SearchConfig {
            seed: self.seed,
            ..self.search.clone()
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let t = &self.task;
        let bad = |m: String| Err(HarnessError::Config(m));
        if t.vocab_size < 2 {
            return bad(format!("task.vocab_size {} must be at least 2", t.vocab_size));
        }
        if t.suffix_len == 0 {
            return bad("task.suffix_len must be at least 1".into());
        }
        if t.prompt.is_none() && t.prompt_len == 0 {
            return bad("task.prompt_len must be at least 1".into());
        }
        if t.target.is_none() && t.target_len == 0 {
            return bad("task.target_len must be at least 1".into());
        }
        for (name, ids) in [("task.prompt", &t.prompt), ("task.target", &t.target)] {
            if let Some(ids) = ids {
                if ids.is_empty() {
                    return bad(format!("{name} must not be empty"));
                }
                if let Some(id) = ids.iter().find(|&&id| id as usize >= t.vocab_size) {
                    return bad(format!("{name} contains token id {id} >= vocab_size"));
                }
            }
        }
        if let Some(d) = &t.display {
            if d.len() != t.vocab_size {
                return bad(format!(
                    "task.display has {} entries, vocab_size is {}",
                    d.len(),
                    t.vocab_size
                ));
            }
        }
        if self.scorer == ScorerSpec::Toy
            && t.target_model.is_none()
            && t.target_model_file.is_none()
        {
            return bad("toy scorer needs task.target_model or task.target_model_file".into());
        }
        if matches!(self.scorer, ScorerSpec::Bridge(_)) && t.target.is_none() {
            return bad("bridge scorer needs an explicit task.target".into());
        }
        if matches!(self.judge, JudgeConfig::TargetPrefix { .. } | JudgeConfig::PhraseMatch { .. })
            && self.scorer != ScorerSpec::Toy
        {
            return bad("success judging decodes with the toy target; use judge mode `none` with bridge scorers".into());
        }
        if let JudgeConfig::PhraseMatch {
            phrases: Some(p), ..
        } = &self.judge
        {
            if p.is_empty() {
                return bad("judge.phrases must not be empty".into());
            }
        }
        self.search_config()
            .validate(t.vocab_size)
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}
