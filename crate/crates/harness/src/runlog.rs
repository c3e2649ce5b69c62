//! Run logs (JSON lines) and run summaries.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use probe_core::search::{Mode, StepRecord};
use probe_core::tokens::TokenId;

use crate::error::HarnessError;

/// One line of the run log. Fields that do not apply are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogRecord {
    pub iteration: usize,
    pub mode: Mode,
    pub batch_size: usize,
    pub alpha: Option<f64>,
    pub alpha_fallback: Option<bool>,
    pub probe_size: Option<usize>,
    pub filtered_size: Option<usize>,
    pub overlap: Option<usize>,
    pub best_index: usize,
    pub best_loss: f64,
    pub current_loss: f64,
    pub accepted: bool,
    pub temperature: Option<f64>,
    pub target_evals: usize,
    pub draft_evals: usize,
    pub target_flops: f64,
    pub draft_flops: f64,
    pub gradient_flops: f64,
    pub wall_ms: f64,
    pub suffix: Vec<TokenId>,
}

impl From<&StepRecord> for RunLogRecord {
    fn from(r: &StepRecord) -> Self {
        let p = r.probe.as_ref();
        Self {
            iteration: r.iteration,
            mode: r.mode,
            batch_size: r.batch_size,
            alpha: p.map(|p| p.alpha),
            alpha_fallback: p.map(|p| p.alpha_fallback),
            probe_size: p.map(|p| p.probe_indices.len()),
            filtered_size: p.map(|p| p.filtered_size),
            overlap: p.map(|p| p.overlap),
            best_index: r.best_index,
            best_loss: r.best_loss,
            current_loss: r.current_loss,
            accepted: r.accepted,
            temperature: r.temperature,
            target_evals: r.target_evals,
            draft_evals: r.draft_evals,
            target_flops: r.target_flops,
            draft_flops: r.draft_flops,
            gradient_flops: r.gradient_flops,
            wall_ms: r.wall_ms,
            suffix: r.suffix.clone(),
        }
    }
}

impl RunLogRecord {
    /// Copy with timing zeroed, for determinism comparisons.
    pub fn without_timing(&self) -> Self {
        Self {
            wall_ms: 0.0,
            ..self.clone()
        }
    }
}

pub fn write_jsonl(path: &Path, records: &[RunLogRecord]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| HarnessError::Io(e.to_string()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl(path: &Path) -> Result<Vec<RunLogRecord>, HarnessError> {
    let f = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| {
            HarnessError::Io(format!("{}:{}: {e}", path.display(), i + 1))
        })?);
    }
    Ok(out)
}

/// Per-run facts that do not come from the iteration records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub mode: Mode,
    pub seed: u64,
    pub batch_size: usize,
    pub initial_loss: f64,
    pub initial_flops: f64,
    pub success: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: Mode,
    pub seed: u64,
    pub batch_size: usize,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: Option<f64>,
    pub best_loss: f64,
    pub success: bool,
    pub iterations_to_success: Option<usize>,
    pub total_target_evals: usize,
    pub total_draft_evals: usize,
    pub mean_target_evals_per_iteration: Option<f64>,
    pub mean_alpha: Option<f64>,
    pub total_target_flops: f64,
    pub total_draft_flops: f64,
    pub total_gradient_flops: f64,
    pub total_flops: f64,
    pub flops_per_iteration: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl Summary {
    /// Summarize a run from its log records. Sums run in log order.
    pub fn from_records(meta: &RunMeta, records: &[RunLogRecord]) -> Self {
        let n = records.len();
        let total_target_evals: usize = records.iter().map(|r| r.target_evals).sum();
        let total_draft_evals: usize = records.iter().map(|r| r.draft_evals).sum();
        let alphas: Vec<f64> = records.iter().filter_map(|r| r.alpha).collect();
        let total_target_flops =
            meta.initial_flops + records.iter().map(|r| r.target_flops).sum::<f64>();
        let total_draft_flops: f64 = records.iter().map(|r| r.draft_flops).sum();
        let total_gradient_flops: f64 = records.iter().map(|r| r.gradient_flops).sum();
        let total_flops = total_target_flops + total_draft_flops + total_gradient_flops;
        let best_loss = records
            .iter()
            .map(|r| r.current_loss)
            .fold(meta.initial_loss, f64::min);
        Self {
            mode: meta.mode,
            seed: meta.seed,
            batch_size: meta.batch_size,
            iterations: n,
            initial_loss: meta.initial_loss,
            final_loss: records.last().map(|r| r.current_loss),
            best_loss,
            success: meta.success,
            iterations_to_success: if meta.success { Some(n) } else { None },
            total_target_evals,
            total_draft_evals,
            mean_target_evals_per_iteration: (n > 0).then(|| total_target_evals as f64 / n as f64),
            mean_alpha: (!alphas.is_empty())
                .then(|| alphas.iter().sum::<f64>() / alphas.len() as f64),
            total_target_flops,
            total_draft_flops,
            total_gradient_flops,
            total_flops,
            flops_per_iteration: (n > 0).then(|| total_flops / n as f64),
            wall_ms: records.iter().map(|r| r.wall_ms).sum(),
            error: meta.error.clone(),
        }
    }

    pub fn text_table(&self) -> String {
        let opt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.4}"));
        let mut s = String::new();
        let rows: Vec<(&str, String)> = vec![
            ("mode", self.mode.to_string()),
            ("seed", self.seed.to_string()),
            ("iterations", self.iterations.to_string()),
            ("initial loss", format!("{:.4}", self.initial_loss)),
            ("final loss", opt(self.final_loss)),
            ("best loss", format!("{:.4}", self.best_loss)),
            ("success", self.success.to_string()),
            (
                "iterations to success",
                self.iterations_to_success
                    .map_or("-".into(), |n| n.to_string()),
            ),
            ("target evals / iter", opt(self.mean_target_evals_per_iteration)),
            ("mean alpha", opt(self.mean_alpha)),
            ("target FLOPs", format!("{:.4e}", self.total_target_flops)),
            ("draft FLOPs", format!("{:.4e}", self.total_draft_flops)),
            ("gradient FLOPs", format!("{:.4e}", self.total_gradient_flops)),
            ("wall ms", format!("{:.1}", self.wall_ms)),
        ];
        for (k, v) in rows {
            s.push_str(&format!("{k:<24}{v}\n"));
        }
        if let Some(e) = &self.error {
            s.push_str(&format!("{:<24}{e}\n", "error"));
        }
        s
    }
}
