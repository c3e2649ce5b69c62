//! One search run from a config: build the task, search, log, summarize.

use std::fs;
use std::path::Path;

use probe_core::search::run;
use probe_core::tokens::TokenId;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::judge::SuccessJudge;
use crate::runlog::{write_jsonl, RunLogRecord, RunMeta, Summary};
use crate::task::build_task;

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub summary: Summary,
    pub records: Vec<RunLogRecord>,
    pub best_suffix: Vec<TokenId>,
}

pub const LOG_FILE: &str = "run.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLE_FILE: &str = "summary.txt";

/// Runs the experiment. When `cfg.out` is set the log and summaries are
/// written there, also when the search fails partway.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    let task = build_task(cfg)?;
    let judge = SuccessJudge::from_config(&cfg.judge, task.instance.target().len())?;
    let search = cfg.search_config();

    let mut judge_error = None;
    let mut succeeded = false;
    let outcome = run(
        cfg.mode,
        &task.target,
        task.draft.as_ref(),
        &task.instance,
        &search,
        |inst| match &task.target_params {
            Some(model) => match judge.judge_instance(model, inst) {
                Ok(ok) => {
                    succeeded = ok;
                    ok
                }
                Err(e) => {
                    judge_error = Some(e);
                    true
                }
            },
            None => false,
        },
    );
    if let Some(e) = judge_error {
        return Err(e);
    }

    let meta = |initial_loss, initial_flops, error: Option<String>| RunMeta {
        mode: cfg.mode,
        seed: cfg.seed,
        batch_size: search.batch_size,
        initial_loss,
        initial_flops,
        success: succeeded,
        error,
    };

    match outcome {
        Ok(out) => {
            let records: Vec<RunLogRecord> = out.records.iter().map(RunLogRecord::from).collect();
            let summary = Summary::from_records(
                &meta(out.initial_loss, out.initial_flops, None),
                &records,
            );
            if let Some(dir) = &cfg.out {
                write_outputs(dir, &records, &summary)?;
            }
            log::info!(
                "{} seed {}: {} iterations, loss {:.4} -> {:.4}, success {}",
                cfg.mode,
                cfg.seed,
                summary.iterations,
                summary.initial_loss,
                out.final_loss,
                summary.success
            );
            Ok(ExperimentResult {
                summary,
                records,
                best_suffix: out.best_suffix,
            })
        }
        Err(failure) => {
            let records: Vec<RunLogRecord> =
                failure.records.iter().map(RunLogRecord::from).collect();
            if let Some(dir) = &cfg.out {
                let initial = records.first().map_or(f64::NAN, |r| r.current_loss);
                let summary = Summary::from_records(
                    &meta(initial, 0.0, Some(failure.error.to_string())),
                    &records,
                );
                write_outputs(dir, &records, &summary)?;
            }
            Err(HarnessError::Run {
                error: failure.error,
                iterations: records.len(),
            })
        }
    }
}

pub fn write_outputs(
    dir: &Path,
    records: &[RunLogRecord],
    summary: &Summary,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir)?;
    write_jsonl(&dir.join(LOG_FILE), records)?;
    let json =
        serde_json::to_string_pretty(summary).map_err(|e| HarnessError::Io(e.to_string()))?;
    fs::write(dir.join(SUMMARY_FILE), json + "\n")?;
    fs::write(dir.join(TABLE_FILE), summary.text_table())?;
    Ok(())
}
