//! Seeds × modes comparison.

use std::fs;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use probe_core::search::Mode;

use crate::config::ExperimentConfig;
use crate::error::HarnessError;
use crate::experiment::run_experiment;
use crate::runlog::Summary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeStats {
    pub mode: Mode,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    /// Over successful runs only.
    pub mean_iterations_to_success: Option<f64>,
    /// Pooled over every iteration of every run.
    pub mean_target_evals_per_iteration: f64,
    pub mean_alpha: Option<f64>,
    pub total_flops: f64,
    pub flops_per_iteration: f64,
    pub wall_ms: f64,
    pub wall_ms_per_iteration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ratio {
    pub mode: Mode,
    /// Baseline FLOPs per iteration over this mode's.
    pub flops_speedup: f64,
    /// Baseline wall time per iteration over this mode's.
    pub time_speedup: f64,
    /// This mode's target evals per iteration over the baseline's.
    pub target_eval_ratio: f64,
    pub success_rate_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub baseline: Mode,
    pub seeds: Vec<u64>,
    pub modes: Vec<ModeStats>,
    pub ratios: Vec<Ratio>,
    /// Every run, sorted by mode order then seed.
    pub runs: Vec<Summary>,
}

pub fn mode_stats(mode: Mode, runs: &[&Summary]) -> ModeStats {
    let n = runs.len();
    let successes = runs.iter().filter(|s| s.success).count();
    let iters: usize = runs.iter().map(|s| s.iterations).sum();
    let evals: usize = runs.iter().map(|s| s.total_target_evals).sum();
    let to_success: Vec<usize> = runs.iter().filter_map(|s| s.iterations_to_success).collect();
    let alphas: Vec<f64> = runs.iter().filter_map(|s| s.mean_alpha).collect();
    let total_flops: f64 = runs.iter().map(|s| s.total_flops).sum();
    let wall_ms: f64 = runs.iter().map(|s| s.wall_ms).sum();
    let per_iter = |x: f64| if iters == 0 { 0.0 } else { x / iters as f64 };
    ModeStats {
        mode,
        runs: n,
        successes,
        success_rate: if n == 0 { 0.0 } else { successes as f64 / n as f64 },
        mean_iterations_to_success: (!to_success.is_empty())
            .then(|| to_success.iter().sum::<usize>() as f64 / to_success.len() as f64),
        mean_target_evals_per_iteration: per_iter(evals as f64),
        mean_alpha: (!alphas.is_empty()).then(|| alphas.iter().sum::<f64>() / alphas.len() as f64),
        total_flops,
        flops_per_iteration: per_iter(total_flops),
        wall_ms,
        wall_ms_per_iteration: per_iter(wall_ms),
    }
}

fn ratio(base: &ModeStats, m: &ModeStats) -> Ratio {
    let div = |a: f64, b: f64| if b == 0.0 { f64::NAN } else { a / b };
    Ratio {
        mode: m.mode,
        flops_speedup: div(base.flops_per_iteration, m.flops_per_iteration),
        time_speedup: div(base.wall_ms_per_iteration, m.wall_ms_per_iteration),
        target_eval_ratio: div(
            m.mean_target_evals_per_iteration,
            base.mean_target_evals_per_iteration,
        ),
        success_rate_delta: m.success_rate - base.success_rate,
    }
}

impl BenchReport {
    pub fn from_runs(modes: &[Mode], seeds: &[u64], mut runs: Vec<Summary>) -> Self {
        let order = |m: Mode| modes.iter().position(|&x| x == m).unwrap_or(usize::MAX);
        runs.sort_by_key(|s| (order(s.mode), s.seed));
        let stats: Vec<ModeStats> = modes
            .iter()
            .map(|&m| {
                let rs: Vec<&Summary> = runs.iter().filter(|s| s.mode == m).collect();
                mode_stats(m, &rs)
            })
            .collect();
        let ratios = stats.iter().map(|m| ratio(&stats[0], m)).collect();
        let mut seeds = seeds.to_vec();
        seeds.sort_unstable();
        Self {
            baseline: modes[0],
            seeds,
            modes: stats,
            ratios,
            runs,
        }
    }

    pub fn text_table(&self) -> String {
        let fmt_opt = |x: Option<f64>, p: usize| x.map_or("-".into(), |v| format!("{v:.p$}"));
        let x = |v: f64| {
            if v.is_finite() {
                format!("({v:.1}×)")
            } else {
                "(-)".into()
            }
        };
        let mut s = format!(
            "{:<12}{:>6}{:>10}{:>12}{:>14}{:>8}{:>16}{:>12}\n",
            "mode", "runs", "success", "iters->ok", "tgt evals/it", "alpha", "FLOPs/it", "ms/it"
        );
        for (m, r) in self.modes.iter().zip(&self.ratios) {
            s.push_str(&format!(
                "{:<12}{:>6}{:>9.1}%{:>12}{:>14.2}{:>8}{:>16}{:>12.3}\n",
                m.mode.to_string(),
                m.runs,
                100.0 * m.success_rate,
                fmt_opt(m.mean_iterations_to_success, 1),
                m.mean_target_evals_per_iteration,
                fmt_opt(m.mean_alpha, 3),
                format!("{:.3e} {}", m.flops_per_iteration, x(r.flops_speedup)),
                m.wall_ms_per_iteration,
            ));
        }
        s.push_str(&format!("\nrelative to {}:\n", self.baseline));
        for r in &self.ratios[1..] {
            s.push_str(&format!(
                "{:<12}FLOPs {}  time {}  target evals {:.3}  success {:+.1} pp\n",
                r.mode.to_string(),
                x(r.flops_speedup),
                x(r.time_speedup),
                r.target_eval_ratio,
                100.0 * r.success_rate_delta
            ));
        }
        s
    }
}

/// Runs every (mode, seed) pair from the config. Per-run artifacts go to
/// `out/<mode>/seed-<n>/`, the report to `out/bench.json` and `out/bench.txt`.
pub fn bench_compare(cfg: &ExperimentConfig) -> Result<BenchReport, HarnessError> {
    let modes = if cfg.modes.is_empty() {
        vec![Mode::Gcg, Mode::Ps]
    } else {
        cfg.modes.clone()
    };
    if modes.len() < 2 {
        return Err(HarnessError::Config("bench needs at least two modes".into()));
    }
    let seeds = if cfg.seeds.is_empty() {
        vec![cfg.seed]
    } else {
        cfg.seeds.clone()
    };
    let jobs: Vec<ExperimentConfig> = modes
        .iter()
        .flat_map(|&mode| {
            seeds.iter().map(move |&seed| {
                let mut c = cfg.clone();
                c.mode = mode;
                c.seed = seed;
                c.out = cfg
                    .out
                    .as_ref()
                    .map(|d| d.join(mode.to_string()).join(format!("seed-{seed}")));
                c
            })
        })
        .collect();
    for j in &jobs {
        j.validate()?;
    }

    let results: Mutex<Vec<Option<Result<Summary, HarnessError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    let next = AtomicUsize::new(0);
    let worker = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        if i >= jobs.len() {
            break;
        }
        let r = run_experiment(&jobs[i]).map(|e| e.summary);
        results.lock().expect("results lock")[i] = Some(r);
    };
    let threads = if cfg.bench_parallel {
        std::thread::available_parallelism()
            .map_or(1, |n| n.get())
            .min(jobs.len())
    } else {
        1
    };
    std::thread::scope(|s| {
        for _ in 1..threads {
            s.spawn(worker);
        }
        worker();
    });

    let mut runs = Vec::with_capacity(jobs.len());
    for r in results.into_inner().expect("results lock") {
        runs.push(r.expect("every job ran")?);
    }
    let report = BenchReport::from_runs(&modes, &seeds, runs);
    if let Some(dir) = &cfg.out {
        fs::create_dir_all(dir)?;
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))?;
        fs::write(dir.join("bench.json"), json + "\n")?;
        fs::write(dir.join("bench.txt"), report.text_table())?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(mode: Mode, seed: u64, success: bool, iters: usize, evals: usize) -> Summary {
        Summary {
            mode,
            seed,
            batch_size: 8,
            iterations: iters,
            initial_loss: 1.0,
            final_loss: Some(0.5),
            best_loss: 0.5,
            success,
            iterations_to_success: success.then_some(iters),
            total_target_evals: evals,
            total_draft_evals: 0,
            mean_target_evals_per_iteration: Some(evals as f64 / iters as f64),
            mean_alpha: None,
            total_target_flops: 100.0 * evals as f64,
            total_draft_flops: 0.0,
            total_gradient_flops: 0.0,
            total_flops: 100.0 * evals as f64,
            flops_per_iteration: Some(100.0 * evals as f64 / iters as f64),
            wall_ms: iters as f64,
            error: None,
        }
    }

    #[test]
    fn identical_modes_have_unit_ratios() {
        let runs = vec![
            summary(Mode::Gcg, 1, true, 4, 32),
            summary(Mode::Gcg, 2, false, 10, 80),
        ];
        let mut both = runs.clone();
        both.extend(runs.iter().cloned().map(|mut s| {
            s.mode = Mode::GcgAnneal;
            s
        }));
        let r = BenchReport::from_runs(&[Mode::Gcg, Mode::GcgAnneal], &[2, 1], both);
        for q in &r.ratios {
            assert_eq!(q.flops_speedup, 1.0);
            assert_eq!(q.time_speedup, 1.0);
            assert_eq!(q.target_eval_ratio, 1.0);
            assert_eq!(q.success_rate_delta, 0.0);
        }
        assert!(r.text_table().contains("(1.0×)"));
        assert_eq!(r.seeds, vec![1, 2]);
    }

    #[test]
    fn aggregation_sorted_and_pooled() {
        let runs = vec![
            summary(Mode::Ps, 2, true, 2, 4),
            summary(Mode::Gcg, 2, true, 2, 16),
            summary(Mode::Gcg, 1, false, 6, 48),
            summary(Mode::Ps, 1, false, 6, 12),
        ];
        let r = BenchReport::from_runs(&[Mode::Gcg, Mode::Ps], &[1, 2], runs);
        let order: Vec<(Mode, u64)> = r.runs.iter().map(|s| (s.mode, s.seed)).collect();
        assert_eq!(
            order,
            vec![(Mode::Gcg, 1), (Mode::Gcg, 2), (Mode::Ps, 1), (Mode::Ps, 2)]
        );
        assert_eq!(r.modes[0].mean_target_evals_per_iteration, 8.0);
        assert_eq!(r.modes[1].mean_target_evals_per_iteration, 2.0);
        assert_eq!(r.modes[1].success_rate, 0.5);
        assert_eq!(r.modes[1].mean_iterations_to_success, Some(2.0));
        assert_eq!(r.ratios[1].flops_speedup, 4.0);
        assert_eq!(r.ratios[1].target_eval_ratio, 0.25);
    }
}
