use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use probe_core::search::Mode;
use probe_harness::bench::bench_compare;
use probe_harness::config::{ExperimentConfig, Overrides, ScorerSpec};
use probe_harness::experiment::run_experiment;
use probe_harness::validate::{run_suite, SUITES};

/// Suffix search with gcg or probe sampling.
#[derive(Parser)]
#[command(name = "probe-search", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one search and write its log and summary.
    Run(RunArgs),
    /// Compare modes over several seeds.
    Bench(RunArgs),
    /// Run invariant suites: correlation, gradient, equivalence (default: all).
    Validate {
        suites: Vec<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// gcg, ps, gcg-anneal or ps-anneal.
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// `toy` or `bridge:<command>`.
    #[arg(long)]
    scorer: Option<String>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        let scorer = match &self.scorer {
            Some(s) => Some(s.parse::<ScorerSpec>()?),
            None => None,
        };
        cfg.apply(&Overrides {
            mode: self.mode,
            seed: self.seed,
            steps: self.steps,
            out: self.out.clone(),
            scorer,
        });
        cfg.validate()
            .with_context(|| format!("in {}", self.config.display()))?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = args.load()?;
            let result = run_experiment(&cfg)?;
            print!("{}", result.summary.text_table());
            if let Some(dir) = &cfg.out {
                println!("log written to {}", dir.display());
            }
        }
        Command::Bench(args) => {
            let cfg = args.load()?;
            let report = bench_compare(&cfg)?;
            print!("{}", report.text_table());
        }
        Command::Validate { suites } => {
            let names: Vec<String> = if suites.is_empty() {
                SUITES.iter().map(|s| s.to_string()).collect()
            } else {
                suites
            };
            let mut failed = 0;
            for name in &names {
                let report = run_suite(name)?;
                println!("{report}");
                if !report.passed() {
                    failed += 1;
                }
            }
            if failed > 0 {
                bail!("{failed} suite(s) failed");
            }
        }
    }
    Ok(())
}
