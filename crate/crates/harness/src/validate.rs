//! Invariant suites behind `probe-search validate`.

use std::fmt;
use std::sync::Arc;

use serde::Deserialize;

use probe_core::correlation::{agreement, CorrelationMethod};
use probe_core::oracle;
use probe_core::rng::SeededRng;
use probe_core::scoring::{ScorerHandle, ToyScorer};
use probe_core::search::{gcg_step, probe_sampling_step, FilterPolicy, SearchConfig};
use probe_core::tokens::{make_instance, AttackInstance, SuffixInit, TokenId, TokenSeq, Vocabulary};
use probe_core::toylm::{ToyLmDims, ToyLmParams};

use crate::error::HarnessError;

pub const SUITES: [&str; 3] = ["correlation", "gradient", "equivalence"];

const FIXTURES: &str = include_str!("../data/correlation_fixtures.json");

#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.failures().count();
        for c in self.failures() {
            writeln!(f, "  FAIL {}: {}", c.name, c.detail)?;
        }
        write!(
            f,
            "{}: {} ({} checks, {} failed)",
            self.suite,
            if failed == 0 { "PASS" } else { "FAIL" },
            self.checks.len(),
            failed
        )
    }
}

pub fn run_suite(name: &str) -> Result<SuiteReport, HarnessError> {
    match name {
        "correlation" => Ok(correlation_suite(1000, 0xC0)),
        "gradient" => gradient_suite(100, 0x6A),
        "equivalence" => equivalence_suite(100, 0xE0),
        other => Err(HarnessError::Config(format!(
            "unknown suite `{other}`; expected one of {}",
            SUITES.join(", ")
        ))),
    }
}

#[derive(Deserialize)]
struct Fixture {
    name: String,
    a: Vec<f64>,
    b: Vec<f64>,
    spearman: f64,
    pearson: f64,
    kendall: f64,
    gamma: f64,
}

/// Tie-free random pairs of length in `[2, 64]`, with `b` a noisy copy of `a`
/// so the whole agreement range shows up.
pub fn random_pair(rng: &mut SeededRng) -> (Vec<f64>, Vec<f64>) {
    let k = 2 + rng.below(63);
    let noise = rng.uniform_range(0.0, 3.0);
    let flip = rng.below(2) == 0;
    let a: Vec<f64> = (0..k).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    let b: Vec<f64> = a
        .iter()
        .map(|x| {
            let y = x + noise * rng.uniform_range(-1.0, 1.0);
            if flip {
                -y
            } else {
                y
            }
        })
        .collect();
    (a, b)
}

fn oracle_value(method: CorrelationMethod, a: &[f64], b: &[f64]) -> f64 {
    match method {
        CorrelationMethod::Spearman => oracle::spearman(a, b),
        CorrelationMethod::Pearson => oracle::pearson(a, b),
        CorrelationMethod::Kendall => oracle::kendall(a, b),
        CorrelationMethod::Gamma => oracle::gamma(a, b),
    }
}

/// Shipped fixtures at 1e-12, then `random` seeded inputs against the
/// brute-force oracles at 1e-12.
pub fn correlation_suite(random: usize, seed: u64) -> SuiteReport {
    let mut checks = Vec::new();
    let fixtures: Vec<Fixture> = serde_json::from_str(FIXTURES).expect("bundled fixtures parse");
    for fx in &fixtures {
        for (method, want) in [
            (CorrelationMethod::Spearman, fx.spearman),
            (CorrelationMethod::Pearson, fx.pearson),
            (CorrelationMethod::Kendall, fx.kendall),
            (CorrelationMethod::Gamma, fx.gamma),
        ] {
            let (passed, detail) = match agreement(method, &fx.a, &fx.b) {
                Ok(got) => (
                    (got.value - want).abs() <= 1e-12,
                    format!("got {}, want {want}", got.value),
                ),
                Err(e) => (false, e.to_string()),
            };
            checks.push(Check {
                name: format!("fixture `{}` {method}", fx.name),
                passed,
                detail,
            });
        }
    }

    let mut rng = SeededRng::new(seed);
    let mut worst = [0.0f64; 4];
    let mut errors = Vec::new();
    for i in 0..random {
        let (a, b) = random_pair(&mut rng);
        for (m, method) in CorrelationMethod::ALL.into_iter().enumerate() {
            match agreement(method, &a, &b) {
                Ok(got) => {
                    let err = (got.value - oracle_value(method, &a, &b)).abs();
                    worst[m] = worst[m].max(err);
                }
                Err(e) => errors.push(format!("input {i} {method}: {e}")),
            }
        }
    }
    for (m, method) in CorrelationMethod::ALL.into_iter().enumerate() {
        checks.push(Check {
            name: format!("{method} vs oracle on {random} random inputs"),
            passed: worst[m] <= 1e-12,
            detail: format!("max abs error {:e}", worst[m]),
        });
    }
    checks.push(Check {
        name: "no errors on tie-free inputs".into(),
        passed: errors.is_empty(),
        detail: errors.join("; "),
    });
    SuiteReport {
        suite: "correlation".into(),
        checks,
    }
}

/// A random toy model and attack instance, sized for quick checks.
pub fn random_toy_case(rng: &mut SeededRng) -> Result<(ToyLmParams, AttackInstance), HarnessError> {
    let dims = ToyLmDims {
        vocab_size: 2 + rng.below(23),
        embed_dim: 1 + rng.below(8),
        hidden_dim: 1 + rng.below(8),
        context: 1 + rng.below(6),
        decay: rng.uniform_range(0.3, 1.0),
        init_scale: rng.uniform_range(0.1, 1.0),
    };
    let params = ToyLmParams::random(dims, rng)?;
    let vocab = Vocabulary::new(dims.vocab_size)?;
    let mut draw = |n: usize| -> Vec<TokenId> {
        (0..n).map(|_| rng.below(dims.vocab_size) as TokenId).collect()
    };
    let prompt = TokenSeq::new(draw(1 + 3), Arc::clone(&vocab))?;
    let target = TokenSeq::new(draw(3), Arc::clone(&vocab))?;
    let suffix_len = 1 + rng.below(5);
    let inst = make_instance(prompt, suffix_len, target, SuffixInit::Random, rng)?;
    Ok((params, inst))
}

/// Analytic one-hot gradients against central finite differences
/// (step 1e-5), relative error below 1e-5 at every suffix position.
pub fn gradient_suite(configs: usize, seed: u64) -> Result<SuiteReport, HarnessError> {
    let mut rng = SeededRng::new(seed);
    let mut checks = Vec::with_capacity(configs);
    for c in 0..configs {
        let (params, inst) = random_toy_case(&mut rng)?;
        let grads = params.onehot_gradients(&inst)?;
        let mut worst = 0.0f64;
        for (pos, g) in grads.iter().enumerate() {
            let fd = oracle::finite_difference_gradient(&params, &inst, pos, 1e-5);
            worst = worst.max(oracle::max_relative_error(g, &fd));
        }
        checks.push(Check {
            name: format!("config {c} (V={}, L={})", params.vocab_size(), inst.suffix().len()),
            passed: worst < 1e-5,
            detail: format!("max relative error {worst:e}"),
        });
    }
    Ok(SuiteReport {
        suite: "gradient".into(),
        checks,
    })
}

/// Search settings under which probe sampling scores the whole batch on the
/// target: `k = B`, fixed agreement 0 and `R = 1`, so the filtered set is `B`.
pub fn degenerate_config(base: &SearchConfig) -> SearchConfig {
    SearchConfig {
        probe_size: base.batch_size,
        reduction: 1.0,
        filter: FilterPolicy::Fixed(0.0),
        ..base.clone()
    }
}

/// Toy target plus a truncated draft on a 32-token vocabulary.
pub fn equivalence_fixture(seed: u64) -> Result<(ScorerHandle, ScorerHandle, AttackInstance), HarnessError> {
    let mut rng = SeededRng::new(seed);
    let dims = ToyLmDims {
        vocab_size: 32,
        embed_dim: 8,
        hidden_dim: 16,
        context: 8,
        decay: 0.9,
        init_scale: 0.5,
    };
    let params = Arc::new(ToyLmParams::random(dims, &mut rng)?);
    let draft = Arc::new(params.truncated(4, 8)?);
    let vocab = Vocabulary::new(32)?;
    let mut draw = |n: usize| -> Vec<TokenId> { (0..n).map(|_| rng.below(32) as TokenId).collect() };
    let prompt = TokenSeq::new(draw(4), Arc::clone(&vocab))?;
    let target = TokenSeq::new(draw(4), Arc::clone(&vocab))?;
    let inst = make_instance(prompt, 6, target, SuffixInit::Random, &mut rng)?;
    Ok((
        ScorerHandle::new(ToyScorer::new("target", params)),
        ScorerHandle::new(ToyScorer::new("draft", draft).without_gradient()),
        inst,
    ))
}

/// Runs gcg and degenerate probe sampling side by side from the same seed
/// and compares the selected suffix and loss bit for bit every iteration.
pub fn equivalence_suite(iterations: usize, seed: u64) -> Result<SuiteReport, HarnessError> {
    let (target, draft, inst) = equivalence_fixture(seed)?;
    let base = SearchConfig {
        batch_size: 64,
        top_k: 8,
        steps: iterations,
        seed,
        ..SearchConfig::default()
    };
    let ps_cfg = degenerate_config(&base);
    let root = SeededRng::new(seed);
    let mut gcg_inst = inst.clone();
    let mut ps_inst = inst;
    let mut checks = Vec::with_capacity(iterations);
    for t in 0..iterations {
        let iter_rng = root.derive(t as u64);
        let (g_next, g) = gcg_step(&target, &gcg_inst, &base, t, &iter_rng)?;
        let (p_next, p) = probe_sampling_step(&target, &draft, &ps_inst, &ps_cfg, t, &iter_rng)?;
        let same = g.suffix == p.suffix
            && g.best_index == p.best_index
            && g.best_loss.to_bits() == p.best_loss.to_bits()
            && p.target_evals == base.batch_size;
        checks.push(Check {
            name: format!("iteration {t}"),
            passed: same,
            detail: format!(
                "gcg #{} {:?} loss {}, ps #{} {:?} loss {} ({} target evals)",
                g.best_index, g.suffix, g.best_loss, p.best_index, p.suffix, p.best_loss, p.target_evals
            ),
        });
        gcg_inst = g_next;
        ps_inst = p_next;
    }
    Ok(SuiteReport {
        suite: "equivalence".into(),
        checks,
    })
}
