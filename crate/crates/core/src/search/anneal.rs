//! Simulated-annealing wrapper around the GCG and probe-sampling steps.
//!
//! Two mechanisms, both driven by the iteration index `t`:
//!
//! * the effective batch shrinks geometrically,
//!   `B_t = max(B_floor, round(B * batch_decay^t))`;
//! * the selected candidate is accepted by the Metropolis rule at
//!   temperature `T_t = T0 * temperature_decay^t`. Rejected steps keep the
//!   previous suffix.

use super::{gcg_step, probe_sampling_step, Mode, SearchConfig, StepRecord};
use crate::error::{Error, Result};
use crate::rng::{stream, SeededRng};
use crate::scoring::ScorerHandle;
use crate::tokens::AttackInstance;

pub fn effective_batch_size(cfg: &SearchConfig, iteration: usize) -> usize {
    let b = cfg.batch_size;
    let floor = cfg.anneal.batch_floor.unwrap_or(b / 8).clamp(1, b);
    let decayed = (b as f64 * cfg.anneal.batch_decay.powi(iteration as i32)).round() as usize;
    decayed.clamp(floor, b)
}

pub fn temperature(cfg: &SearchConfig, iteration: usize) -> f64 {
    cfg.anneal.initial_temperature * cfg.anneal.temperature_decay.powi(iteration as i32)
}

/// Metropolis rule: downhill or flat moves always pass; an uphill move of
/// `delta` passes with probability `exp(-delta / T)`, never when `T == 0`.
pub fn metropolis_accept(delta: f64, temperature: f64, rng: &mut SeededRng) -> bool {
    if delta <= 0.0 {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    rng.uniform() < (-delta / temperature).exp()
}

/// Run the step of `mode` (its non-annealed counterpart) on the shrunken
/// batch, then accept or reject the result against `current_loss`.
#[allow(clippy::too_many_arguments)]
pub fn anneal_step(
    mode: Mode,
    target: &ScorerHandle,
    draft: Option<&ScorerHandle>,
    inst: &AttackInstance,
    current_loss: f64,
    cfg: &SearchConfig,
    iteration: usize,
    iter_rng: &SeededRng,
) -> Result<(AttackInstance, StepRecord)> {
    let b_t = effective_batch_size(cfg, iteration);
    let step_cfg = SearchConfig {
        batch_size: b_t,
        probe_size: cfg.probe_size.min(b_t),
        ..cfg.clone()
    };
    let (candidate, mut record) = match mode {
        Mode::GcgAnneal | Mode::Gcg => gcg_step(target, inst, &step_cfg, iteration, iter_rng)?,
        Mode::PsAnneal | Mode::Ps => {
            let draft = draft.ok_or_else(|| Error::Config("probe sampling needs a draft scorer".into()))?;
            probe_sampling_step(target, draft, inst, &step_cfg, iteration, iter_rng)?
        }
    };
    let t = temperature(cfg, iteration);
    let delta = record.best_loss - current_loss;
    let accepted = metropolis_accept(delta, t, &mut iter_rng.derive(stream::ANNEAL));
    record.mode = match mode {
        Mode::Gcg | Mode::GcgAnneal => Mode::GcgAnneal,
        Mode::Ps | Mode::PsAnneal => Mode::PsAnneal,
    };
    record.temperature = Some(t);
    record.accepted = accepted;
    if accepted {
        Ok((candidate, record))
    } else {
        record.suffix = inst.suffix().tokens().to_vec();
        record.current_loss = current_loss;
        Ok((inst.clone(), record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn downhill_always_accepted() {
        let mut rng = SeededRng::new(1);
        for d in [-3.0, -1e-9, 0.0] {
            for t in [0.0, 1e-6, 1.0, 100.0] {
                assert!(metropolis_accept(d, t, &mut rng));
            }
        }
    }

    #[test]
    fn zero_temperature_rejects_uphill() {
        let mut rng = SeededRng::new(1);
        assert!(!metropolis_accept(1e-12, 0.0, &mut rng));
        let hits = (0..10_000)
            .filter(|_| metropolis_accept(0.5, 1e-3, &mut rng))
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn batch_schedule() {
        let cfg = SearchConfig {
            batch_size: 512,
            ..SearchConfig::default()
        };
        assert_eq!(effective_batch_size(&cfg, 0), 512);
        assert_eq!(effective_batch_size(&cfg, 1), 509); // round(509.44)
        assert_eq!(effective_batch_size(&cfg, 10_000), 64);
        let sizes: Vec<usize> = (0..600).map(|t| effective_batch_size(&cfg, t)).collect();
        assert!(sizes.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn temperature_schedule() {
        let cfg = SearchConfig::default();
        assert_eq!(temperature(&cfg, 0), 1.0);
        assert!((temperature(&cfg, 2) - 0.9801).abs() < 1e-15);
    }
}
