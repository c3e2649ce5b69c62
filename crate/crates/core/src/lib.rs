//! Greedy coordinate gradient (GCG) suffix search with probe sampling.
//!
//! Probe sampling scores every GCG candidate with a cheap draft model, asks
//! the expensive target model about a small random probe set, and uses the
//! rank agreement between the two on that probe set to decide how many of
//! the draft's favourites the target has to re-score.
//!
//! Modules, bottom up:
//!
//! - [`tokens`] and [`rng`]: ids, sequences, attack instances, deterministic streams.
//! - [`toylm`]: a tiny differentiable language model for in-process scoring.
//! - [`scoring`]: the scorer abstraction, cost accounting and the bridge client.
//! - [`correlation`]: agreement scores on `[0, 1]`.
//! - [`search`]: candidate generation, GCG, probe sampling, annealing, the run loop.
//! - [`oracle`]: slow reference implementations for validation.

pub mod correlation;
pub mod error;
pub mod oracle;
pub mod rng;
pub mod scoring;
pub mod search;
pub mod tokens;
pub mod toylm;

pub use error::{Error, Result};
