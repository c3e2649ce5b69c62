//! Configuration, runs, benchmarks and validation for the probe-sampling
//! search engine.

pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod judge;
pub mod runlog;
pub mod task;
pub mod validate;

pub use error::HarnessError;
