//! Grammar-constrained driving-scenario fuzzing.

pub mod baselines;
pub mod campaign;
pub mod dedup;
pub mod error;
pub mod evaluation;
pub mod evolve;
pub mod grammar;
pub mod objectives;
pub mod sim;
pub mod stats;
pub mod surrogate;

pub use error::{Error, Result};
