//! Grover search for number partitioning with a generalized phase oracle:
//! finite step width, decay per query and an optional modulus.
//!
//! Exact state-vector simulation over all `2^n` spin configurations, with a
//! layered variant that keeps the oracle resolution fixed as the bit depth
//! grows, closed-form models, and ensemble experiments.

pub mod analytics;
pub mod error;
pub mod experiments;
pub mod instances;
pub mod io;
pub mod quantum;
pub mod rng;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
