//! Simulation of two-agent LOCC experiments over an explicit environment.

pub mod bell;
pub mod distinguish;
pub mod error;
pub mod instruments;
pub mod linalg;
pub mod protocol;
pub mod random;
pub mod rng;
pub mod worlds;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
