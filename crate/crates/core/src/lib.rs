//! Joint entropy search for multi-objective Bayesian optimization.

pub mod acquisition;
pub mod bench;
pub mod error;
pub mod evolver;
pub mod gp;
pub mod linalg;
pub mod metrics;
pub mod normal;
pub mod optim;
pub mod pareto;
pub mod paths;
pub mod qmc;
pub mod rng;

pub use error::{Error, Result};
