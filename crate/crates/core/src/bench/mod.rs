//! Benchmark problems and the optimization loop driving them.

pub mod config;
pub mod engine;
pub mod problems;

pub use config::{ExperimentConfig, Method};
pub use engine::{optimize_acquisition, recommend, run_experiment, IterationRow, RunOptions, RunRecord};
pub use problems::{zdt2, Problem};
