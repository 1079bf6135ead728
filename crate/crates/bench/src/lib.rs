//! Desk-scale benchmark harness for the `cqnpm` solvers.
//!
//! Builds a synthetic multi-coil non-Cartesian problem from a Shepp–Logan
//! phantom, runs the requested solvers on identical noisy data and writes
//! per-iteration CSV tables plus the reconstructed images.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiment;
pub mod image_io;
pub mod phantom;

pub use config::{ExperimentConfig, Sweep, TrajectoryKind};
pub use experiment::{run_experiment, simulate, MethodRun, RunArtifact, Simulation, CSV_HEADER};
pub use phantom::{make_phantom, make_sensitivities};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(#[from] cqnpm::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub(crate) fn from_config(err: cqnpm::Error) -> Self {
        Self::Config(err.to_string())
    }

    /// The message without the category prefix.
    pub fn message(&self) -> String {
        match self {
            Self::Config(m) => m.clone(),
            Self::Solver(e) => e.to_string(),
            Self::Io(e) => e.to_string(),
            Self::Csv(e) => e.to_string(),
        }
    }
}
