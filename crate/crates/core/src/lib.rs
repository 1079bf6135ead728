//! Complex quasi-Newton proximal methods for compressed-sensing MRI.
//!
//! The crate solves
//!
//! ```text
//! min_x  ½‖Ax − y‖² + λ [ α‖Tx‖₁ + (1 − α) TV(x) ]
//! ```
//!
//! over complex images `x`, where `A` is a multi-coil non-uniform DFT
//! forward model and `T` an orthonormal Haar wavelet transform. The main
//! solver replaces the identity in the proximal step with a diagonal ± rank-1
//! SR1 Hessian approximation and evaluates the resulting weighted proximal
//! mapping either through a dual FISTA or, for the pure wavelet case, through
//! a scalar complex root.
//!
//! Module map:
//! - [`operators`]: trajectories, NUDFT, coil forward model, data fidelity.
//! - [`transforms`]: Haar wavelet, TV, finite differences and dual projections.
//! - [`metric`]: complex SR1 metric `τI ± ũũᴴ`.
//! - [`wpm`]: weighted proximal mapping solvers.
//! - [`solvers`]: CQNPM, APM and their partially smoothed variants.

// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod metric;
pub mod operators;
pub mod solvers;
pub mod transforms;
pub mod wpm;

pub use error::{Error, Result};
pub use linalg::C64;
pub use metric::{Rank1Metric, Sr1Params};
pub use operators::{ComplexImage, ForwardModel, KSpaceData, SensitivityMaps, Trajectory};
pub use solvers::{Formulation, IterationRecord, Method, SolveOutput, SolverConfig};
pub use transforms::{DualPair, DualTriple, TvVariant, WaveletSpec};
pub use wpm::{WpmProblem, WpmSettings};
