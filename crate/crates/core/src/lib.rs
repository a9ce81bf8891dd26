//! Low-rank completion of dense third-order tensors.
//!
//! [`tensor`] holds the dense tensor, observation masks and mode-k
//! (un)folding. [`prox`] has the singular-value shrinkage rules. [`solver`]
//! runs the ADMM loop for the log-surrogate completion method, its robust
//! variant with a sparse anomaly term, and two nuclear-norm baselines.
//! [`datagen`] and [`metrics`] produce experiment inputs and score outputs.

pub mod datagen;
pub mod error;
pub mod format;
pub mod metrics;
pub mod prox;
pub mod solver;
pub mod tensor;

pub use error::{Error, Result};
pub use metrics::EvalReport;
pub use solver::{Method, SolverConfig, SolverResult};
pub use tensor::{Dims, Mode, ObservationMask, Tensor3};
