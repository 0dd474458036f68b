//! Optimization-landscape laboratory: a line-search descent engine,
//! sampling-based local-minimum certification, post-training
//! diagnostics, and the dead-unit construction separating plain nets
//! from residual ones.

pub mod analysis;
pub mod certify;
pub mod counterexample;
pub mod descent;
pub mod train;

pub use analysis::{
    certify_local_min, null_space_perturb_check, oracle_gap, stationarity_residuals, GapReport,
};
pub use certify::{certify_fn, CertificationConfig, CertifyOutcome, Verdict};
pub use counterexample::{build_dead_relu_counterexample, DeadReluCounterexample};
pub use descent::{armijo_descent, DescentOutcome, TraceEntry, ARMIJO_SHRINK, ARMIJO_SLOPE};
pub use train::{check_output_dim, train, train_from, train_with, TrainReport, INIT_TAG};
