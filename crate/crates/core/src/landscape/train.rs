//! Full-batch Armijo trainer for the residual model, plus the per-run
//! report that bundles descent, certification, stationarity and oracle
//! diagnostics.

use crate::error::{Error, Result};
use crate::landscape::analysis::{
    certify_local_min, oracle_gap, stationarity_residuals, GapReport,
};
use crate::landscape::certify::{CertificationConfig, Verdict};
use crate::landscape::descent::{armijo_descent, DescentOutcome, TraceEntry};
use crate::loss::LossKind;
use crate::model::{grad_loss_params, DataSet, ResNetParams, StackConfig};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Stream tag for the seeded parameter initialization.
pub const INIT_TAG: u64 = 0x696e_6974;

/// Solver tolerance used for oracle values of non-squared losses when
/// the caller does not choose one.
pub const ORACLE_SOLVER_TOL: f64 = 1e-8;

/// The oracle guarantees verified here cover output dimensions up to
/// min(d_x, d_z); larger heads are rejected up front.
pub fn check_output_dim(d_x: usize, d_y: usize, d_z: usize) -> Result<()> {
    if d_y > d_x.min(d_z) {
        return Err(Error::Config(format!(
            "d_y = {d_y} exceeds min(d_x, d_z) = {}; this model requires d_y <= min(d_x, d_z)",
            d_x.min(d_z)
        )));
    }
    Ok(())
}

/// One training run, summarized.
#[derive(Debug, Clone)]
pub struct TrainReport<T> {
    pub final_loss: T,
    /// Euclidean norm over the full flattened gradient at the final point.
    pub grad_norm: T,
    pub iterations: usize,
    pub certification: Verdict,
    /// ‖(1/m) ZᵀD‖_F at the final point.
    pub stationarity_z_residual: T,
    /// ‖(1/m) XᵀD‖_F at the final point.
    pub stationarity_x_residual: T,
    /// final_loss − l_star_xz at the final stack output.
    pub oracle_gap: T,
    /// (iteration, loss, grad_norm) per iteration; loss never increases.
    pub trace: Vec<TraceEntry<T>>,
}

/// Gradient descent with Armijo backtracking from an explicit starting
/// point. Stops at grad_norm ≤ grad_tol or after max_iter iterations.
pub fn train_from<T: Scalar>(
    data: &DataSet<T>,
    init: &ResNetParams<T>,
    config: &StackConfig,
    kind: LossKind,
    grad_tol: T,
    max_iter: usize,
) -> Result<(ResNetParams<T>, DescentOutcome<T>)> {
    check_output_dim(data.d_x(), data.d_y(), config.d_z())?;
    init.validate(config, data.d_x(), data.d_y())?;
    let template = init.clone();
    let fg = |flat: &[T]| -> Result<(T, Vec<T>)> {
        let p = template.from_flat(flat)?;
        let (loss, grads) = grad_loss_params(data, &p, config, kind)?;
        Ok((loss, grads.to_flat()))
    };
    let outcome = armijo_descent(fg, init.to_flat(), grad_tol, max_iter, true)?;
    let params = template.from_flat(&outcome.x)?;
    Ok((params, outcome))
}

/// Seeded training run with the default certification plan.
pub fn train<T: Scalar>(
    data: &DataSet<T>,
    config: &StackConfig,
    kind: LossKind,
    seed: u64,
    grad_tol: T,
    max_iter: usize,
) -> Result<(ResNetParams<T>, TrainReport<T>)> {
    let (params, report, _) = train_with(
        data,
        config,
        kind,
        seed,
        grad_tol,
        max_iter,
        &CertificationConfig::default(),
        T::from_f64(ORACLE_SOLVER_TOL),
    )?;
    Ok((params, report))
}

/// Seeded training run with an explicit certification plan and oracle
/// solver tolerance; also returns the full oracle comparison.
/// Certification is only attempted when descent reached grad_tol;
/// otherwise the verdict is `BudgetExhausted`, so a `CertifiedLocalMin`
/// report always has grad_norm ≤ grad_tol.
#[allow(clippy::too_many_arguments)]
pub fn train_with<T: Scalar>(
    data: &DataSet<T>,
    config: &StackConfig,
    kind: LossKind,
    seed: u64,
    grad_tol: T,
    max_iter: usize,
    cert: &CertificationConfig<T>,
    solver_tol: T,
) -> Result<(ResNetParams<T>, TrainReport<T>, GapReport<T>)> {
    check_output_dim(data.d_x(), data.d_y(), config.d_z())?;
    let mut rng = SplitMix64::derive(seed, INIT_TAG);
    let init = ResNetParams::he_init(config, data.d_x(), data.d_y(), &mut rng);
    let (params, outcome) = train_from(data, &init, config, kind, grad_tol, max_iter)?;
    let certification = if outcome.converged {
        certify_local_min(data, &params, config, kind, cert, seed)?.verdict
    } else {
        Verdict::BudgetExhausted
    };
    let (z_res, x_res) = stationarity_residuals(data, &params, config, kind)?;
    let gap = oracle_gap(data, &params, config, kind, solver_tol)?;
    let report = TrainReport {
        final_loss: outcome.value,
        grad_norm: outcome.grad_norm,
        iterations: outcome.iterations,
        certification,
        stationarity_z_residual: z_res,
        stationarity_x_residual: x_res,
        oracle_gap: gap.gap,
        trace: outcome.trace,
    };
    Ok((params, report, gap))
}
