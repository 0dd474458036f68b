//! Global-minimum values of linear ("basis-function") models over the
//! bases {x} and {x, z}.
//!
//! For squared loss these are closed projection formulas; an independent
//! normal-equation least-squares route and a convex first-order solver
//! cross-check them and extend coverage to the other loss kinds.

use crate::error::{Error, Result};
use crate::landscape::descent::armijo_descent;
use crate::loss::{mean_loss_with_dmat, LossKind};
use crate::mat::Mat;
use crate::model::DataSet;
use crate::projection::{null_projector, pinv, residual_column_projector};
use crate::scalar::Scalar;

/// Squared-loss global values over the bases {x} and {x, z}.
#[derive(Debug, Clone)]
pub struct OracleResult<T> {
    /// Best mean squared loss of any linear map of x alone.
    pub l_star_x: T,
    /// Best mean squared loss of any linear map of [x z].
    pub l_star_xz: T,
    /// l_star_x - l_star_xz, always nonnegative.
    pub improvement: T,
    /// Component of Y orthogonal to col(X).
    pub residual_y: Mat<T>,
    /// Component of Y captured by the part of col(Z) outside col(X).
    pub captured: Mat<T>,
}

/// Linear model returned by the convex solver.
#[derive(Debug, Clone)]
pub struct LinearModelFit<T> {
    /// Coefficients on x, d_y x d_x.
    pub r1: Mat<T>,
    /// Coefficients on z, d_y x d_z; absent when no z features were given.
    pub r2: Option<Mat<T>>,
    /// Mean loss attained at (r1, r2).
    pub objective: T,
}

/// Full convex-solver outcome, including non-converged best iterates.
#[derive(Debug, Clone)]
pub struct ConvexSolve<T> {
    pub fit: LinearModelFit<T>,
    pub grad_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

fn check_rows<T: Scalar>(a: &Mat<T>, b: &Mat<T>, what: &str) -> Result<()> {
    if a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "{what}: row counts differ ({} vs {})",
            a.rows(),
            b.rows()
        )));
    }
    Ok(())
}

/// Best mean squared loss of a linear map of x: (1/m) ||P_N[X] Y||_F^2.
pub fn sq_oracle_x<T: Scalar>(x: &Mat<T>, y: &Mat<T>) -> Result<T> {
    check_rows(x, y, "sq_oracle_x")?;
    let pn = null_projector(x, None)?;
    let r = pn.apply(y);
    Ok(r.frob_norm().powi(2) / T::from_usize_lossy(x.rows()))
}

/// Squared-loss oracle over the joint basis {x, z}: the {x}-only value,
/// the improvement contributed by the part of col(Z) outside col(X), and
/// their difference.
pub fn sq_oracle_xz<T: Scalar>(x: &Mat<T>, z: &Mat<T>, y: &Mat<T>) -> Result<OracleResult<T>> {
    check_rows(x, y, "sq_oracle_xz")?;
    check_rows(x, z, "sq_oracle_xz")?;
    let inv_m = T::one() / T::from_usize_lossy(x.rows());
    let pn = null_projector(x, None)?;
    let residual_y = pn.apply(y);
    let l_star_x = residual_y.frob_norm().powi(2) * inv_m;
    let pz = residual_column_projector(x, z, None)?;
    let captured = pz.apply(y);
    let improvement = captured.frob_norm().powi(2) * inv_m;
    Ok(OracleResult {
        l_star_x,
        l_star_xz: l_star_x - improvement,
        improvement,
        residual_y,
        captured,
    })
}

/// The improvement computed through its second form,
/// (1/m) ||P[P_N[X]Z] P_N[X] Y||_F^2; agrees with
/// [`sq_oracle_xz`]'s `improvement` to 1e-9.
pub fn improvement_alt_form<T: Scalar>(x: &Mat<T>, z: &Mat<T>, y: &Mat<T>) -> Result<T> {
    check_rows(x, y, "improvement_alt_form")?;
    check_rows(x, z, "improvement_alt_form")?;
    let pn = null_projector(x, None)?;
    let pz = residual_column_projector(x, z, None)?;
    let captured_residual = pz.apply(&pn.apply(y));
    Ok(captured_residual.frob_norm().powi(2) / T::from_usize_lossy(x.rows()))
}

/// Least squares min_R (1/m)||A R - Y||_F^2 through the normal equations,
/// R = (A^T A)^+ A^T Y. A separate numerical route from the projector
/// formulas, used to cross-check them.
pub fn lstsq_via_normal_equations<T: Scalar>(a: &Mat<T>, y: &Mat<T>) -> Result<(Mat<T>, T)> {
    check_rows(a, y, "lstsq_via_normal_equations")?;
    let at = a.transpose();
    let gram = &at * a;
    let r = &(&pinv(&gram, None)? * &at) * y;
    let resid = &(a * &r) - y;
    let obj = resid.frob_norm().powi(2) / T::from_usize_lossy(a.rows());
    Ok((r, obj))
}

pub use crate::landscape::descent::{ARMIJO_SHRINK, ARMIJO_SLOPE};

/// Iteration budget of the convex oracle solver.
pub const CONVEX_SOLVER_BUDGET: usize = 200_000;

/// Minimizes the mean loss of R1 x + R2 z over (R1, R2) by gradient
/// descent with Armijo backtracking. The problem is convex, so a
/// gradient-norm stop at `tol` certifies global optimality up to tol.
/// Returns the best iterate even when the budget runs out
/// (`converged = false`); unattained infima surface that way.
pub fn solve_linear_model<T: Scalar>(
    data: &DataSet<T>,
    z: Option<&Mat<T>>,
    kind: LossKind,
    tol: T,
) -> Result<ConvexSolve<T>> {
    if let Some(zm) = z {
        check_rows(&data.x, zm, "solve_linear_model")?;
    }
    if tol <= T::zero() {
        return Err(Error::InvalidInput("gradient tolerance must be positive".into()));
    }
    let m_inv = T::one() / T::from_usize_lossy(data.m());
    let d_y = data.d_y();
    let d_x = data.d_x();
    let d_z = z.map_or(0, Mat::cols);

    // Flat layout: R1's entries (row-major) then R2's.
    let unpack = |flat: &[T]| -> Result<(Mat<T>, Option<Mat<T>>)> {
        let r1 = Mat::new(d_y, d_x, flat[..d_y * d_x].to_vec())?;
        let r2 = if d_z > 0 {
            Some(Mat::new(d_y, d_z, flat[d_y * d_x..].to_vec())?)
        } else {
            None
        };
        Ok((r1, r2))
    };
    let fg = |flat: &[T]| -> Result<(T, Vec<T>)> {
        let (r1, r2) = unpack(flat)?;
        let mut out = &data.x * &r1.transpose();
        if let (Some(zm), Some(r2m)) = (z, r2.as_ref()) {
            out = &out + &(zm * &r2m.transpose());
        }
        let (value, dmat) = mean_loss_with_dmat(kind, &out, &data.y)?;
        let dmat = dmat.scaled(m_inv);
        let g1 = &dmat.transpose() * &data.x;
        let mut grad = g1.as_slice().to_vec();
        if let Some(zm) = z {
            grad.extend_from_slice((&dmat.transpose() * zm).as_slice());
        }
        Ok((value, grad))
    };

    let out = armijo_descent(
        fg,
        vec![T::zero(); d_y * (d_x + d_z)],
        tol,
        CONVEX_SOLVER_BUDGET,
        false,
    )?;
    let (r1, r2) = unpack(&out.x)?;
    Ok(ConvexSolve {
        fit: LinearModelFit { r1, r2, objective: out.value },
        grad_norm: out.grad_norm,
        iterations: out.iterations,
        converged: out.converged,
    })
}

/// Convex-solver oracle for the {x, z} basis under any loss kind.
/// Errors with a convergence report when the budget runs out before the
/// gradient norm reaches `tol`.
pub fn convex_oracle_xz<T: Scalar>(
    data: &DataSet<T>,
    z: Option<&Mat<T>>,
    kind: LossKind,
    tol: T,
) -> Result<LinearModelFit<T>> {
    let solve = solve_linear_model(data, z, kind, tol)?;
    if solve.converged {
        Ok(solve.fit)
    } else {
        Err(Error::Convergence(format!(
            "linear-model solver stopped after {} iterations at objective {:e} with \
             gradient norm {:e} > tol {:e}; the infimum may be unattained",
            solve.iterations, solve.fit.objective, solve.grad_norm, tol
        )))
    }
}
