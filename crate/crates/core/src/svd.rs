//! Singular value decomposition by one-sided Jacobi rotations.
//!
//! Dense, deterministic, and accurate enough at desk scale that projectors
//! built from it meet 1e-10 idempotency contracts. For an m x n input with
//! k = min(m, n) the factors are U (m x k, orthonormal columns),
//! `sigma` (k values, descending) and V (n x k); when n <= m the V factor
//! is a full n x n orthogonal matrix.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct Svd<T> {
    pub u: Mat<T>,
    pub sigma: Vec<T>,
    pub v: Mat<T>,
}

/// Default rank cutoff: max(rows, cols) * machine epsilon * sigma_max.
pub fn default_rank_tol<T: Scalar>(rows: usize, cols: usize, sigma_max: T) -> T {
    T::from_f64(rows.max(cols) as f64) * T::epsilon() * sigma_max
}

impl<T: Scalar> Svd<T> {
    pub fn sigma_max(&self) -> T {
        self.sigma.first().copied().unwrap_or_else(T::zero)
    }

    /// Number of singular values strictly above `tol`.
    pub fn rank(&self, tol: T) -> usize {
        self.sigma.iter().take_while(|&&s| s > tol).count()
    }

    pub fn default_tol(&self) -> T {
        default_rank_tol(self.u.rows(), self.v.rows(), self.sigma_max())
    }
}

/// Thin SVD of `m`. Errors on non-finite input.
pub fn svd<T: Scalar>(m: &Mat<T>) -> Result<Svd<T>> {
    if !m.is_finite() {
        return Err(Error::InvalidInput("svd of a matrix with non-finite entries".into()));
    }
    if m.rows() >= m.cols() {
        svd_tall(m)
    } else {
        let t = svd_tall(&m.transpose())?;
        Ok(Svd { u: t.v, sigma: t.sigma, v: t.u })
    }
}

/// One-sided Jacobi on a tall (rows >= cols) matrix: orthogonalize the
/// columns of A by right rotations accumulated into V, then read off
/// U and sigma from the column norms.
fn svd_tall<T: Scalar>(m: &Mat<T>) -> Result<Svd<T>> {
    let rows = m.rows();
    let cols = m.cols();

    // Column-major working copy so rotations touch contiguous memory.
    let mut a: Vec<Vec<T>> = (0..cols).map(|j| m.col(j)).collect();
    let mut v: Vec<Vec<T>> = (0..cols)
        .map(|j| {
            let mut e = vec![T::zero(); cols];
            e[j] = T::one();
            e
        })
        .collect();

    let tol = T::epsilon();
    let max_sweeps = 64;
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut app = T::zero();
                let mut aqq = T::zero();
                let mut apq = T::zero();
                for i in 0..rows {
                    let x = a[p][i];
                    let y = a[q][i];
                    app += x * x;
                    aqq += y * y;
                    apq += x * y;
                }
                if apq == T::zero() || apq.abs() <= tol * (app * aqq).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (T::from_f64(2.0) * apq);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for i in 0..rows {
                    let x = a[p][i];
                    let y = a[q][i];
                    a[p][i] = c * x - s * y;
                    a[q][i] = s * x + c * y;
                }
                for i in 0..cols {
                    let x = v[p][i];
                    let y = v[q][i];
                    v[p][i] = c * x - s * y;
                    v[q][i] = s * x + c * y;
                }
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::Numerical(format!(
                "jacobi svd did not converge in {max_sweeps} sweeps ({rows}x{cols})"
            )));
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<T> = a
        .iter()
        .map(|col| col.iter().map(|&x| x * x).sum::<T>().sqrt())
        .collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).expect("finite norms"));

    let mut u = Mat::zeros(rows, cols);
    let mut vmat = Mat::zeros(cols, cols);
    let mut sigma = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma.push(s);
        if s > T::zero() {
            for i in 0..rows {
                u[(i, k)] = a[j][i] / s;
            }
        }
        for i in 0..cols {
            vmat[(i, k)] = v[j][i];
        }
    }

    Ok(Svd { u, sigma, v: vmat })
}

/// Extends the first `rank` columns of `basis` (assumed orthonormal) to an
/// orthonormal basis of the full space, returning only the new columns.
/// Used to materialize null spaces from a thin SVD.
pub fn complete_orthonormal_basis<T: Scalar>(basis: &Mat<T>, rank: usize) -> Mat<T> {
    let dim = basis.rows();
    assert!(rank <= basis.cols() && rank < dim, "basis already spans the space");
    let mut have: Vec<Vec<T>> = (0..rank).map(|j| basis.col(j)).collect();
    let mut fresh: Vec<Vec<T>> = Vec::with_capacity(dim - rank);
    for axis in 0..dim {
        if have.len() + fresh.len() == dim {
            break;
        }
        let mut cand = vec![T::zero(); dim];
        cand[axis] = T::one();
        // Two rounds of Gram-Schmidt keep the new columns orthogonal to
        // working precision.
        for _ in 0..2 {
            for col in have.iter().chain(fresh.iter()) {
                let dot: T = cand.iter().zip(col).map(|(&a, &b)| a * b).sum();
                for (c, &b) in cand.iter_mut().zip(col) {
                    *c -= dot * b;
                }
            }
        }
        let norm: T = cand.iter().map(|&x| x * x).sum::<T>().sqrt();
        if norm > T::from_f64(1e-8) {
            for c in cand.iter_mut() {
                *c /= norm;
            }
            fresh.push(cand);
        }
    }
    assert_eq!(have.len() + fresh.len(), dim, "basis completion fell short");
    have.append(&mut fresh);
    Mat::from_fn(dim, dim - rank, |i, j| have[rank + j][i])
}

/// Eigenvalues of a symmetric matrix by the classical cyclic Jacobi
/// iteration, returned in ascending order. Used for Hessian spectrum
/// checks on small dense problems.
pub fn symmetric_eigenvalues<T: Scalar>(m: &Mat<T>) -> Result<Vec<T>> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "symmetric eigenvalues of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_finite() {
        return Err(Error::InvalidInput("eigenvalues of a non-finite matrix".into()));
    }
    let n = m.rows();
    let mut a = m.clone();
    let tol = T::epsilon() * T::from_f64(n as f64) * (a.frob_norm() + T::one());
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].abs();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.abs() <= T::epsilon() * (a[(p, p)].abs() + a[(q, q)].abs() + T::one()) {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (T::from_f64(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = Mat<f64>;

    fn reconstruct(s: &Svd<f64>) -> M {
        let k = s.sigma.len();
        let mut us = s.u.clone();
        for j in 0..k {
            for i in 0..us.rows() {
                us[(i, j)] *= s.sigma[j];
            }
        }
        &us * &s.v.transpose()
    }

    #[test]
    fn reconstructs_hand_matrix() {
        let a = M::from_rows(&[[4.0, 0.0], [3.0, -5.0], [1.0, 2.0]]);
        let s = svd(&a).unwrap();
        assert!(reconstruct(&s).frob_dist(&a) < 1e-12);
        assert!(s.sigma[0] >= s.sigma[1]);
    }

    #[test]
    fn diagonal_singular_values() {
        let a = M::from_rows(&[[3.0, 0.0], [0.0, -7.0]]);
        let s = svd(&a).unwrap();
        assert!((s.sigma[0] - 7.0).abs() < 1e-12);
        assert!((s.sigma[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn wide_matrices_go_through_transpose() {
        let a = M::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let s = svd(&a).unwrap();
        assert_eq!(s.u.rows(), 2);
        assert_eq!(s.v.rows(), 3);
        assert!(reconstruct(&s).frob_dist(&a) < 1e-12);
    }

    #[test]
    fn orthonormal_factors() {
        let mut rng = crate::rng::SplitMix64::new(11);
        let a: M = rng.gaussian_mat(8, 5, 1.0);
        let s = svd(&a).unwrap();
        let utu = &s.u.transpose() * &s.u;
        let vtv = &s.v.transpose() * &s.v;
        assert!(utu.frob_dist(&M::identity(5)) < 1e-13);
        assert!(vtv.frob_dist(&M::identity(5)) < 1e-13);
    }

    #[test]
    fn rank_detects_deficiency() {
        // Rank-2 product of 4x2 and 2x3.
        let mut rng = crate::rng::SplitMix64::new(5);
        let a: M = rng.gaussian_mat(4, 2, 1.0);
        let b: M = rng.gaussian_mat(2, 3, 1.0);
        let s = svd(&(&a * &b)).unwrap();
        assert_eq!(s.rank(s.default_tol()), 2);
    }

    #[test]
    fn zero_matrix_has_rank_zero() {
        let s = svd(&M::zeros(3, 2)).unwrap();
        assert_eq!(s.rank(s.default_tol()), 0);
        assert!(s.sigma.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn svd_rejects_non_finite() {
        let mut a = M::zeros(2, 2);
        a[(0, 0)] = f64::NAN;
        assert!(svd(&a).is_err());
    }

    #[test]
    fn basis_completion_is_orthonormal() {
        let mut rng = crate::rng::SplitMix64::new(3);
        let a: M = rng.gaussian_mat(6, 2, 1.0);
        let s = svd(&a).unwrap();
        let extra = complete_orthonormal_basis(&s.u, 2);
        assert_eq!(extra.cols(), 4);
        let full = M::hstack(&[&s.u, &extra]).unwrap();
        let g = &full.transpose() * &full;
        assert!(g.frob_dist(&M::identity(6)) < 1e-12);
    }

    #[test]
    fn symmetric_eigenvalues_of_known_matrix() {
        let a = M::from_rows(&[[2.0, 1.0], [1.0, 2.0]]);
        let e = symmetric_eigenvalues(&a).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert!((e[1] - 3.0).abs() < 1e-12);
        let saddle = M::from_rows(&[[1.0, 0.0], [0.0, -1.0]]);
        let e = symmetric_eigenvalues(&saddle).unwrap();
        assert!((e[0] + 1.0).abs() < 1e-12);
    }
}
