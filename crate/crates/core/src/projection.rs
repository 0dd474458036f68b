//! Orthogonal projectors, pseudoinverse, Kronecker product and
//! vectorization.
//!
//! Projectors are built from a rank-revealing SVD as P = U_r U_r^T, which
//! stays stable near rank deficiency. `vec` uses column-major stacking;
//! every Jacobian layout in this crate inherits that ordering.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;
use crate::svd::{default_rank_tol, svd};

/// Symmetric idempotent matrix together with the numerical rank and the
/// cutoff that produced it.
#[derive(Debug, Clone)]
pub struct Projector<T> {
    pub matrix: Mat<T>,
    pub source_rank: usize,
    pub tolerance: T,
}

impl<T: Scalar> Projector<T> {
    /// Departure from symmetry, ||P - P^T||_F.
    pub fn symmetry_defect(&self) -> T {
        self.matrix.frob_dist(&self.matrix.transpose())
    }

    /// Departure from idempotency, ||P P - P||_F.
    pub fn idempotency_defect(&self) -> T {
        (&self.matrix * &self.matrix).frob_dist(&self.matrix)
    }

    pub fn apply(&self, m: &Mat<T>) -> Mat<T> {
        &self.matrix * m
    }
}

fn require_finite<T: Scalar>(m: &Mat<T>, what: &str) -> Result<()> {
    if m.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

fn projector_from_svd<T: Scalar>(
    s: &crate::svd::Svd<T>,
    rows: usize,
    cols: usize,
    rank_tol: Option<T>,
) -> Projector<T> {
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(rows, cols, s.sigma_max()));
    let rank = s.rank(tol);
    let mut p = Mat::zeros(rows, rows);
    for k in 0..rank {
        for i in 0..rows {
            let uik = s.u[(i, k)];
            if uik == T::zero() {
                continue;
            }
            for j in 0..rows {
                p[(i, j)] += uik * s.u[(j, k)];
            }
        }
    }
    Projector { matrix: p, source_rank: rank, tolerance: tol }
}

/// Orthogonal projector onto the column space of `m`.
pub fn col_projector<T: Scalar>(m: &Mat<T>, rank_tol: Option<T>) -> Result<Projector<T>> {
    require_finite(m, "col_projector input")?;
    if let Some(t) = rank_tol {
        if t <= T::zero() {
            return Err(Error::InvalidInput("rank tolerance must be positive".into()));
        }
    }
    let s = svd(m)?;
    Ok(projector_from_svd(&s, m.rows(), m.cols(), rank_tol))
}

/// Orthogonal projector onto the orthogonal complement of col(`m`),
/// i.e. the null space of `m`^T: I - col_projector(m).
pub fn null_projector<T: Scalar>(m: &Mat<T>, rank_tol: Option<T>) -> Result<Projector<T>> {
    let p = col_projector(m, rank_tol)?;
    let n = m.rows();
    Ok(Projector {
        matrix: &Mat::identity(n) - &p.matrix,
        source_rank: n - p.source_rank,
        tolerance: p.tolerance,
    })
}

/// Moore-Penrose pseudoinverse via the rank-revealing SVD.
pub fn pinv<T: Scalar>(m: &Mat<T>, rank_tol: Option<T>) -> Result<Mat<T>> {
    require_finite(m, "pinv input")?;
    let s = svd(m)?;
    let tol = rank_tol.unwrap_or_else(|| default_rank_tol(m.rows(), m.cols(), s.sigma_max()));
    let rank = s.rank(tol);
    let mut out = Mat::zeros(m.cols(), m.rows());
    for k in 0..rank {
        let inv = T::one() / s.sigma[k];
        for i in 0..m.cols() {
            let vik = s.v[(i, k)] * inv;
            if vik == T::zero() {
                continue;
            }
            for j in 0..m.rows() {
                out[(i, j)] += vik * s.u[(j, k)];
            }
        }
    }
    Ok(out)
}

/// Kronecker product A (x) B.
pub fn kron<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Mat<T> {
    let (ra, ca) = (a.rows(), a.cols());
    let (rb, cb) = (b.rows(), b.cols());
    Mat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Column-major vectorization: stacks the columns of `m` into a
/// (rows*cols) x 1 vector, [m11, m21, ..., m12, m22, ...].
pub fn vec<T: Scalar>(m: &Mat<T>) -> Mat<T> {
    let mut data = Vec::with_capacity(m.rows() * m.cols());
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            data.push(m[(i, j)]);
        }
    }
    Mat::new(m.rows() * m.cols(), 1, data).expect("vec of a valid matrix")
}

/// Projector onto col(P_N[x] z): the part of col(z) orthogonal to col(x).
///
/// The rank cutoff is anchored to ||z||_F rather than to the projected
/// matrix, so columns of z that lie inside col(x) leave only rounding
/// residue and produce a zero projector instead of a projector onto noise.
pub fn residual_column_projector<T: Scalar>(
    x: &Mat<T>,
    z: &Mat<T>,
    rank_tol: Option<T>,
) -> Result<Projector<T>> {
    if x.rows() != z.rows() {
        return Err(Error::Shape(format!(
            "row counts differ: x has {}, z has {}",
            x.rows(),
            z.rows()
        )));
    }
    let pn = null_projector(x, rank_tol)?;
    let pz = pn.apply(z);
    let anchored =
        default_rank_tol(z.rows(), z.cols(), T::one()).max(T::epsilon()) * z.frob_norm();
    let tol = match rank_tol {
        Some(t) => t.max(anchored),
        None => anchored,
    };
    if tol > T::zero() {
        col_projector(&pz, Some(tol))
    } else {
        // z was exactly zero; projector onto {0}.
        col_projector(&pz, None)
    }
}

/// || P[[x z]] - (P[x] + P[P_N[x] z]) ||_F, the defect of the projector
/// block decomposition. Callers assert it is tiny.
pub fn block_projection_identity_check<T: Scalar>(x: &Mat<T>, z: &Mat<T>) -> Result<T> {
    if x.rows() != z.rows() {
        return Err(Error::Shape(format!(
            "row counts differ: x has {}, z has {}",
            x.rows(),
            z.rows()
        )));
    }
    let joint = col_projector(&Mat::hstack(&[x, z])?, None)?;
    let px = col_projector(x, None)?;
    let pr = residual_column_projector(x, z, None)?;
    let sum = &px.matrix + &pr.matrix;
    Ok(joint.matrix.frob_dist(&sum))
}
