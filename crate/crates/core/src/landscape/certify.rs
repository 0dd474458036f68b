//! Sampling-based local-minimum certification.
//!
//! The exact local-minimum predicate is not decidable numerically; this
//! module probes random directions on shrinking radii and optionally
//! bounds the smallest eigenvalue of a finite-difference Hessian. A
//! failed certificate is a verdict, not an error.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;
use crate::svd::symmetric_eigenvalues;

/// Outcome of a certification attempt or a full training run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    CertifiedLocalMin,
    SaddleOrUncertified,
    BudgetExhausted,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::CertifiedLocalMin => "certified_local_min",
            Verdict::SaddleOrUncertified => "saddle_or_uncertified",
            Verdict::BudgetExhausted => "budget_exhausted",
        }
    }
}

/// Probe plan: how many directions, which radii, whether to add the
/// finite-difference Hessian screen.
#[derive(Debug, Clone)]
pub struct CertificationConfig<T> {
    pub n_directions: usize,
    /// Strictly decreasing, all positive; the verdict keys on the last
    /// (smallest) radius.
    pub radii: Vec<T>,
    pub hessian_check: bool,
    /// Skip the Hessian screen above this parameter count.
    pub hessian_dim_cap: usize,
}

impl<T: Scalar> Default for CertificationConfig<T> {
    fn default() -> Self {
        Self {
            n_directions: 64,
            radii: vec![T::from_f64(1e-2), T::from_f64(1e-3), T::from_f64(1e-4)],
            hessian_check: false,
            hessian_dim_cap: 2000,
        }
    }
}

impl<T: Scalar> CertificationConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.n_directions == 0 {
            return Err(Error::Config("certification needs at least one direction".into()));
        }
        if self.radii.is_empty() {
            return Err(Error::Config("certification needs at least one radius".into()));
        }
        if self.radii.iter().any(|&r| r <= T::zero()) {
            return Err(Error::Config("certification radii must be positive".into()));
        }
        if self.radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("certification radii must be strictly decreasing".into()));
        }
        Ok(())
    }
}

/// Per-radius and Hessian evidence behind a verdict.
#[derive(Debug, Clone)]
pub struct CertifyOutcome<T> {
    pub verdict: Verdict,
    pub center_value: T,
    /// Decrease threshold 1e-12 * (1 + |center_value|) used for the verdict.
    pub threshold: T,
    /// Largest observed decrease at the smallest radius.
    pub max_decrease_smallest_radius: T,
    /// Largest observed decrease at any radius.
    pub max_decrease_any_radius: T,
    /// Smallest finite-difference Hessian eigenvalue, when screened.
    pub min_hessian_eigenvalue: Option<T>,
}

/// Smallest eigenvalue of the central finite-difference Hessian of `f`.
fn fd_hessian_min_eig<T, F>(f: &F, center: &[T], step: T) -> Result<T>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    let n = center.len();
    let f0 = f(center)?;
    let mut h = Mat::<T>::zeros(n, n);
    let shifted = |i: usize, si: T, j: usize, sj: T| -> Vec<T> {
        let mut x = center.to_vec();
        x[i] += si;
        x[j] += sj;
        x
    };
    let four = T::from_f64(4.0);
    let two = T::from_f64(2.0);
    for i in 0..n {
        let fp = f(&shifted(i, step, i, T::zero()))?;
        let fm = f(&shifted(i, -step, i, T::zero()))?;
        h[(i, i)] = (fp - two * f0 + fm) / (step * step);
        for j in 0..i {
            let fpp = f(&shifted(i, step, j, step))?;
            let fpm = f(&shifted(i, step, j, -step))?;
            let fmp = f(&shifted(i, -step, j, step))?;
            let fmm = f(&shifted(i, -step, j, -step))?;
            let hij = (fpp - fpm - fmp + fmm) / (four * step * step);
            h[(i, j)] = hij;
            h[(j, i)] = hij;
        }
    }
    let eigs = symmetric_eigenvalues(&h)?;
    Ok(eigs[0])
}

/// Certifies a center point of an arbitrary objective closure.
///
/// Verdict is `CertifiedLocalMin` iff no sampled perturbation at the
/// smallest radius decreases the objective by more than
/// 1e-12 * (1 + |f(center)|), and the Hessian screen (when enabled and
/// within the dimension cap) reports a smallest eigenvalue >= -1e-6.
pub fn certify_fn<T, F>(
    f: F,
    center: &[T],
    cfg: &CertificationConfig<T>,
    rng: &mut SplitMix64,
) -> Result<CertifyOutcome<T>>
where
    T: Scalar,
    F: Fn(&[T]) -> Result<T>,
{
    cfg.validate()?;
    if center.is_empty() {
        return Err(Error::InvalidInput("empty parameter vector".into()));
    }
    let center_value = f(center)?;
    let threshold = T::from_f64(1e-12) * (T::one() + center_value.abs());

    let mut max_any = T::neg_infinity();
    let mut max_smallest = T::neg_infinity();
    let last = cfg.radii.len() - 1;
    for (ri, &radius) in cfg.radii.iter().enumerate() {
        for _ in 0..cfg.n_directions {
            let dir: Vec<T> = rng.unit_vector(center.len());
            let probe: Vec<T> =
                center.iter().zip(&dir).map(|(&c, &d)| c + radius * d).collect();
            let decrease = center_value - f(&probe)?;
            if decrease > max_any {
                max_any = decrease;
            }
            if ri == last && decrease > max_smallest {
                max_smallest = decrease;
            }
        }
    }

    let mut verdict = if max_smallest <= threshold {
        Verdict::CertifiedLocalMin
    } else {
        Verdict::SaddleOrUncertified
    };

    let mut min_eig = None;
    if cfg.hessian_check && center.len() <= cfg.hessian_dim_cap {
        let eig = fd_hessian_min_eig(&f, center, T::from_f64(5e-4))?;
        min_eig = Some(eig);
        if eig < T::from_f64(-1e-6) {
            verdict = Verdict::SaddleOrUncertified;
        }
    }

    Ok(CertifyOutcome {
        verdict,
        center_value,
        threshold,
        max_decrease_smallest_radius: max_smallest,
        max_decrease_any_radius: max_any,
        min_hessian_eigenvalue: min_eig,
    })
}
