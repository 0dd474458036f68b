//! Constructs a plain (no skip connection) one-hidden-layer ReLU net
//! whose hidden units are all inactive on the dataset. The zero output
//! is locally optimal yet strictly worse than the best linear fit —
//! the residual architecture provably avoids this trap, the plain one
//! does not.

use crate::error::{Error, Result};
use crate::landscape::certify::{certify_fn, CertificationConfig, CertifyOutcome};
use crate::loss::{mean_loss, LossKind};
use crate::mat::Mat;
use crate::model::{plain_relu_net_predict, DataSet};
use crate::oracle::sq_oracle_x;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Hidden units in the constructed net; all share one dead direction.
const HIDDEN_WIDTH: usize = 2;
/// Resampled directions to try before declaring the dataset infeasible.
const DIRECTION_BUDGET: usize = 200;

#[derive(Debug, Clone)]
pub struct DeadReluCounterexample<T> {
    /// Hidden layer, every pre-activation strictly below -c on the data.
    pub w1: Mat<T>,
    /// Output layer, identically zero.
    pub w2: Mat<T>,
    /// Mean squared loss of the constant-zero output, (1/m)Σ‖yᵢ‖².
    pub local_value: T,
    /// Best linear fit over the raw inputs.
    pub oracle_value: T,
    /// local_value − oracle_value; strictly positive for every accepted
    /// construction.
    pub separation: T,
    /// Probe radius 0.1·c / maxᵢ‖xᵢ‖ used for certification.
    pub certification_radius: T,
    pub certification: CertifyOutcome<T>,
}

fn plain_net_mean_loss<T: Scalar>(
    data: &DataSet<T>,
    w1: &Mat<T>,
    w2: &Mat<T>,
) -> Result<T> {
    let m = data.m();
    let d_y = data.d_y();
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        rows.push(plain_relu_net_predict(&data.x.row(i), w1, w2)?);
    }
    let h = Mat::from_fn(m, d_y, |i, j| rows[i][j]);
    mean_loss(LossKind::Squared, &h, &data.y)
}

/// Builds the dead-unit point for squared loss and certifies it.
///
/// Rejects the dataset when the zero output already matches the linear
/// optimum (no separation to demonstrate) or when no direction places
/// every input strictly inside an open halfspace (units cannot all be
/// driven below -c).
pub fn build_dead_relu_counterexample<T: Scalar>(
    data: &DataSet<T>,
    c: T,
    seed: u64,
) -> Result<DeadReluCounterexample<T>> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(Error::InvalidInput(format!("margin c must be positive and finite, got {c}")));
    }
    let m = data.m();
    let d_x = data.d_x();
    let d_y = data.d_y();

    let oracle_value = sq_oracle_x(&data.x, &data.y)?;
    let local_value = mean_loss(LossKind::Squared, &Mat::zeros(m, d_y), &data.y)?;
    let separation = local_value - oracle_value;
    if separation <= T::from_f64(1e-12) * (T::one() + local_value) {
        return Err(Error::Infeasible(format!(
            "zero-output loss {local_value:e} does not exceed the linear-fit optimum \
             {oracle_value:e}; the construction would not separate"
        )));
    }

    // A direction whose inner products with every input share one strict
    // sign; flipped so they are all negative.
    let mut rng = SplitMix64::derive(seed, 0x6465_6164);
    let mut direction: Option<Vec<T>> = None;
    for _ in 0..DIRECTION_BUDGET {
        let w: Vec<T> = rng.unit_vector(d_x);
        let dots: Vec<T> = (0..m)
            .map(|i| data.x.row(i).iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>())
            .collect();
        if dots.iter().any(|&d| d == T::zero()) {
            continue;
        }
        if dots.iter().all(|&d| d < T::zero()) {
            direction = Some(w);
            break;
        }
        if dots.iter().all(|&d| d > T::zero()) {
            direction = Some(w.into_iter().map(|v| -v).collect());
            break;
        }
    }
    let w = direction.ok_or_else(|| {
        Error::Infeasible(format!(
            "no direction keeps all {m} inputs strictly inside an open halfspace \
             after {DIRECTION_BUDGET} attempts; hidden units cannot all be made dead"
        ))
    })?;

    let min_abs_dot = (0..m)
        .map(|i| data.x.row(i).iter().zip(&w).map(|(&a, &b)| a * b).sum::<T>().abs())
        .fold(T::infinity(), T::min);
    // Scale so every pre-activation sits below -1.1c, leaving margin for
    // the certification probes.
    let scale = T::from_f64(1.1) * c / min_abs_dot;
    let w1 = Mat::from_fn(HIDDEN_WIDTH, d_x, |_, j| w[j] * scale);
    let w2 = Mat::zeros(d_y, HIDDEN_WIDTH);

    // ‖δW1‖_F ≤ radius shifts each pre-activation by at most
    // radius·max‖xᵢ‖ = 0.1c, so every unit stays dead in the probed ball.
    let radius = T::from_f64(0.1) * c / data.max_input_norm();
    let cert_cfg = CertificationConfig {
        n_directions: 64,
        radii: vec![radius],
        hessian_check: false,
        hessian_dim_cap: 2000,
    };
    let mut flat = Vec::with_capacity(w1.rows() * d_x + d_y * HIDDEN_WIDTH);
    flat.extend_from_slice(w1.as_slice());
    flat.extend_from_slice(w2.as_slice());
    let f = |p: &[T]| -> Result<T> {
        let (p1, p2) = p.split_at(HIDDEN_WIDTH * d_x);
        let c1 = Mat::new(HIDDEN_WIDTH, d_x, p1.to_vec())?;
        let c2 = Mat::new(d_y, HIDDEN_WIDTH, p2.to_vec())?;
        plain_net_mean_loss(data, &c1, &c2)
    };
    let mut cert_rng = SplitMix64::derive(seed, 0x7072_6f62);
    let certification = certify_fn(f, &flat, &cert_cfg, &mut cert_rng)?;

    Ok(DeadReluCounterexample {
        w1,
        w2,
        local_value,
        oracle_value,
        separation,
        certification_radius: radius,
        certification,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::certify::Verdict;

    #[test]
    fn hand_instance_separates_by_exactly_one() {
        // Single sample x = 1, y = 1: the linear fit is exact (optimum 0)
        // while the dead net is stuck at loss 1.
        let data = DataSet::new(Mat::from_rows(&[[1.0]]), Mat::from_rows(&[[1.0]])).unwrap();
        let out = build_dead_relu_counterexample(&data, 0.5, 3).unwrap();
        assert!((out.separation - 1.0_f64).abs() <= 1e-12);
        assert_eq!(out.local_value, 1.0);
        assert_eq!(out.oracle_value, 0.0);
        assert_eq!(out.certification.verdict, Verdict::CertifiedLocalMin);
        // Pre-activations clear the margin: w1 x < -c.
        for k in 0..out.w1.rows() {
            assert!(out.w1[(k, 0)] * 1.0 < -0.5);
        }
    }

    #[test]
    fn zero_targets_are_rejected() {
        let data =
            DataSet::new(Mat::from_rows(&[[1.0], [2.0]]), Mat::from_rows(&[[0.0], [0.0]])).unwrap();
        let err = build_dead_relu_counterexample(&data, 0.5, 3).unwrap_err();
        assert!(matches!(err, Error::Infeasible(_)), "got {err:?}");
    }

    #[test]
    fn feasible_random_datasets_separate_and_certify() {
        for seed in 0..10u64 {
            let mut rng = SplitMix64::new(900 + seed);
            // Shifted inputs keep all samples inside a halfspace, making
            // the dead direction findable.
            let x = Mat::from_fn(12, 3, |_, _| 2.5 + rng.next_gaussian());
            let y: Mat<f64> = rng.gaussian_mat(12, 2, 1.0);
            let data = DataSet::new(x, y).unwrap();
            let out = build_dead_relu_counterexample(&data, 0.25, seed).unwrap();
            assert!(out.separation > 0.0, "no separation at seed {seed}");
            assert_eq!(out.certification.verdict, Verdict::CertifiedLocalMin);
            assert_eq!(out.certification.max_decrease_any_radius, 0.0);
        }
    }

    #[test]
    fn mixed_sign_inputs_are_infeasible() {
        // Antipodal inputs defeat every halfspace. Targets are chosen
        // linearly fittable so the separation gate passes and the failure
        // comes from the direction search itself.
        let data = DataSet::new(
            Mat::from_rows(&[[1.0, 0.0], [-1.0, 0.0]]),
            Mat::from_rows(&[[1.0], [-1.0]]),
        )
        .unwrap();
        let err = build_dead_relu_counterexample(&data, 0.5, 7).unwrap_err();
        match err {
            Error::Infeasible(msg) => assert!(msg.contains("direction"), "{msg}"),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_margin() {
        let data = DataSet::new(Mat::from_rows(&[[1.0]]), Mat::from_rows(&[[1.0]])).unwrap();
        assert!(build_dead_relu_counterexample(&data, 0.0, 1).is_err());
        assert!(build_dead_relu_counterexample(&data, -1.0, 1).is_err());
    }
}
