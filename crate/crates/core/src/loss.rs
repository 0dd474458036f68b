//! Convex differentiable per-example losses and their gradients in the
//! prediction.
//!
//! Every variant keeps h -> loss(h, y) convex and differentiable; the
//! gradient row D is exact, not numerical. Batch helpers average over the
//! rows of stacked prediction/target matrices.

use crate::error::{Error, Result};
use crate::mat::Mat;
use crate::scalar::Scalar;

/// Per-example loss family. All variants are convex and differentiable
/// in the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossKind {
    /// ||h - y||_2^2.
    Squared,
    /// Binary logistic loss, d_y = 1, targets in {0, 1}.
    LogisticBinary,
    /// Softmax cross-entropy against a one-hot target row.
    SoftmaxCrossEntropy,
    /// Quadratically smoothed hinge per coordinate, targets in {-1, +1}.
    SmoothedHinge,
}

impl LossKind {
    pub const ALL: [LossKind; 4] = [
        LossKind::Squared,
        LossKind::LogisticBinary,
        LossKind::SoftmaxCrossEntropy,
        LossKind::SmoothedHinge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::LogisticBinary => "logistic_binary",
            LossKind::SoftmaxCrossEntropy => "softmax_cross_entropy",
            LossKind::SmoothedHinge => "smoothed_hinge",
        }
    }

    pub fn parse(s: &str) -> Result<LossKind> {
        match s {
            "squared" => Ok(LossKind::Squared),
            "logistic_binary" => Ok(LossKind::LogisticBinary),
            "softmax_cross_entropy" => Ok(LossKind::SoftmaxCrossEntropy),
            "smoothed_hinge" => Ok(LossKind::SmoothedHinge),
            other => Err(Error::Config(format!(
                "unknown loss kind {other:?}; expected one of squared, logistic_binary, \
                 softmax_cross_entropy, smoothed_hinge"
            ))),
        }
    }
}

/// Loss value together with the exact gradient row D = d loss / d h.
#[derive(Debug, Clone)]
pub struct LossEval<T> {
    pub value: T,
    /// 1 x d_y gradient row.
    pub d: Mat<T>,
}

fn check_dims<T: Scalar>(h: &[T], y: &[T]) -> Result<()> {
    if h.len() != y.len() {
        return Err(Error::Shape(format!(
            "prediction has {} entries, target has {}",
            h.len(),
            y.len()
        )));
    }
    if h.is_empty() {
        return Err(Error::Shape("empty prediction".into()));
    }
    Ok(())
}

/// log(1 + exp(x)) without overflow for large |x|.
fn softplus<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn eval_squared<T: Scalar>(h: &[T], y: &[T]) -> LossEval<T> {
    let two = T::from_f64(2.0);
    let mut value = T::zero();
    let mut d = Vec::with_capacity(h.len());
    for (&hi, &yi) in h.iter().zip(y) {
        let r = hi - yi;
        value += r * r;
        d.push(two * r);
    }
    LossEval { value, d: Mat::new(1, d.len(), d).expect("finite gradient row") }
}

fn eval_logistic<T: Scalar>(h: &[T], y: &[T]) -> Result<LossEval<T>> {
    if h.len() != 1 {
        return Err(Error::InvalidInput(format!(
            "logistic_binary requires d_y = 1, got {}",
            h.len()
        )));
    }
    let yv = y[0];
    if yv != T::zero() && yv != T::one() {
        return Err(Error::InvalidInput(format!(
            "logistic_binary target must be 0 or 1, got {yv}"
        )));
    }
    let hv = h[0];
    let value = softplus(hv) - yv * hv;
    let sigma = if hv >= T::zero() {
        T::one() / (T::one() + (-hv).exp())
    } else {
        let e = hv.exp();
        e / (T::one() + e)
    };
    let d = Mat::new(1, 1, vec![sigma - yv])?;
    Ok(LossEval { value, d })
}

fn eval_softmax_ce<T: Scalar>(h: &[T], y: &[T]) -> Result<LossEval<T>> {
    let mut hot = None;
    for (k, &yk) in y.iter().enumerate() {
        if yk == T::one() {
            if hot.is_some() {
                return Err(Error::InvalidInput(
                    "softmax_cross_entropy target must be one-hot: multiple ones".into(),
                ));
            }
            hot = Some(k);
        } else if yk != T::zero() {
            return Err(Error::InvalidInput(format!(
                "softmax_cross_entropy target entries must be 0 or 1, got {yk}"
            )));
        }
    }
    let hot = hot.ok_or_else(|| {
        Error::InvalidInput("softmax_cross_entropy target must be one-hot: no one set".into())
    })?;
    let hmax = h.iter().cloned().fold(T::neg_infinity(), T::max);
    let mut total = T::zero();
    let exps: Vec<T> = h.iter().map(|&hk| (hk - hmax).exp()).collect();
    for &e in &exps {
        total += e;
    }
    let value = hmax + total.ln() - h[hot];
    let mut d = Vec::with_capacity(h.len());
    for (k, &e) in exps.iter().enumerate() {
        let p = e / total;
        d.push(if k == hot { p - T::one() } else { p });
    }
    Ok(LossEval { value, d: Mat::new(1, d.len(), d)? })
}

fn eval_smoothed_hinge<T: Scalar>(h: &[T], y: &[T]) -> Result<LossEval<T>> {
    let half = T::from_f64(0.5);
    let mut value = T::zero();
    let mut d = Vec::with_capacity(h.len());
    for (&hk, &yk) in h.iter().zip(y) {
        if yk != T::one() && yk != -T::one() {
            return Err(Error::InvalidInput(format!(
                "smoothed_hinge target entries must be -1 or +1, got {yk}"
            )));
        }
        let margin = yk * hk;
        if margin >= T::one() {
            d.push(T::zero());
        } else if margin >= T::zero() {
            let gap = T::one() - margin;
            value += half * gap * gap;
            d.push(-yk * gap);
        } else {
            value += half - margin;
            d.push(-yk);
        }
    }
    Ok(LossEval { value, d: Mat::new(1, d.len(), d)? })
}

/// Evaluate one example: loss value and exact gradient row in h.
pub fn loss_eval<T: Scalar>(kind: LossKind, h: &[T], y: &[T]) -> Result<LossEval<T>> {
    check_dims(h, y)?;
    if h.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite prediction or target".into()));
    }
    match kind {
        LossKind::Squared => Ok(eval_squared(h, y)),
        LossKind::LogisticBinary => eval_logistic(h, y),
        LossKind::SoftmaxCrossEntropy => eval_softmax_ce(h, y),
        LossKind::SmoothedHinge => eval_smoothed_hinge(h, y),
    }
}

/// Mean loss over rows of stacked predictions H (m x d_y) and targets Y.
pub fn mean_loss<T: Scalar>(kind: LossKind, outputs: &Mat<T>, targets: &Mat<T>) -> Result<T> {
    Ok(mean_loss_with_dmat(kind, outputs, targets)?.0)
}

/// Mean loss plus the stacked gradient rows D (m x d_y), row i being the
/// gradient of the i-th example's loss in its prediction.
pub fn mean_loss_with_dmat<T: Scalar>(
    kind: LossKind,
    outputs: &Mat<T>,
    targets: &Mat<T>,
) -> Result<(T, Mat<T>)> {
    if outputs.rows() != targets.rows() || outputs.cols() != targets.cols() {
        return Err(Error::Shape(format!(
            "outputs are {}x{}, targets are {}x{}",
            outputs.rows(),
            outputs.cols(),
            targets.rows(),
            targets.cols()
        )));
    }
    let m = outputs.rows();
    let mut total = T::zero();
    let mut dmat = Mat::zeros(m, outputs.cols());
    for i in 0..m {
        let e = loss_eval(kind, outputs.row(i), targets.row(i))?;
        total += e.value;
        for j in 0..outputs.cols() {
            dmat[(i, j)] = e.d[(0, j)];
        }
    }
    let inv_m = T::one() / T::from_usize_lossy(m);
    Ok((total * inv_m, dmat))
}

/// Convexity slack loss(t h1 + (1-t) h2) - [t loss(h1) + (1-t) loss(h2)].
/// Non-positive up to rounding for every kind.
pub fn convexity_probe<T: Scalar>(
    kind: LossKind,
    y: &[T],
    h1: &[T],
    h2: &[T],
    t: T,
) -> Result<T> {
    if t < T::zero() || t > T::one() {
        return Err(Error::InvalidInput(format!("interpolation weight {t} outside [0, 1]")));
    }
    check_dims(h1, y)?;
    check_dims(h2, y)?;
    let mid: Vec<T> = h1
        .iter()
        .zip(h2)
        .map(|(&a, &b)| t * a + (T::one() - t) * b)
        .collect();
    let lm = loss_eval(kind, &mid, y)?.value;
    let l1 = loss_eval(kind, h1, y)?.value;
    let l2 = loss_eval(kind, h2, y)?.value;
    Ok(lm - (t * l1 + (T::one() - t) * l2))
}

/// Draw a target row valid for `kind` (dimension d_y), used by randomized
/// checks and synthetic datasets.
pub fn random_valid_target<T: Scalar>(
    kind: LossKind,
    d_y: usize,
    rng: &mut crate::rng::SplitMix64,
) -> Vec<T> {
    match kind {
        LossKind::Squared => (0..d_y).map(|_| T::from_f64(rng.next_gaussian())).collect(),
        LossKind::LogisticBinary => vec![if rng.next_below(2) == 0 { T::zero() } else { T::one() }],
        LossKind::SoftmaxCrossEntropy => {
            let hot = rng.next_below(d_y);
            (0..d_y).map(|k| if k == hot { T::one() } else { T::zero() }).collect()
        }
        LossKind::SmoothedHinge => (0..d_y)
            .map(|_| if rng.next_below(2) == 0 { -T::one() } else { T::one() })
            .collect(),
    }
}
