//! Seeded synthetic datasets: raw Gaussian draws and planted-teacher
//! targets. Both are pure functions of their arguments, so experiment
//! runs are reproducible from (config, seed) alone.

use crate::error::{Error, Result};
use crate::loss::{random_valid_target, LossKind};
use crate::mat::Mat;
use crate::model::{batch_predict, DataSet, ResNetParams, StackConfig};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

const DATA_TAG: u64 = 0x6461_7461;
const TEACHER_TAG: u64 = 0x7465_6163;

fn check_dims(m: usize, d_x: usize, d_y: usize) -> Result<()> {
    if m == 0 || d_x == 0 || d_y == 0 {
        return Err(Error::Config(format!(
            "dataset dimensions must be positive, got m={m}, d_x={d_x}, d_y={d_y}"
        )));
    }
    Ok(())
}

/// Inputs N(x_mean, 1) entrywise, targets N(0, 1). With m > d_x the
/// targets almost surely have a nonzero component outside col(X), so
/// the linear-fit optimum stays strictly positive. A nonzero `x_mean`
/// pushes the inputs into a halfspace, which the dead-unit construction
/// needs.
pub fn gaussian_dataset<T: Scalar>(
    m: usize,
    d_x: usize,
    d_y: usize,
    x_mean: f64,
    seed: u64,
) -> Result<DataSet<T>> {
    labeled_dataset(m, d_x, d_y, x_mean, LossKind::Squared, seed)
}

/// Gaussian inputs with target rows drawn from the valid-target family
/// of the given loss: Gaussian for squared loss, one-hot rows for
/// softmax cross-entropy, {0,1} for binary logistic (d_y must be 1),
/// and ±1 entries for the smoothed hinge. For squared loss this is
/// entrywise identical to [`gaussian_dataset`].
pub fn labeled_dataset<T: Scalar>(
    m: usize,
    d_x: usize,
    d_y: usize,
    x_mean: f64,
    kind: LossKind,
    seed: u64,
) -> Result<DataSet<T>> {
    check_dims(m, d_x, d_y)?;
    if kind == LossKind::LogisticBinary && d_y != 1 {
        return Err(Error::Config(format!(
            "binary logistic targets need d_y = 1, got d_y={d_y}"
        )));
    }
    let mut rng = SplitMix64::derive(seed, DATA_TAG);
    let x = Mat::from_fn(m, d_x, |_, _| T::from_f64(x_mean + rng.next_gaussian()));
    let mut rows = Vec::with_capacity(m * d_y);
    for _ in 0..m {
        rows.extend(random_valid_target::<T>(kind, d_y, &mut rng));
    }
    DataSet::new(x, Mat::new(m, d_y, rows)?)
}

/// Gaussian inputs with targets produced by a freshly drawn model of the
/// given architecture, plus optional Gaussian noise. Returns the planted
/// parameters alongside the data; with noise_std = 0 they attain zero
/// squared loss exactly.
pub fn teacher_dataset<T: Scalar>(
    m: usize,
    d_x: usize,
    d_y: usize,
    config: &StackConfig,
    noise_std: f64,
    seed: u64,
) -> Result<(DataSet<T>, ResNetParams<T>)> {
    check_dims(m, d_x, d_y)?;
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::Config(format!("noise_std must be finite and >= 0, got {noise_std}")));
    }
    let mut teacher_rng = SplitMix64::derive(seed, TEACHER_TAG);
    let teacher = ResNetParams::he_init(config, d_x, d_y, &mut teacher_rng);
    let mut rng = SplitMix64::derive(seed, DATA_TAG);
    let x = rng.gaussian_mat(m, d_x, 1.0);
    let clean = batch_predict(&x, &teacher, config)?;
    let y = if noise_std == 0.0 {
        clean
    } else {
        let noise: Mat<T> = rng.gaussian_mat(m, d_y, noise_std);
        &clean + &noise
    };
    Ok((DataSet::new(x, y)?, teacher))
}
