//! Residual-network predictor h(x) = W(x + V z(x, theta)) with a
//! configurable deep residual stack z, analytic Jacobians in W and V, and
//! full backpropagated gradients for all parameters.
//!
//! Stack layout: theta[0] embeds x into the first width, then each block l
//! maps z_{l-1} to either z_{l-1} + A_l sigma(z_{l-1}) (skip) or
//! A_l sigma(z_{l-1}) (plain). With identity activation and no bias unit
//! the whole stack is linear in x.
//!
//! Jacobian layouts follow the column-major `vec` of
//! [`projection::vec`](crate::projection::vec): column k*rows+i of a
//! Jacobian in vec(M) differentiates with respect to M[i, k].

use crate::error::{Error, Result};
use crate::loss::{mean_loss, mean_loss_with_dmat, LossKind};
use crate::mat::Mat;
use crate::projection::kron;
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Elementwise nonlinearity of the residual stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn apply<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
            Activation::Tanh => v.tanh(),
            Activation::Sigmoid => {
                if v >= T::zero() {
                    T::one() / (T::one() + (-v).exp())
                } else {
                    let e = v.exp();
                    e / (T::one() + e)
                }
            }
            Activation::Identity => v,
        }
    }

    /// Derivative; at the ReLU kink the subgradient 0 is used.
    pub fn deriv<T: Scalar>(self, v: T) -> T {
        match self {
            Activation::Relu => {
                if v > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Tanh => {
                let t = v.tanh();
                T::one() - t * t
            }
            Activation::Sigmoid => {
                let s = self.apply(v);
                s * (T::one() - s)
            }
            Activation::Identity => T::one(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Activation> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::Config(format!(
                "unknown activation {other:?}; expected relu, tanh, sigmoid or identity"
            ))),
        }
    }
}

/// Architecture of the residual stack z(x, theta).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackConfig {
    /// Output width of each block; empty means a zero stack.
    widths: Vec<usize>,
    activation: Activation,
    use_skip: bool,
    append_bias_unit: bool,
    /// Length of z. Equals last width (+1 with the bias unit) when blocks
    /// exist; chosen freely for the zero stack.
    d_z: usize,
}

impl StackConfig {
    pub fn new(
        widths: Vec<usize>,
        activation: Activation,
        use_skip: bool,
        append_bias_unit: bool,
        d_z: usize,
    ) -> Result<Self> {
        if d_z == 0 {
            return Err(Error::Config("d_z must be at least 1".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::Config("stack widths must be at least 1".into()));
        }
        if use_skip && widths.windows(2).any(|w| w[0] != w[1]) {
            return Err(Error::Config(format!(
                "skip connections need equal widths, got {widths:?}"
            )));
        }
        match widths.last() {
            Some(&last) => {
                let expect = last + usize::from(append_bias_unit);
                if d_z != expect {
                    return Err(Error::Config(format!(
                        "d_z = {d_z} inconsistent with final width {last} \
                         (bias unit: {append_bias_unit}); expected {expect}"
                    )));
                }
            }
            None => {
                if append_bias_unit {
                    return Err(Error::Config(
                        "a zero-depth stack outputs the zero vector; it cannot carry a \
                         bias unit"
                            .into(),
                    ));
                }
            }
        }
        Ok(Self { widths, activation, use_skip, append_bias_unit, d_z })
    }

    /// Depth-0 stack: z is identically the zero vector of length `d_z`.
    pub fn zero_stack(d_z: usize) -> Result<Self> {
        Self::new(Vec::new(), Activation::Identity, false, false, d_z)
    }

    /// Constant-width stack of the given depth.
    pub fn uniform(
        depth: usize,
        width: usize,
        activation: Activation,
        use_skip: bool,
        append_bias_unit: bool,
    ) -> Result<Self> {
        if depth == 0 {
            return Self::zero_stack(width);
        }
        let d_z = width + usize::from(append_bias_unit);
        Self::new(vec![width; depth], activation, use_skip, append_bias_unit, d_z)
    }

    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn use_skip(&self) -> bool {
        self.use_skip
    }

    pub fn append_bias_unit(&self) -> bool {
        self.append_bias_unit
    }

    pub fn d_z(&self) -> usize {
        self.d_z
    }

    /// Shapes of theta: the embedding then one matrix per block.
    pub fn theta_shapes(&self, d_x: usize) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        if let Some(&w1) = self.widths.first() {
            shapes.push((w1, d_x));
            let mut prev = w1;
            for &w in &self.widths {
                shapes.push((w, prev));
                prev = w;
            }
        }
        shapes
    }
}

/// Trainable parameters: output map W (d_y x d_x), mixing map V
/// (d_x x d_z), stack weights theta.
#[derive(Debug, Clone, PartialEq)]
pub struct ResNetParams<T> {
    pub w: Mat<T>,
    pub v: Mat<T>,
    pub theta: Vec<Mat<T>>,
}

impl<T: Scalar> ResNetParams<T> {
    /// Seeded Gaussian initialization with std sqrt(2 / fan_in) per matrix.
    pub fn he_init(config: &StackConfig, d_x: usize, d_y: usize, rng: &mut SplitMix64) -> Self {
        let std_of = |fan_in: usize| (2.0 / fan_in as f64).sqrt();
        let w = rng.gaussian_mat(d_y, d_x, std_of(d_x));
        let v = rng.gaussian_mat(d_x, config.d_z(), std_of(config.d_z()));
        let theta = config
            .theta_shapes(d_x)
            .into_iter()
            .map(|(r, c)| rng.gaussian_mat(r, c, std_of(c)))
            .collect();
        Self { w, v, theta }
    }

    pub fn d_x(&self) -> usize {
        self.w.cols()
    }

    pub fn d_y(&self) -> usize {
        self.w.rows()
    }

    pub fn d_z(&self) -> usize {
        self.v.cols()
    }

    pub fn validate(&self, config: &StackConfig, d_x: usize, d_y: usize) -> Result<()> {
        if self.w.rows() != d_y || self.w.cols() != d_x {
            return Err(Error::Shape(format!(
                "W is {}x{}, expected {}x{}",
                self.w.rows(),
                self.w.cols(),
                d_y,
                d_x
            )));
        }
        if self.v.rows() != d_x || self.v.cols() != config.d_z() {
            return Err(Error::Shape(format!(
                "V is {}x{}, expected {}x{}",
                self.v.rows(),
                self.v.cols(),
                d_x,
                config.d_z()
            )));
        }
        let shapes = config.theta_shapes(d_x);
        if self.theta.len() != shapes.len() {
            return Err(Error::Shape(format!(
                "theta has {} matrices, expected {}",
                self.theta.len(),
                shapes.len()
            )));
        }
        for (k, ((r, c), m)) in shapes.iter().zip(&self.theta).enumerate() {
            if m.rows() != *r || m.cols() != *c {
                return Err(Error::Shape(format!(
                    "theta[{k}] is {}x{}, expected {r}x{c}",
                    m.rows(),
                    m.cols()
                )));
            }
        }
        Ok(())
    }

    /// Total scalar parameter count.
    pub fn n_params(&self) -> usize {
        let mut n = self.w.rows() * self.w.cols() + self.v.rows() * self.v.cols();
        for m in &self.theta {
            n += m.rows() * m.cols();
        }
        n
    }

    /// Flattens all parameters into one vector, W then V then theta in
    /// storage (row-major) order. Inverse of [`from_flat`].
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.n_params());
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(self.v.as_slice());
        for m in &self.theta {
            out.extend_from_slice(m.as_slice());
        }
        out
    }

    /// Rebuilds parameters with this value's shapes from a flat vector.
    pub fn from_flat(&self, flat: &[T]) -> Result<Self> {
        if flat.len() != self.n_params() {
            return Err(Error::Shape(format!(
                "flat vector has {} entries, parameters need {}",
                flat.len(),
                self.n_params()
            )));
        }
        let mut at = 0;
        let mut take = |rows: usize, cols: usize| -> Result<Mat<T>> {
            let m = Mat::new(rows, cols, flat[at..at + rows * cols].to_vec())?;
            at += rows * cols;
            Ok(m)
        };
        let w = take(self.w.rows(), self.w.cols())?;
        let v = take(self.v.rows(), self.v.cols())?;
        let theta = self
            .theta
            .iter()
            .map(|m| take(m.rows(), m.cols()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { w, v, theta })
    }
}

/// Gradients matching [`ResNetParams`] shape for shape.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub w: Mat<T>,
    pub v: Mat<T>,
    pub theta: Vec<Mat<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Euclidean norm over every parameter entry.
    pub fn norm(&self) -> T {
        let mut acc = self.w.frob_norm().powi(2) + self.v.frob_norm().powi(2);
        for m in &self.theta {
            acc += m.frob_norm().powi(2);
        }
        acc.sqrt()
    }

    /// Same flat layout as `ResNetParams::to_flat`.
    pub fn to_flat(&self) -> Vec<T> {
        let mut out = Vec::new();
        out.extend_from_slice(self.w.as_slice());
        out.extend_from_slice(self.v.as_slice());
        for m in &self.theta {
            out.extend_from_slice(m.as_slice());
        }
        out
    }
}

/// Training data: inputs X (m x d_x) by rows, targets Y (m x d_y).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet<T> {
    pub x: Mat<T>,
    pub y: Mat<T>,
    pub bias_augmented: bool,
}

impl<T: Scalar> DataSet<T> {
    pub fn new(x: Mat<T>, y: Mat<T>) -> Result<Self> {
        if x.rows() != y.rows() {
            return Err(Error::Shape(format!(
                "X has {} rows, Y has {}",
                x.rows(),
                y.rows()
            )));
        }
        Ok(Self { x, y, bias_augmented: false })
    }

    pub fn m(&self) -> usize {
        self.x.rows()
    }

    pub fn d_x(&self) -> usize {
        self.x.cols()
    }

    pub fn d_y(&self) -> usize {
        self.y.cols()
    }

    /// Appends an all-ones input column so linear maps gain a bias.
    pub fn augment_bias(&self) -> Result<Self> {
        if self.bias_augmented {
            return Err(Error::InvalidInput("dataset already bias-augmented".into()));
        }
        let ones = Mat::from_fn(self.m(), 1, |_, _| T::one());
        Ok(Self {
            x: Mat::hstack(&[&self.x, &ones])?,
            y: self.y.clone(),
            bias_augmented: true,
        })
    }

    /// Drops the trailing ones column added by [`augment_bias`].
    pub fn strip_bias(&self) -> Result<Self> {
        if !self.bias_augmented {
            return Err(Error::InvalidInput("dataset is not bias-augmented".into()));
        }
        Ok(Self {
            x: self.x.col_range(0, self.d_x() - 1),
            y: self.y.clone(),
            bias_augmented: false,
        })
    }

    /// Largest input row norm, used to size certification radii.
    pub fn max_input_norm(&self) -> T {
        (0..self.m())
            .map(|i| {
                self.x
                    .row(i)
                    .iter()
                    .map(|&v| v * v)
                    .sum::<T>()
                    .sqrt()
            })
            .fold(T::zero(), T::max)
    }
}

fn check_x_len<T: Scalar>(x: &[T], expect: usize) -> Result<()> {
    if x.len() != expect {
        return Err(Error::Shape(format!(
            "input has {} entries, model expects {}",
            x.len(),
            expect
        )));
    }
    Ok(())
}

/// Batch stack evaluation: row i of the result is z(x_i, theta)^T.
pub fn stack_outputs<T: Scalar>(
    x: &Mat<T>,
    theta: &[Mat<T>],
    config: &StackConfig,
) -> Result<Mat<T>> {
    let shapes = config.theta_shapes(x.cols());
    if theta.len() != shapes.len() {
        return Err(Error::Shape(format!(
            "theta has {} matrices, stack needs {}",
            theta.len(),
            shapes.len()
        )));
    }
    for ((r, c), m) in shapes.iter().zip(theta) {
        if m.rows() != *r || m.cols() != *c {
            return Err(Error::Shape(format!(
                "stack weight is {}x{}, expected {r}x{c}",
                m.rows(),
                m.cols()
            )));
        }
    }
    if config.depth() == 0 {
        return Ok(Mat::zeros(x.rows(), config.d_z()));
    }
    let act = config.activation();
    let mut z = x * &theta[0].transpose();
    for a in &theta[1..] {
        let s = z.map(|v| act.apply(v));
        let block = &s * &a.transpose();
        z = if config.use_skip() { &z + &block } else { block };
    }
    if config.append_bias_unit() {
        let ones = Mat::from_fn(x.rows(), 1, |_, _| T::one());
        z = Mat::hstack(&[&z, &ones])?;
    }
    Ok(z)
}

/// Single-example stack output z(x, theta).
pub fn residual_forward<T: Scalar>(
    x: &[T],
    theta: &[Mat<T>],
    config: &StackConfig,
) -> Result<Vec<T>> {
    if x.is_empty() {
        return Err(Error::Shape("empty input vector".into()));
    }
    let xm = Mat::row_vector(x);
    Ok(stack_outputs(&xm, theta, config)?.row(0).to_vec())
}

/// Batch prediction: row i is h(x_i)^T = (x_i + V z_i)^T W^T.
pub fn batch_predict<T: Scalar>(
    x: &Mat<T>,
    params: &ResNetParams<T>,
    config: &StackConfig,
) -> Result<Mat<T>> {
    if x.cols() != params.d_x() {
        return Err(Error::Shape(format!(
            "inputs have {} columns, model expects {}",
            x.cols(),
            params.d_x()
        )));
    }
    let z = stack_outputs(x, &params.theta, config)?;
    if z.cols() != params.d_z() {
        return Err(Error::Shape(format!(
            "stack outputs width {}, V expects {}",
            z.cols(),
            params.d_z()
        )));
    }
    let mixed = x + &(&z * &params.v.transpose());
    Ok(&mixed * &params.w.transpose())
}

/// Single-example prediction h(x) = W (x + V z(x, theta)).
pub fn predict<T: Scalar>(
    x: &[T],
    params: &ResNetParams<T>,
    config: &StackConfig,
) -> Result<Vec<T>> {
    check_x_len(x, params.d_x())?;
    Ok(batch_predict(&Mat::row_vector(x), params, config)?.row(0).to_vec())
}

/// Jacobian of h with respect to vec(W): (x + V z)^T (x) I_{d_y},
/// shape d_y x (d_y * d_x).
pub fn dh_dw<T: Scalar>(
    x: &[T],
    params: &ResNetParams<T>,
    config: &StackConfig,
) -> Result<Mat<T>> {
    check_x_len(x, params.d_x())?;
    let z = residual_forward(x, &params.theta, config)?;
    let vz = &params.v * &Mat::col_vector(&z);
    let mixed: Vec<T> = x.iter().zip(vz.as_slice()).map(|(&a, &b)| a + b).collect();
    Ok(kron(&Mat::row_vector(&mixed), &Mat::identity(params.d_y())))
}

/// Jacobian of h with respect to vec(V): z^T (x) W,
/// shape d_y x (d_x * d_z).
pub fn dh_dv<T: Scalar>(
    x: &[T],
    params: &ResNetParams<T>,
    config: &StackConfig,
) -> Result<Mat<T>> {
    check_x_len(x, params.d_x())?;
    let z = residual_forward(x, &params.theta, config)?;
    Ok(kron(&Mat::row_vector(&z), &params.w))
}

/// Mean loss of the model over the dataset.
pub fn empirical_objective<T: Scalar>(
    data: &DataSet<T>,
    params: &ResNetParams<T>,
    config: &StackConfig,
    kind: LossKind,
) -> Result<T> {
    let outputs = batch_predict(&data.x, params, config)?;
    mean_loss(kind, &outputs, &data.y)
}

/// Mean loss and its gradient in every parameter, by reverse accumulation
/// through the stack.
pub fn grad_loss_params<T: Scalar>(
    data: &DataSet<T>,
    params: &ResNetParams<T>,
    config: &StackConfig,
    kind: LossKind,
) -> Result<(T, Gradients<T>)> {
    params.validate(config, data.d_x(), data.d_y())?;

    // Forward pass, retaining each block input for the backward sweep.
    let depth = config.depth();
    let act = config.activation();
    let mut pre: Vec<Mat<T>> = Vec::with_capacity(depth + 1);
    if depth > 0 {
        let mut z = &data.x * &params.theta[0].transpose();
        for a in &params.theta[1..] {
            pre.push(z.clone());
            let s = z.map(|v| act.apply(v));
            let block = &s * &a.transpose();
            z = if config.use_skip() { &z + &block } else { block };
        }
        pre.push(z);
    }
    let z_core = pre.last().cloned().unwrap_or_else(|| {
        Mat::zeros(data.m(), config.d_z())
    });
    let z_full = if depth > 0 && config.append_bias_unit() {
        let ones = Mat::from_fn(data.m(), 1, |_, _| T::one());
        Mat::hstack(&[&z_core, &ones])?
    } else {
        z_core.clone()
    };

    let mixed = &data.x + &(&z_full * &params.v.transpose());
    let outputs = &mixed * &params.w.transpose();
    let (value, dmat) = mean_loss_with_dmat(kind, &outputs, &data.y)?;
    if !value.is_finite() {
        return Err(Error::Numerical("non-finite loss value".into()));
    }
    let inv_m = T::one() / T::from_usize_lossy(data.m());
    let dmat = dmat.scaled(inv_m);

    // d loss / d outputs = dmat; outputs = mixed W^T.
    let g_w = &dmat.transpose() * &mixed;
    let d_mixed = &dmat * &params.w;
    let g_v = &d_mixed.transpose() * &z_full;

    let mut g_theta: Vec<Mat<T>> = Vec::new();
    if depth > 0 {
        // Gradient flowing into the stack output (bias column carries none).
        let mut g_z = &d_mixed * &params.v;
        if config.append_bias_unit() {
            g_z = g_z.col_range(0, config.d_z() - 1);
        }
        // Backward through blocks; pre[l-1] is block l's input.
        let mut g_blocks: Vec<Mat<T>> = Vec::with_capacity(depth);
        for l in (1..=depth).rev() {
            let z_in = &pre[l - 1];
            let s = z_in.map(|v| act.apply(v));
            g_blocks.push(&g_z.transpose() * &s);
            let through_act = (&g_z * &params.theta[l]).hadamard(&z_in.map(|v| act.deriv(v)));
            g_z = if config.use_skip() { &g_z + &through_act } else { through_act };
        }
        g_blocks.reverse();
        // Embedding: z_0 = X E^T.
        g_theta.push(&g_z.transpose() * &data.x);
        g_theta.extend(g_blocks);
    }

    Ok((value, Gradients { w: g_w, v: g_v, theta: g_theta }))
}

/// One-hidden-layer feedforward net without skip: W2 max(0, W1 x).
pub fn plain_relu_net_predict<T: Scalar>(x: &[T], w1: &Mat<T>, w2: &Mat<T>) -> Result<Vec<T>> {
    check_x_len(x, w1.cols())?;
    if w2.cols() != w1.rows() {
        return Err(Error::Shape(format!(
            "hidden layer is {}x{}, output layer is {}x{}",
            w1.rows(),
            w1.cols(),
            w2.rows(),
            w2.cols()
        )));
    }
    let hidden = (&(w1 * &Mat::col_vector(x))).map(|v| v.max(T::zero()));
    Ok((w2 * &hidden).col(0))
}
