//! Batch gradient descent over standardized features, shared by the linear
//! and logistic learners.

use serde::{Deserialize, Serialize};

use super::MlError;
use crate::scalar::Scalar;
use crate::tensor::{dot, DenseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Constant step length.
    #[default]
    Fixed,
    /// Barzilai-Borwein step `s.s / s.y` from the last two iterates; the
    /// configured step is used for the first move and whenever the
    /// curvature estimate is not positive.
    TwoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GdConfig<T: Scalar> {
    pub step_size: T,
    pub max_iters: usize,
    pub grad_tol: T,
    pub step_mode: StepMode,
}

impl<T: Scalar> Default for GdConfig<T> {
    fn default() -> Self {
        Self {
            step_size: T::of(1e-3),
            max_iters: 10_000,
            grad_tol: T::of(1e-6),
            step_mode: StepMode::Fixed,
        }
    }
}

impl<T: Scalar> GdConfig<T> {
    pub fn validate(&self) -> Result<(), MlError> {
        if !(self.step_size > T::zero() && self.step_size.is_finite()) {
            return Err(MlError::InvalidConfig("step_size must be > 0".into()));
        }
        if self.max_iters == 0 {
            return Err(MlError::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.grad_tol.is_nan() || self.grad_tol <= T::zero() {
            return Err(MlError::InvalidConfig("grad_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Per-feature centering and scaling learned from the training matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureScale<T: Scalar> {
    pub mean: T,
    /// Population standard deviation; 1 for constant features.
    pub std_dev: T,
    /// Set when the feature takes a single value in training. Constant
    /// features standardize to 0 and receive weight 0.
    pub constant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Standardization<T: Scalar> {
    pub features: Vec<FeatureScale<T>>,
}

impl<T: Scalar> Standardization<T> {
    pub fn fit(x: &DenseMatrix<T>) -> Result<Self, MlError> {
        let means = x.column_means()?;
        let n = T::of_usize(x.rows());
        let mut ss = vec![T::zero(); x.cols()];
        for row in x.row_iter() {
            for ((acc, &v), &m) in ss.iter_mut().zip(row).zip(means.iter()) {
                let d = v - m;
                *acc = *acc + d * d;
            }
        }
        let features = means
            .iter()
            .zip(ss)
            .enumerate()
            .map(|(j, (&mean, ss))| {
                let std_dev = (ss / n).sqrt();
                let scale = T::one().max(mean.abs());
                let column_varies = x.row_iter().any(|r| r[j] != x.get(0, j));
                if !column_varies || std_dev <= T::of(1e-12) * scale {
                    FeatureScale {
                        mean,
                        std_dev: T::one(),
                        constant: true,
                    }
                } else {
                    FeatureScale {
                        mean,
                        std_dev,
                        constant: false,
                    }
                }
            })
            .collect();
        Ok(Self { features })
    }

    pub fn all_constant(&self) -> bool {
        self.features.iter().all(|f| f.constant)
    }

    pub fn transform(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>, MlError> {
        if x.cols() != self.features.len() {
            return Err(MlError::Shape(format!(
                "expected {} feature columns, got {}",
                self.features.len(),
                x.cols()
            )));
        }
        let mut values = Vec::with_capacity(x.rows() * x.cols());
        for row in x.row_iter() {
            for (&v, f) in row.iter().zip(&self.features) {
                values.push(if f.constant {
                    T::zero()
                } else {
                    (v - f.mean) / f.std_dev
                });
            }
        }
        Ok(DenseMatrix::from_shape_vec(x.rows(), x.cols(), values)?)
    }

    /// Maps weights and intercept learned on standardized features back to
    /// the raw feature scale.
    pub fn destandardize(&self, weights: &[T], intercept: T) -> (Vec<T>, T) {
        let mut raw_intercept = intercept;
        let raw = weights
            .iter()
            .zip(&self.features)
            .map(|(&w, f)| {
                if f.constant {
                    T::zero()
                } else {
                    let rw = w / f.std_dev;
                    raw_intercept = raw_intercept - rw * f.mean;
                    rw
                }
            })
            .collect();
        (raw, raw_intercept)
    }
}

/// A differentiable loss over `[w_0, ..., w_{d-1}, b]`.
pub trait Objective<T: Scalar> {
    fn n_params(&self) -> usize;

    /// Writes the gradient into `grad` and returns the loss.
    fn loss_and_grad(&self, params: &[T], grad: &mut [T]) -> T;

    fn loss(&self, params: &[T]) -> T {
        let mut scratch = vec![T::zero(); self.n_params()];
        self.loss_and_grad(params, &mut scratch)
    }
}

/// Mean squared error `(1/n) sum (x_i.w + b - y_i)^2`.
pub struct SquaredError<'a, T: Scalar> {
    pub features: &'a DenseMatrix<T>,
    pub targets: &'a [T],
}

impl<T: Scalar> Objective<T> for SquaredError<'_, T> {
    fn n_params(&self) -> usize {
        self.features.cols() + 1
    }

    fn loss_and_grad(&self, params: &[T], grad: &mut [T]) -> T {
        let d = self.features.cols();
        let (w, b) = (&params[..d], params[d]);
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut loss = T::zero();
        for (row, &y) in self.features.row_iter().zip(self.targets) {
            let r = dot(row, w) + b - y;
            loss = loss + r * r;
            for (g, &x) in grad[..d].iter_mut().zip(row) {
                *g = *g + r * x;
            }
            grad[d] = grad[d] + r;
        }
        let n = T::of_usize(self.targets.len());
        let two_over_n = T::of(2.0) / n;
        grad.iter_mut().for_each(|g| *g = *g * two_over_n);
        loss / n
    }
}

/// Mean binary cross-entropy with a sigmoid link; targets are 0 or 1.
pub struct CrossEntropy<'a, T: Scalar> {
    pub features: &'a DenseMatrix<T>,
    pub targets: &'a [T],
}

/// `ln(1 + e^s)` without overflow.
fn softplus<T: Scalar>(s: T) -> T {
    s.max(T::zero()) + (-s.abs()).exp().ln_1p()
}

/// Logistic function, evaluated on the branch that cannot overflow.
pub fn sigmoid<T: Scalar>(s: T) -> T {
    if s >= T::zero() {
        T::one() / (T::one() + (-s).exp())
    } else {
        let e = s.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Objective<T> for CrossEntropy<'_, T> {
    fn n_params(&self) -> usize {
        self.features.cols() + 1
    }

    fn loss_and_grad(&self, params: &[T], grad: &mut [T]) -> T {
        let d = self.features.cols();
        let (w, b) = (&params[..d], params[d]);
        grad.iter_mut().for_each(|g| *g = T::zero());
        let mut loss = T::zero();
        for (row, &y) in self.features.row_iter().zip(self.targets) {
            let s = dot(row, w) + b;
            loss = loss + softplus(s) - y * s;
            let r = sigmoid(s) - y;
            for (g, &x) in grad[..d].iter_mut().zip(row) {
                *g = *g + r * x;
            }
            grad[d] = grad[d] + r;
        }
        let n = T::of_usize(self.targets.len());
        grad.iter_mut().for_each(|g| *g = *g / n);
        loss / n
    }
}

/// What happened during a descent run. `losses[0]` is the loss at the
/// zero starting point; one entry follows per update.
#[derive(Debug, Clone, PartialEq)]
pub struct GdTrace<T: Scalar> {
    pub losses: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub final_grad_norm: T,
}

fn norm<T: Scalar>(v: &[T]) -> T {
    dot(v, v).sqrt()
}

/// Runs gradient descent from the origin until the gradient norm drops
/// below `grad_tol` or `max_iters` updates have been made.
pub fn descend<T: Scalar, O: Objective<T>>(objective: &O, cfg: &GdConfig<T>) -> (Vec<T>, GdTrace<T>) {
    let p = objective.n_params();
    let mut params = vec![T::zero(); p];
    let mut grad = vec![T::zero(); p];
    let mut next = vec![T::zero(); p];
    let mut next_grad = vec![T::zero(); p];

    let mut losses = vec![objective.loss_and_grad(&params, &mut grad)];
    let mut step = cfg.step_size;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iters {
        if norm(&grad) < cfg.grad_tol {
            converged = true;
            break;
        }
        for ((n, &x), &g) in next.iter_mut().zip(&params).zip(&grad) {
            *n = x - step * g;
        }
        let loss = objective.loss_and_grad(&next, &mut next_grad);

        if cfg.step_mode == StepMode::TwoPoint {
            let mut ss = T::zero();
            let mut sy = T::zero();
            for i in 0..p {
                let s = next[i] - params[i];
                let y = next_grad[i] - grad[i];
                ss = ss + s * s;
                sy = sy + s * y;
            }
            let bb = ss / sy;
            step = if sy > T::zero() && bb.is_finite() {
                bb
            } else {
                cfg.step_size
            };
        }

        std::mem::swap(&mut params, &mut next);
        std::mem::swap(&mut grad, &mut next_grad);
        losses.push(loss);
        iterations += 1;
    }
    if !converged && norm(&grad) < cfg.grad_tol {
        converged = true;
    }
    let final_grad_norm = norm(&grad);
    (
        params,
        GdTrace {
            losses,
            iterations,
            converged,
            final_grad_norm,
        },
    )
}
