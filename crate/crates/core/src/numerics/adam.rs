use crate::error::{Error, Result};

use super::matrix::Matrix;
use super::scalar::Scalar;

/// A trainable tensor together with its gradient and Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBlock<T> {
    pub name: String,
    pub value: Matrix<T>,
    pub grad: Matrix<T>,
    pub adam_m: Matrix<T>,
    pub adam_v: Matrix<T>,
    pub step: u64,
}

impl<T: Scalar> ParamBlock<T> {
    pub fn new(name: impl Into<String>, value: Matrix<T>) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            value,
            grad: Matrix::zeros(r, c),
            adam_m: Matrix::zeros(r, c),
            adam_v: Matrix::zeros(r, c),
            step: 0,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.as_slice().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill_zero();
    }

    /// Converts values to another precision with fresh optimizer state.
    pub fn cast<U: Scalar>(&self) -> ParamBlock<U> {
        ParamBlock::new(self.name.clone(), self.value.cast())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 2e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }
}

/// One bias-corrected Adam update. Zeroes the gradient and advances `step`.
pub fn adam_step<T: Scalar>(block: &mut ParamBlock<T>, config: &AdamConfig) -> Result<()> {
    if !block.grad.is_finite() {
        return Err(Error::TrainingDivergence {
            block: block.name.clone(),
            iteration: None,
        });
    }
    block.step += 1;
    let t = block.step as f64;
    let bc1 = 1.0 - config.beta1.powf(t);
    let bc2 = 1.0 - config.beta2.powf(t);
    // fold both corrections into the step size and epsilon
    let step_size = T::lit(config.lr * bc2.sqrt() / bc1);
    let eps_hat = T::lit(config.eps * bc2.sqrt());
    let b1 = T::lit(config.beta1);
    let b2 = T::lit(config.beta2);
    let one = T::one();

    let ParamBlock {
        value,
        grad,
        adam_m,
        adam_v,
        ..
    } = block;
    let values = value.as_mut_slice();
    let grads = grad.as_mut_slice();
    let ms = adam_m.as_mut_slice();
    let vs = adam_v.as_mut_slice();
    for i in 0..values.len() {
        let g = grads[i];
        let m = b1 * ms[i] + (one - b1) * g;
        let v = b2 * vs[i] + (one - b2) * g * g;
        ms[i] = m;
        vs[i] = v;
        values[i] -= step_size * m / (v.sqrt() + eps_hat);
        grads[i] = T::zero();
    }
    Ok(())
}
