//! Minimal from-scratch neural stack: tensors, 1D/2D convolution and
//! transposed convolution with exact reverse-mode gradients, LeakyReLU,
//! MSE loss and Adam.
//!
//! Training math runs in single precision; everything is generic over the
//! scalar so the gradient checks can run the same code in double precision.

pub mod adam;
pub mod conv1d;
pub mod conv2d;
pub mod loss;
pub mod tensor;

pub use adam::Adam;
pub use conv1d::Conv1d;
pub use conv2d::Conv2d;
pub use loss::{mse, mse_grad};
pub use tensor::Tensor;

use core::ops::{AddAssign, MulAssign, SubAssign};
use num_traits::Float;

/// Scalar type of the stack; implemented by `f32` and `f64`.
pub trait Scalar:
    Float + AddAssign + SubAssign + MulAssign + core::fmt::Debug + Default + 'static
{
    fn lit(v: f64) -> Self {
        Self::from(v).unwrap()
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Gather (standard cross-correlation) or scatter (transposed) convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvKind {
    Forward,
    Transposed,
}

/// Per-layer activation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    None,
    /// LeakyReLU; the slope applies on the negative side, the derivative at
    /// exactly zero is taken from the positive branch.
    LeakyRelu(f64),
}

impl Activation {
    pub(crate) fn apply<T: Scalar>(&self, data: &mut [T]) {
        if let Activation::LeakyRelu(slope) = *self {
            let s = T::lit(slope);
            for v in data {
                if *v < T::zero() {
                    *v *= s;
                }
            }
        }
    }

    /// Multiplies `grad` by the activation derivative evaluated at the
    /// pre-activation values.
    pub(crate) fn backprop<T: Scalar>(&self, pre: &[T], grad: &mut [T]) {
        if let Activation::LeakyRelu(slope) = *self {
            let s = T::lit(slope);
            for (g, p) in grad.iter_mut().zip(pre) {
                if *p < T::zero() {
                    *g *= s;
                }
            }
        }
    }
}

/// Elementwise LeakyReLU as a standalone op.
pub fn leaky_relu<T: Scalar>(x: &Tensor<T>, slope: f64) -> Tensor<T> {
    let mut out = x.clone();
    Activation::LeakyRelu(slope).apply(&mut out.values);
    out
}

/// Gradients of one convolution layer: input, weight and bias.
#[derive(Debug, Clone)]
pub struct LayerGrads<T> {
    pub input: Tensor<T>,
    pub weight: alloc::vec::Vec<T>,
    pub bias: alloc::vec::Vec<T>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn leaky_relu_values() {
        let x = Tensor::from_values(vec![3], vec![-1.0f32, 2.0, 0.0]);
        let y = leaky_relu(&x, 0.1);
        assert_eq!(y.values, vec![-0.1, 2.0, 0.0]);
    }

    #[test]
    fn leaky_relu_gradient_at_zero_uses_positive_branch() {
        let pre = [0.0f32, -2.0, 5.0];
        let mut grad = [1.0f32; 3];
        Activation::LeakyRelu(0.1).backprop(&pre, &mut grad);
        assert_eq!(grad, [1.0, 0.1, 1.0]);
    }
}
