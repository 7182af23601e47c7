//! Dense n-dimensional arrays with shape metadata.

use alloc::vec;
use alloc::vec::Vec;

use super::Scalar;

/// An n-dimensional value array; the batched layouts used here are
/// `[batch, channels, length]` (1D path) and `[batch, channels, h, w]`
/// (2D path). `grad`, when attached, matches `values` elementwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    pub shape: Vec<usize>,
    pub values: Vec<T>,
    pub grad: Option<Vec<T>>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor { shape, values: vec![T::zero(); n], grad: None }
    }

    pub fn from_values(shape: Vec<usize>, values: Vec<T>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "shape/value length mismatch"
        );
        Tensor { shape, values, grad: None }
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }

    /// Casts every element; used to run f32 data through f64 checks.
    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            shape: self.shape.clone(),
            values: self.values.iter().map(|&v| U::lit(v.to_f64().unwrap())).collect(),
            grad: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeros_match_shape() {
        let t = Tensor::<f32>::zeros(vec![2, 3, 4]);
        assert_eq!(t.numel(), 24);
        assert!(t.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    #[should_panic]
    fn from_values_checks_length() {
        Tensor::from_values(vec![2, 2], vec![0.0f32; 3]);
    }
}
