//! Mean-square-error loss.

use super::{Scalar, Tensor};
use crate::Error;

/// Mean of squared differences over all elements.
pub fn mse<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<T, Error> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch);
    }
    if a.numel() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut acc = T::zero();
    for (&x, &y) in a.values.iter().zip(&b.values) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc / T::lit(a.numel() as f64))
}

/// Gradient of [`mse`] with respect to `a`: `2(a - b) / N`.
pub fn mse_grad<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, Error> {
    if a.shape != b.shape {
        return Err(Error::ShapeMismatch);
    }
    if a.numel() == 0 {
        return Err(Error::EmptyInput);
    }
    let scale = T::lit(2.0 / a.numel() as f64);
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| scale * (x - y))
        .collect();
    Ok(Tensor { shape: a.shape.clone(), values, grad: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn identical_inputs_have_zero_loss() {
        let a = Tensor::from_values(vec![3], vec![1.0f64, -2.0, 0.5]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn hand_value() {
        let a = Tensor::from_values(vec![2], vec![0.0f64, 2.0]);
        let b = Tensor::from_values(vec![2], vec![0.0f64, 0.0]);
        assert_eq!(mse(&a, &b).unwrap(), 2.0);
    }

    #[test]
    fn grad_matches_finite_differences() {
        let a = Tensor::from_values(vec![4], vec![0.3f64, -1.2, 2.0, 0.0]);
        let b = Tensor::from_values(vec![4], vec![1.0f64, 0.0, 2.5, -0.25]);
        let g = mse_grad(&a, &b).unwrap();
        let h = 1e-4;
        for i in 0..4 {
            let mut hi = a.clone();
            let mut lo = a.clone();
            hi.values[i] += h;
            lo.values[i] -= h;
            let fd = (mse(&hi, &b).unwrap() - mse(&lo, &b).unwrap()) / (2.0 * h);
            assert!((g.values[i] - fd).abs() < 1e-9, "{} vs {}", g.values[i], fd);
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Tensor::<f64>::zeros(vec![2]);
        let b = Tensor::<f64>::zeros(vec![3]);
        assert!(matches!(mse(&a, &b), Err(Error::ShapeMismatch)));
    }
}
