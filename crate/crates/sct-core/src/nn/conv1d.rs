//! 1D convolution / transposed convolution over `[batch, channels, length]`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::{Activation, ConvKind, LayerGrads, Scalar, Tensor};
use crate::rng::SplitMix64;
use crate::Error;

/// A convolution layer with zero padding, optional stride and a fused
/// activation.
///
/// Weight layout is `[out_ch][in_ch][k]` for `ConvKind::Forward` and
/// `[in_ch][out_ch][k]` for `ConvKind::Transposed`; with that convention a
/// transposed layer running the same array as a forward layer computes the
/// exact matrix transpose of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    pub kind: ConvKind,
    pub in_ch: usize,
    pub out_ch: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
    pub act: Activation,
}

/// Inclusive index range `lo..=hi` of `j < dst_len` with
/// `0 <= j*stride + off < src_len`, or `None` when empty.
#[inline]
pub(crate) fn tap_range(
    src_len: usize,
    dst_len: usize,
    stride: usize,
    off: isize,
) -> Option<(usize, usize)> {
    let lo = if off >= 0 {
        0usize
    } else {
        ((-off) as usize).div_ceil(stride)
    };
    let hi_num = src_len as isize - 1 - off;
    if hi_num < 0 {
        return None;
    }
    let hi = (hi_num as usize / stride).min(dst_len - 1);
    if lo > hi {
        None
    } else {
        Some((lo, hi))
    }
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(
        kind: ConvKind,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        act: Activation,
    ) -> Self {
        let weight = vec![T::zero(); in_ch * out_ch * kernel];
        let bias = vec![T::zero(); out_ch];
        Conv1d { kind, in_ch, out_ch, kernel, stride, padding, weight, bias, act }
    }

    /// Seeded fan-in init: weights uniform in `±sqrt(1/(in_ch*k))`, zero bias.
    pub fn init(mut self, rng: &mut SplitMix64) -> Self {
        let bound = (1.0 / (self.in_ch * self.kernel) as f64).sqrt();
        for w in &mut self.weight {
            *w = T::lit((rng.next_f64() * 2.0 - 1.0) * bound);
        }
        self
    }

    pub fn out_len(&self, in_len: usize) -> usize {
        match self.kind {
            ConvKind::Forward => (in_len + 2 * self.padding - self.kernel) / self.stride + 1,
            ConvKind::Transposed => (in_len - 1) * self.stride + self.kernel - 2 * self.padding,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize), Error> {
        if x.shape.len() != 3 || x.shape[1] != self.in_ch {
            return Err(Error::ShapeMismatch);
        }
        let (batch, len) = (x.shape[0], x.shape[2]);
        if self.kind == ConvKind::Forward && len + 2 * self.padding < self.kernel {
            return Err(Error::ShapeMismatch);
        }
        Ok((batch, len))
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, Error> {
        Ok(self.forward_train(x)?.0)
    }

    /// Forward pass returning the pre-activation values needed by
    /// [`backward`](Self::backward) when an activation is present.
    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Option<Vec<T>>), Error> {
        let (batch, li) = self.check_input(x)?;
        let lo = self.out_len(li);
        let mut out = Tensor::zeros(vec![batch, self.out_ch, lo]);
        match self.kind {
            ConvKind::Forward => self.gather_forward(&x.values, batch, li, &mut out.values, lo),
            ConvKind::Transposed => self.scatter_forward(&x.values, batch, li, &mut out.values, lo),
        }
        let pre = if self.act == Activation::None { None } else { Some(out.values.clone()) };
        self.act.apply(&mut out.values);
        Ok((out, pre))
    }

    /// Exact gradients of the forward map with respect to input, weights and
    /// bias. `pre` must be the cached pre-activation whenever the layer has
    /// an activation.
    pub fn backward(
        &self,
        x: &Tensor<T>,
        pre: Option<&[T]>,
        gout: &Tensor<T>,
    ) -> Result<LayerGrads<T>, Error> {
        let (batch, li) = self.check_input(x)?;
        let lo = self.out_len(li);
        if gout.shape.as_slice() != [batch, self.out_ch, lo] {
            return Err(Error::ShapeMismatch);
        }
        let mut dpre = gout.values.clone();
        if self.act != Activation::None {
            let pre = pre.ok_or(Error::ShapeMismatch)?;
            if pre.len() != dpre.len() {
                return Err(Error::ShapeMismatch);
            }
            self.act.backprop(pre, &mut dpre);
        }

        let mut grads = LayerGrads {
            input: Tensor::zeros(x.shape.clone()),
            weight: vec![T::zero(); self.weight.len()],
            bias: vec![T::zero(); self.bias.len()],
        };
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let g_row = &dpre[(b * self.out_ch + oc) * lo..][..lo];
                let mut sum = T::zero();
                for &g in g_row {
                    sum += g;
                }
                grads.bias[oc] += sum;
            }
        }
        match self.kind {
            ConvKind::Forward => {
                self.gather_backward(&x.values, batch, li, &dpre, lo, &mut grads)
            }
            ConvKind::Transposed => {
                self.scatter_backward(&x.values, batch, li, &dpre, lo, &mut grads)
            }
        }
        Ok(grads)
    }

    // out[j] = bias + sum_{ic,t} w[oc][ic][t] * x[j*s + t - p]
    fn gather_forward(&self, xv: &[T], batch: usize, li: usize, ov: &mut [T], lo: usize) {
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let out_row = &mut ov[(b * self.out_ch + oc) * lo..][..lo];
                out_row.fill(self.bias[oc]);
                for ic in 0..self.in_ch {
                    let x_row = &xv[(b * self.in_ch + ic) * li..][..li];
                    let wbase = (oc * self.in_ch + ic) * k;
                    for t in 0..k {
                        let w = self.weight[wbase + t];
                        let off = t as isize - p as isize;
                        let Some((j0, j1)) = tap_range(li, lo, s, off) else { continue };
                        if s == 1 {
                            let src = &x_row[(j0 as isize + off) as usize..][..j1 - j0 + 1];
                            for (o, &xi) in out_row[j0..=j1].iter_mut().zip(src) {
                                *o += w * xi;
                            }
                        } else {
                            let mut xi = (j0 * s) as isize + off;
                            for o in &mut out_row[j0..=j1] {
                                *o += w * x_row[xi as usize];
                                xi += s as isize;
                            }
                        }
                    }
                }
            }
        }
    }

    // out[i*s + t - p] += w[ic][oc][t] * x[i]
    fn scatter_forward(&self, xv: &[T], batch: usize, li: usize, ov: &mut [T], lo: usize) {
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let out_row = &mut ov[(b * self.out_ch + oc) * lo..][..lo];
                out_row.fill(self.bias[oc]);
                for ic in 0..self.in_ch {
                    let x_row = &xv[(b * self.in_ch + ic) * li..][..li];
                    let wbase = (ic * self.out_ch + oc) * k;
                    for t in 0..k {
                        let w = self.weight[wbase + t];
                        let off = t as isize - p as isize;
                        let Some((i0, i1)) = tap_range(lo, li, s, off) else { continue };
                        if s == 1 {
                            let dst = &mut out_row[(i0 as isize + off) as usize..][..i1 - i0 + 1];
                            for (o, &xi) in dst.iter_mut().zip(&x_row[i0..=i1]) {
                                *o += w * xi;
                            }
                        } else {
                            let mut oi = (i0 * s) as isize + off;
                            for &xi in &x_row[i0..=i1] {
                                out_row[oi as usize] += w * xi;
                                oi += s as isize;
                            }
                        }
                    }
                }
            }
        }
    }

    fn gather_backward(
        &self,
        xv: &[T],
        batch: usize,
        li: usize,
        dpre: &[T],
        lo: usize,
        grads: &mut LayerGrads<T>,
    ) {
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let g_row = &dpre[(b * self.out_ch + oc) * lo..][..lo];
                for ic in 0..self.in_ch {
                    let x_row = &xv[(b * self.in_ch + ic) * li..][..li];
                    let dx_row = &mut grads.input.values[(b * self.in_ch + ic) * li..][..li];
                    let wbase = (oc * self.in_ch + ic) * k;
                    for t in 0..k {
                        let off = t as isize - p as isize;
                        let Some((j0, j1)) = tap_range(li, lo, s, off) else { continue };
                        let w = self.weight[wbase + t];
                        let mut dw = T::zero();
                        if s == 1 {
                            let base = (j0 as isize + off) as usize;
                            let n = j1 - j0 + 1;
                            let xs = &x_row[base..][..n];
                            let dxs = &mut dx_row[base..][..n];
                            for ((&g, &xi), dx) in g_row[j0..=j1].iter().zip(xs).zip(dxs) {
                                dw += g * xi;
                                *dx += w * g;
                            }
                        } else {
                            let mut xi = (j0 * s) as isize + off;
                            for &g in &g_row[j0..=j1] {
                                dw += g * x_row[xi as usize];
                                dx_row[xi as usize] += w * g;
                                xi += s as isize;
                            }
                        }
                        grads.weight[wbase + t] += dw;
                    }
                }
            }
        }
    }

    fn scatter_backward(
        &self,
        xv: &[T],
        batch: usize,
        li: usize,
        dpre: &[T],
        lo: usize,
        grads: &mut LayerGrads<T>,
    ) {
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let g_row = &dpre[(b * self.out_ch + oc) * lo..][..lo];
                for ic in 0..self.in_ch {
                    let x_row = &xv[(b * self.in_ch + ic) * li..][..li];
                    let dx_row = &mut grads.input.values[(b * self.in_ch + ic) * li..][..li];
                    let wbase = (ic * self.out_ch + oc) * k;
                    for t in 0..k {
                        let off = t as isize - p as isize;
                        let Some((i0, i1)) = tap_range(lo, li, s, off) else { continue };
                        let w = self.weight[wbase + t];
                        let mut dw = T::zero();
                        if s == 1 {
                            let base = (i0 as isize + off) as usize;
                            let n = i1 - i0 + 1;
                            let gs = &g_row[base..][..n];
                            for ((&g, &xi), dx) in
                                gs.iter().zip(&x_row[i0..=i1]).zip(&mut dx_row[i0..=i1])
                            {
                                dw += g * xi;
                                *dx += w * g;
                            }
                        } else {
                            let mut oi = (i0 * s) as isize + off;
                            for (&xi, dx) in x_row[i0..=i1].iter().zip(&mut dx_row[i0..=i1]) {
                                let g = g_row[oi as usize];
                                dw += g * xi;
                                *dx += w * g;
                                oi += s as isize;
                            }
                        }
                        grads.weight[wbase + t] += dw;
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain(kind: ConvKind, in_ch: usize, out_ch: usize, k: usize, s: usize, p: usize) -> Conv1d<f64> {
        Conv1d::new(kind, in_ch, out_ch, k, s, p, Activation::None)
    }

    #[test]
    fn hand_convolution() {
        // x = [1,2,3], kernel [1,0,-1], padding 1: out over [0,1,2,3,0].
        let mut c = plain(ConvKind::Forward, 1, 1, 3, 1, 1);
        c.weight = vec![1.0, 0.0, -1.0];
        let x = Tensor::from_values(vec![1, 1, 3], vec![1.0, 2.0, 3.0]);
        let y = c.forward(&x).unwrap();
        assert_eq!(y.values, vec![-2.0, -2.0, 2.0]);
    }

    #[test]
    fn identity_kernel() {
        let mut c = plain(ConvKind::Forward, 1, 1, 3, 1, 1);
        c.weight = vec![0.0, 1.0, 0.0];
        let x = Tensor::from_values(vec![1, 1, 5], vec![5.0, -1.0, 0.5, 2.0, 9.0]);
        assert_eq!(c.forward(&x).unwrap().values, x.values);
    }

    #[test]
    fn strided_length() {
        let c = plain(ConvKind::Forward, 1, 1, 4, 2, 1);
        assert_eq!(c.out_len(8), 4);
        let x = Tensor::<f64>::zeros(vec![1, 1, 8]);
        assert_eq!(c.forward(&x).unwrap().shape, vec![1, 1, 4]);
    }

    #[test]
    fn transposed_doubles_length() {
        let c = plain(ConvKind::Transposed, 1, 1, 4, 2, 1);
        assert_eq!(c.out_len(4), 8);
        let x = Tensor::<f64>::zeros(vec![1, 1, 4]);
        assert_eq!(c.forward(&x).unwrap().shape, vec![1, 1, 8]);
    }

    #[test]
    fn zero_weight_transposed_is_zero() {
        let c = plain(ConvKind::Transposed, 2, 3, 4, 2, 1);
        let x = Tensor::from_values(vec![1, 2, 4], (0..8).map(|v| v as f64).collect());
        assert!(c.forward(&x).unwrap().values.iter().all(|&v| v == 0.0));
    }

    /// Dense matrix of a layer obtained by pushing unit vectors through it.
    fn as_matrix(layer: &Conv1d<f64>, in_ch: usize, li: usize) -> Vec<Vec<f64>> {
        let n = in_ch * li;
        let mut cols = Vec::new();
        for j in 0..n {
            let mut v = vec![0.0; n];
            v[j] = 1.0;
            let x = Tensor::from_values(vec![1, in_ch, li], v);
            cols.push(layer.forward(&x).unwrap().values);
        }
        let m = cols[0].len();
        (0..m).map(|r| (0..n).map(|c| cols[c][r]).collect()).collect()
    }

    #[test]
    fn transposed_is_matrix_transpose_with_shared_weights() {
        let mut rng = SplitMix64::new(21);
        let fwd = plain(ConvKind::Forward, 2, 3, 4, 2, 1).init(&mut rng);
        let mut bwd = plain(ConvKind::Transposed, 3, 2, 4, 2, 1);
        // Shared array: forward [out=3][in=2][k] read as transposed [in=3][out=2][k].
        bwd.weight = fwd.weight.clone();
        let a = as_matrix(&fwd, 2, 8);
        let at = as_matrix(&bwd, 3, 4);
        assert_eq!(a.len(), 12); // 3 ch x len 4
        assert_eq!(at.len(), 16); // 2 ch x len 8
        for r in 0..a.len() {
            for c in 0..at.len() {
                assert!(
                    (a[r][c] - at[c][r]).abs() < 1e-12,
                    "A[{r}][{c}] = {} vs At[{c}][{r}] = {}",
                    a[r][c],
                    at[c][r]
                );
            }
        }
    }

    #[test]
    fn input_grad_matches_explicit_transpose() {
        // For a linear layer, d/dx = A^T g; compare against the dense matrix.
        let mut rng = SplitMix64::new(33);
        let layer = plain(ConvKind::Forward, 1, 1, 3, 1, 1).init(&mut rng);
        let li = 8;
        let a = as_matrix(&layer, 1, li);
        let x = Tensor::from_values(vec![1, 1, li], (0..li).map(|v| v as f64 * 0.3).collect());
        let g: Vec<f64> = (0..li).map(|v| (v as f64).sin()).collect();
        let gout = Tensor::from_values(vec![1, 1, li], g.clone());
        let grads = layer.backward(&x, None, &gout).unwrap();
        for c in 0..li {
            let want: f64 = (0..a.len()).map(|r| a[r][c] * g[r]).sum();
            assert!((grads.input.values[c] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_means_zero_grads() {
        let mut rng = SplitMix64::new(3);
        let layer = Conv1d::<f64>::new(ConvKind::Forward, 2, 2, 3, 1, 1, Activation::LeakyRelu(0.1))
            .init(&mut rng);
        let x = Tensor::from_values(vec![1, 2, 6], (0..12).map(|v| v as f64 - 5.0).collect());
        let (_, pre) = layer.forward_train(&x).unwrap();
        let gout = Tensor::zeros(vec![1, 2, 6]);
        let grads = layer.backward(&x, pre.as_deref(), &gout).unwrap();
        assert!(grads.input.values.iter().all(|&v| v == 0.0));
        assert!(grads.weight.iter().all(|&v| v == 0.0));
        assert!(grads.bias.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let layer = plain(ConvKind::Forward, 2, 1, 3, 1, 1);
        let x = Tensor::<f64>::zeros(vec![1, 3, 8]);
        assert!(matches!(layer.forward(&x), Err(Error::ShapeMismatch)));
    }
}
