//! 2D convolution / transposed convolution over `[batch, channels, h, w]`.
//! Square kernels, equal stride and padding on both axes; the patch
//! enhancement net is the only consumer.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use super::conv1d::tap_range;
use super::{Activation, ConvKind, LayerGrads, Scalar, Tensor};
use crate::rng::SplitMix64;
use crate::Error;

/// Weight layout `[out_ch][in_ch][k][k]` for `Forward`,
/// `[in_ch][out_ch][k][k]` for `Transposed`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d<T> {
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

impl<T: Scalar> Conv2d<T> {
    pub fn new(
        kind: ConvKind,
        in_ch: usize,
        out_ch: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        act: Activation,
    ) -> Self {
        let weight = vec![T::zero(); in_ch * out_ch * kernel * kernel];
        let bias = vec![T::zero(); out_ch];
        Conv2d { kind, in_ch, out_ch, kernel, stride, padding, weight, bias, act }
    }

    pub fn init(mut self, rng: &mut SplitMix64) -> Self {
        let bound = (1.0 / (self.in_ch * self.kernel * self.kernel) as f64).sqrt();
        for w in &mut self.weight {
            *w = T::lit((rng.next_f64() * 2.0 - 1.0) * bound);
        }
        self
    }

    pub fn out_dim(&self, d: usize) -> usize {
        match self.kind {
            ConvKind::Forward => (d + 2 * self.padding - self.kernel) / self.stride + 1,
            ConvKind::Transposed => (d - 1) * self.stride + self.kernel - 2 * self.padding,
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<(usize, usize, usize), Error> {
        if x.shape.len() != 4 || x.shape[1] != self.in_ch {
            return Err(Error::ShapeMismatch);
        }
        let (b, h, w) = (x.shape[0], x.shape[2], x.shape[3]);
        if self.kind == ConvKind::Forward
            && (h + 2 * self.padding < self.kernel || w + 2 * self.padding < self.kernel)
        {
            return Err(Error::ShapeMismatch);
        }
        Ok((b, h, w))
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, Error> {
        Ok(self.forward_train(x)?.0)
    }

    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Option<Vec<T>>), Error> {
        let (batch, hi, wi) = self.check_input(x)?;
        let (ho, wo) = (self.out_dim(hi), self.out_dim(wi));
        let mut out = Tensor::zeros(vec![batch, self.out_ch, ho, wo]);
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let plane = &mut out.values[(b * self.out_ch + oc) * ho * wo..][..ho * wo];
                plane.fill(self.bias[oc]);
                for ic in 0..self.in_ch {
                    let xp = &x.values[(b * self.in_ch + ic) * hi * wi..][..hi * wi];
                    let wbase = match self.kind {
                        ConvKind::Forward => (oc * self.in_ch + ic) * k * k,
                        ConvKind::Transposed => (ic * self.out_ch + oc) * k * k,
                    };
                    for ty in 0..k {
                        let offy = ty as isize - p as isize;
                        let y_range = match self.kind {
                            ConvKind::Forward => tap_range(hi, ho, s, offy),
                            ConvKind::Transposed => tap_range(ho, hi, s, offy),
                        };
                        let Some((y0, y1)) = y_range else { continue };
                        for tx in 0..k {
                            let offx = tx as isize - p as isize;
                            let wv = self.weight[wbase + ty * k + tx];
                            match self.kind {
                                ConvKind::Forward => {
                                    let Some((x0, x1)) = tap_range(wi, wo, s, offx) else {
                                        continue;
                                    };
                                    for jy in y0..=y1 {
                                        let src_y = (jy * s) as isize + offy;
                                        let src_row = &xp[src_y as usize * wi..][..wi];
                                        let dst_row = &mut plane[jy * wo..][..wo];
                                        if s == 1 {
                                            let src =
                                                &src_row[(x0 as isize + offx) as usize..][..x1 - x0 + 1];
                                            for (o, &v) in dst_row[x0..=x1].iter_mut().zip(src) {
                                                *o += wv * v;
                                            }
                                        } else {
                                            let mut sx = (x0 * s) as isize + offx;
                                            for o in &mut dst_row[x0..=x1] {
                                                *o += wv * src_row[sx as usize];
                                                sx += s as isize;
                                            }
                                        }
                                    }
                                }
                                ConvKind::Transposed => {
                                    let Some((x0, x1)) = tap_range(wo, wi, s, offx) else {
                                        continue;
                                    };
                                    for iy in y0..=y1 {
                                        let dst_y = (iy * s) as isize + offy;
                                        let dst_row = &mut plane[dst_y as usize * wo..][..wo];
                                        let src_row = &xp[iy * wi..][..wi];
                                        if s == 1 {
                                            let dst =
                                                &mut dst_row[(x0 as isize + offx) as usize..][..x1 - x0 + 1];
                                            for (o, &v) in dst.iter_mut().zip(&src_row[x0..=x1]) {
                                                *o += wv * v;
                                            }
                                        } else {
                                            let mut ox = (x0 * s) as isize + offx;
                                            for &v in &src_row[x0..=x1] {
                                                dst_row[ox as usize] += wv * v;
                                                ox += s as isize;
                                            }
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let pre = if self.act == Activation::None { None } else { Some(out.values.clone()) };
        self.act.apply(&mut out.values);
        Ok((out, pre))
    }

    pub fn backward(
        &self,
        x: &Tensor<T>,
        pre: Option<&[T]>,
        gout: &Tensor<T>,
    ) -> Result<LayerGrads<T>, Error> {
        let (batch, hi, wi) = self.check_input(x)?;
        let (ho, wo) = (self.out_dim(hi), self.out_dim(wi));
        if gout.shape.as_slice() != [batch, self.out_ch, ho, wo] {
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
        let (s, p, k) = (self.stride, self.padding, self.kernel);
        for b in 0..batch {
            for oc in 0..self.out_ch {
                let gp = &dpre[(b * self.out_ch + oc) * ho * wo..][..ho * wo];
                let mut sum = T::zero();
                for &g in gp {
                    sum += g;
                }
                grads.bias[oc] += sum;
                for ic in 0..self.in_ch {
                    let xp = &x.values[(b * self.in_ch + ic) * hi * wi..][..hi * wi];
                    let dxp = &mut grads.input.values[(b * self.in_ch + ic) * hi * wi..][..hi * wi];
                    let wbase = match self.kind {
                        ConvKind::Forward => (oc * self.in_ch + ic) * k * k,
                        ConvKind::Transposed => (ic * self.out_ch + oc) * k * k,
                    };
                    for ty in 0..k {
                        let offy = ty as isize - p as isize;
                        let y_range = match self.kind {
                            ConvKind::Forward => tap_range(hi, ho, s, offy),
                            ConvKind::Transposed => tap_range(ho, hi, s, offy),
                        };
                        let Some((y0, y1)) = y_range else { continue };
                        for tx in 0..k {
                            let offx = tx as isize - p as isize;
                            let wv = self.weight[wbase + ty * k + tx];
                            let mut dw = T::zero();
                            match self.kind {
                                ConvKind::Forward => {
                                    let Some((x0, x1)) = tap_range(wi, wo, s, offx) else {
                                        continue;
                                    };
                                    for jy in y0..=y1 {
                                        let src_y = ((jy * s) as isize + offy) as usize;
                                        let x_row = &xp[src_y * wi..][..wi];
                                        let dx_row = &mut dxp[src_y * wi..][..wi];
                                        let g_row = &gp[jy * wo..][..wo];
                                        let mut sx = (x0 * s) as isize + offx;
                                        for &g in &g_row[x0..=x1] {
                                            dw += g * x_row[sx as usize];
                                            dx_row[sx as usize] += wv * g;
                                            sx += s as isize;
                                        }
                                    }
                                }
                                ConvKind::Transposed => {
                                    let Some((x0, x1)) = tap_range(wo, wi, s, offx) else {
                                        continue;
                                    };
                                    for iy in y0..=y1 {
                                        let dst_y = ((iy * s) as isize + offy) as usize;
                                        let g_row = &gp[dst_y * wo..][..wo];
                                        let x_row = &xp[iy * wi..][..wi];
                                        let dx_row = &mut dxp[iy * wi..][..wi];
                                        let mut ox = (x0 * s) as isize + offx;
                                        for i in x0..=x1 {
                                            let g = g_row[ox as usize];
                                            dw += g * x_row[i];
                                            dx_row[i] += wv * g;
                                            ox += s as isize;
                                        }
                                    }
                                }
                            }
                            grads.weight[wbase + ty * k + tx] += dw;
                        }
                    }
                }
            }
        }
        Ok(grads)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_3x3() {
        let mut c = Conv2d::<f64>::new(ConvKind::Forward, 1, 1, 3, 1, 1, Activation::None);
        c.weight[4] = 1.0; // center tap
        let x = Tensor::from_values(vec![1, 1, 4, 4], (0..16).map(|v| v as f64).collect());
        assert_eq!(c.forward(&x).unwrap().values, x.values);
    }

    #[test]
    fn stride_two_halves_both_dims() {
        let c = Conv2d::<f64>::new(ConvKind::Forward, 1, 2, 4, 2, 1, Activation::None);
        let x = Tensor::<f64>::zeros(vec![1, 1, 8, 8]);
        assert_eq!(c.forward(&x).unwrap().shape, vec![1, 2, 4, 4]);
    }

    #[test]
    fn transposed_doubles_both_dims() {
        let c = Conv2d::<f64>::new(ConvKind::Transposed, 1, 1, 4, 2, 1, Activation::None);
        let x = Tensor::<f64>::zeros(vec![1, 1, 4, 4]);
        assert_eq!(c.forward(&x).unwrap().shape, vec![1, 1, 8, 8]);
    }

    #[test]
    fn hand_convolution_2x2_mean() {
        let mut c = Conv2d::<f64>::new(ConvKind::Forward, 1, 1, 2, 1, 0, Activation::None);
        c.weight = vec![0.25; 4];
        let x = Tensor::from_values(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]);
        let y = c.forward(&x).unwrap();
        assert_eq!(y.shape, vec![1, 1, 1, 1]);
        assert!((y.values[0] - 2.5).abs() < 1e-12);
    }
}
