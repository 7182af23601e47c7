//! Patch-based 2D sinogram enhancement: a U-net over 64x64 patches applied
//! on a regular grid with 32-pixel overlap, averaged where patches meet.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::nn::{mse, mse_grad, Activation, Adam, Conv2d, ConvKind, Scalar, Tensor};
use crate::rng::{derive_seed, SplitMix64};
use crate::sinogram::Sinogram;
use crate::Error;

const LEAKY: Activation = Activation::LeakyRelu(0.1);

pub const PATCH: usize = 64;
pub const PATCH_STEP: usize = 32;

/// Width schedule of the enhancement U-net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnhanceNetConfig {
    pub depth: usize,
    pub base_width: usize,
    pub width_cap: usize,
}

impl EnhanceNetConfig {
    /// Full-scale topology: five down units, widths 32 doubling to 1024.
    pub fn paper_full() -> Self {
        EnhanceNetConfig { depth: 5, base_width: 32, width_cap: 1024 }
    }

    /// Small topology for the bundled experiments.
    pub fn desk() -> Self {
        EnhanceNetConfig { depth: 2, base_width: 8, width_cap: 64 }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.depth == 0 || self.base_width == 0 || self.width_cap < self.base_width {
            return Err(Error::BadWidths);
        }
        if PATCH % (1 << self.depth) != 0 {
            return Err(Error::LengthNotDivisible { len: PATCH, depth: self.depth });
        }
        Ok(())
    }

    pub fn width(&self, i: usize) -> usize {
        (self.base_width << i).min(self.width_cap)
    }
}

#[derive(Debug, Clone)]
struct DownUnit<T> {
    reduce: Conv2d<T>,
    expand: Conv2d<T>,
    refine: Conv2d<T>,
}

#[derive(Debug, Clone)]
struct UpUnit<T> {
    up: Conv2d<T>,
    shrink: Conv2d<T>,
    fuse: Conv2d<T>,
}

/// Single-channel-in, single-channel-out patch U-net. The final layer takes
/// four channels: the penultimate two-channel output concatenated with the
/// raw input replicated onto two channels.
#[derive(Debug, Clone)]
pub struct EnhanceNet<T> {
    pub config: EnhanceNetConfig,
    head0: Conv2d<T>,
    head1: Conv2d<T>,
    downs: Vec<DownUnit<T>>,
    ups: Vec<UpUnit<T>>,
    tail_pre: Conv2d<T>,
    tail_out: Conv2d<T>,
}

pub fn build_enhance_net<T: Scalar>(config: EnhanceNetConfig) -> Result<EnhanceNet<T>, Error> {
    config.validate()?;
    let w = config.base_width;
    let head0 = Conv2d::new(ConvKind::Forward, 1, w, 3, 1, 1, LEAKY);
    let head1 = Conv2d::new(ConvKind::Forward, w, w, 3, 1, 1, LEAKY);
    let mut downs = Vec::with_capacity(config.depth);
    for i in 1..=config.depth {
        let (m, n) = (config.width(i - 1), config.width(i));
        downs.push(DownUnit {
            reduce: Conv2d::new(ConvKind::Forward, m, m, 4, 2, 1, LEAKY),
            expand: Conv2d::new(ConvKind::Forward, m, n, 3, 1, 1, LEAKY),
            refine: Conv2d::new(ConvKind::Forward, n, n, 3, 1, 1, LEAKY),
        });
    }
    let mut ups = Vec::with_capacity(config.depth);
    for i in (1..=config.depth).rev() {
        let (m, n) = (config.width(i), config.width(i - 1));
        ups.push(UpUnit {
            up: Conv2d::new(ConvKind::Transposed, m, m, 4, 2, 1, LEAKY),
            shrink: Conv2d::new(ConvKind::Forward, m, n, 3, 1, 1, LEAKY),
            fuse: Conv2d::new(ConvKind::Forward, 2 * n, n, 3, 1, 1, LEAKY),
        });
    }
    let tail_pre = Conv2d::new(ConvKind::Forward, w, 2, 3, 1, 1, LEAKY);
    let tail_out = Conv2d::new(ConvKind::Forward, 4, 1, 3, 1, 1, LEAKY);
    Ok(EnhanceNet { config, head0, head1, downs, ups, tail_pre, tail_out })
}

fn concat2d<T: Scalar>(parts: &[&Tensor<T>]) -> Tensor<T> {
    let (batch, h, w) = (parts[0].shape[0], parts[0].shape[2], parts[0].shape[3]);
    let plane = h * w;
    let c_total: usize = parts.iter().map(|p| p.shape[1]).sum();
    let mut out = Tensor::zeros(vec![batch, c_total, h, w]);
    for bi in 0..batch {
        let mut at = 0;
        for p in parts {
            let c = p.shape[1];
            out.values[(bi * c_total + at) * plane..][..c * plane]
                .copy_from_slice(&p.values[bi * c * plane..][..c * plane]);
            at += c;
        }
    }
    out
}

fn split2d<T: Scalar>(t: &Tensor<T>, ca: usize) -> (Tensor<T>, Tensor<T>) {
    let (batch, c, h, w) = (t.shape[0], t.shape[1], t.shape[2], t.shape[3]);
    let plane = h * w;
    let cb = c - ca;
    let mut a = Tensor::zeros(vec![batch, ca, h, w]);
    let mut b = Tensor::zeros(vec![batch, cb, h, w]);
    for bi in 0..batch {
        let src = &t.values[bi * c * plane..][..c * plane];
        a.values[bi * ca * plane..][..ca * plane].copy_from_slice(&src[..ca * plane]);
        b.values[bi * cb * plane..][..cb * plane].copy_from_slice(&src[ca * plane..]);
    }
    (a, b)
}

type LayerTrace<T> = (Tensor<T>, Option<Vec<T>>);

pub struct Tape<T> {
    head: [LayerTrace<T>; 2],
    downs: Vec<[LayerTrace<T>; 3]>,
    ups: Vec<[LayerTrace<T>; 3]>,
    tail_pre: LayerTrace<T>,
    tail_out: LayerTrace<T>,
}

impl<T: Scalar> EnhanceNet<T> {
    pub fn init(mut self, rng: &mut SplitMix64) -> Self {
        for layer in self.layers_mut() {
            let bound = (1.0 / (layer.in_ch * layer.kernel * layer.kernel) as f64).sqrt();
            for w in &mut layer.weight {
                *w = T::lit((rng.next_f64() * 2.0 - 1.0) * bound);
            }
        }
        self
    }

    pub fn layers(&self) -> Vec<&Conv2d<T>> {
        let mut v = Vec::new();
        v.push(&self.head0);
        v.push(&self.head1);
        for d in &self.downs {
            v.push(&d.reduce);
            v.push(&d.expand);
            v.push(&d.refine);
        }
        for u in &self.ups {
            v.push(&u.up);
            v.push(&u.shrink);
            v.push(&u.fuse);
        }
        v.push(&self.tail_pre);
        v.push(&self.tail_out);
        v
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Conv2d<T>> {
        let mut v: Vec<&mut Conv2d<T>> = Vec::new();
        v.push(&mut self.head0);
        v.push(&mut self.head1);
        for d in &mut self.downs {
            v.push(&mut d.reduce);
            v.push(&mut d.expand);
            v.push(&mut d.refine);
        }
        for u in &mut self.ups {
            v.push(&mut u.up);
            v.push(&mut u.shrink);
            v.push(&mut u.fuse);
        }
        v.push(&mut self.tail_pre);
        v.push(&mut self.tail_out);
        v
    }

    pub fn encoder_channels(&self) -> Vec<usize> {
        let mut v = vec![self.head0.in_ch, self.head0.out_ch, self.head1.out_ch];
        for d in &self.downs {
            v.push(d.refine.out_ch);
        }
        v
    }

    fn check_dims(&self, x: &Tensor<T>) -> Result<(), Error> {
        if x.shape.len() != 4 || x.shape[1] != 1 {
            return Err(Error::ShapeMismatch);
        }
        let div = 1 << self.config.depth;
        for &d in &x.shape[2..] {
            if d == 0 || d % div != 0 {
                return Err(Error::LengthNotDivisible { len: d, depth: self.config.depth });
            }
        }
        Ok(())
    }

    /// Inference over `[batch, 1, 64, 64]` patches.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, Error> {
        self.check_dims(x)?;
        let mut e = self.head1.forward(&self.head0.forward(x)?)?;
        let mut skips = Vec::with_capacity(self.downs.len());
        for d in &self.downs {
            skips.push(e.clone());
            e = d.refine.forward(&d.expand.forward(&d.reduce.forward(&e)?)?)?;
        }
        for (u, skip) in self.ups.iter().zip(skips.iter().rev()) {
            let v = u.shrink.forward(&u.up.forward(&e)?)?;
            e = u.fuse.forward(&concat2d(&[&v, skip]))?;
        }
        let t2 = self.tail_pre.forward(&e)?;
        self.tail_out.forward(&concat2d(&[&t2, x, x]))
    }

    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tape<T>), Error> {
        self.check_dims(x)?;
        let (h0, p0) = self.head0.forward_train(x)?;
        let (h1, p1) = self.head1.forward_train(&h0)?;
        let mut tape = Tape {
            head: [(x.clone(), p0), (h0, p1)],
            downs: Vec::new(),
            ups: Vec::new(),
            tail_pre: (Tensor::zeros(vec![0]), None),
            tail_out: (Tensor::zeros(vec![0]), None),
        };
        let mut e = h1;
        let mut skips = Vec::with_capacity(self.downs.len());
        for d in &self.downs {
            skips.push(e.clone());
            let (r, pr) = d.reduce.forward_train(&e)?;
            let (ex, pe) = d.expand.forward_train(&r)?;
            let (rf, pf) = d.refine.forward_train(&ex)?;
            tape.downs.push([(e, pr), (r, pe), (ex, pf)]);
            e = rf;
        }
        for (u, skip) in self.ups.iter().zip(skips.iter().rev()) {
            let (uo, pu) = u.up.forward_train(&e)?;
            let (so, ps) = u.shrink.forward_train(&uo)?;
            let fused_in = concat2d(&[&so, skip]);
            let (fo, pf) = u.fuse.forward_train(&fused_in)?;
            tape.ups.push([(e, pu), (uo, ps), (fused_in, pf)]);
            e = fo;
        }
        let (t2, pt) = self.tail_pre.forward_train(&e)?;
        tape.tail_pre = (e, pt);
        let out_in = concat2d(&[&t2, x, x]);
        let (out, po) = self.tail_out.forward_train(&out_in)?;
        tape.tail_out = (out_in, po);
        Ok((out, tape))
    }

    /// Per-layer gradients (canonical order) plus the input gradient.
    pub fn backward(
        &self,
        tape: &Tape<T>,
        gout: &Tensor<T>,
    ) -> Result<(Vec<(Vec<T>, Vec<T>)>, Tensor<T>), Error> {
        let go = self
            .tail_out
            .backward(&tape.tail_out.0, tape.tail_out.1.as_deref(), gout)?;
        let (g_t2, g_dup) = split2d(&go.input, 2);
        let (g_x1, g_x2) = split2d(&g_dup, 1);
        let mut g_x = g_x1;
        for (d, &s) in g_x.values.iter_mut().zip(&g_x2.values) {
            *d += s;
        }
        let tail_out_grads = (go.weight, go.bias);

        let gp = self
            .tail_pre
            .backward(&tape.tail_pre.0, tape.tail_pre.1.as_deref(), &g_t2)?;
        let tail_pre_grads = (gp.weight, gp.bias);
        let mut g = gp.input;

        let mut up_grads: Vec<[(Vec<T>, Vec<T>); 3]> = Vec::new();
        let mut skip_grads: Vec<Tensor<T>> = Vec::new();
        for (u, t) in self.ups.iter().zip(&tape.ups).rev() {
            let gf = u.fuse.backward(&t[2].0, t[2].1.as_deref(), &g)?;
            let (g_v, g_skip) = split2d(&gf.input, u.fuse.out_ch);
            let gs = u.shrink.backward(&t[1].0, t[1].1.as_deref(), &g_v)?;
            let gu = u.up.backward(&t[0].0, t[0].1.as_deref(), &gs.input)?;
            up_grads.push([(gu.weight, gu.bias), (gs.weight, gs.bias), (gf.weight, gf.bias)]);
            skip_grads.push(g_skip);
            g = gu.input;
        }
        up_grads.reverse();

        let mut down_grads: Vec<[(Vec<T>, Vec<T>); 3]> = Vec::new();
        for (i, (dn, t)) in self.downs.iter().zip(&tape.downs).enumerate().rev() {
            let gr = dn.refine.backward(&t[2].0, t[2].1.as_deref(), &g)?;
            let ge = dn.expand.backward(&t[1].0, t[1].1.as_deref(), &gr.input)?;
            let gd = dn.reduce.backward(&t[0].0, t[0].1.as_deref(), &ge.input)?;
            down_grads.push([(gd.weight, gd.bias), (ge.weight, ge.bias), (gr.weight, gr.bias)]);
            g = gd.input;
            for (dv, &sv) in g.values.iter_mut().zip(&skip_grads[i].values) {
                *dv += sv;
            }
        }
        down_grads.reverse();

        let g1 = self.head1.backward(&tape.head[1].0, tape.head[1].1.as_deref(), &g)?;
        let g0 = self.head0.backward(&tape.head[0].0, tape.head[0].1.as_deref(), &g1.input)?;
        for (d, &s) in g_x.values.iter_mut().zip(&g0.input.values) {
            *d += s;
        }

        let mut per_layer = Vec::new();
        per_layer.push((g0.weight, g0.bias));
        per_layer.push((g1.weight, g1.bias));
        for [a, b, c] in down_grads {
            per_layer.push(a);
            per_layer.push(b);
            per_layer.push(c);
        }
        for [a, b, c] in up_grads {
            per_layer.push(a);
            per_layer.push(b);
            per_layer.push(c);
        }
        per_layer.push(tail_pre_grads);
        per_layer.push(tail_out_grads);
        Ok((per_layer, g_x))
    }
}

/// Patch origin positions covering `n` pixels: steps of 32 plus a final
/// patch flush with the end, so every pixel lands in at least one patch.
pub fn patch_grid(n: usize) -> Result<Vec<usize>, Error> {
    if n < PATCH {
        return Err(Error::TooSmall { rows: n, cols: n });
    }
    let mut v: Vec<usize> = (0..=(n - PATCH) / PATCH_STEP).map(|i| i * PATCH_STEP).collect();
    if *v.last().unwrap() != n - PATCH {
        v.push(n - PATCH);
    }
    Ok(v)
}

/// Runs the net over the patch grid of `dense` and averages overlaps.
pub fn enhance_sinogram(dense: &Sinogram, net: &EnhanceNet<f32>) -> Result<Sinogram, Error> {
    let (rows, cols) = (dense.n_angles(), dense.n_detectors());
    if rows < PATCH || cols < PATCH {
        return Err(Error::TooSmall { rows, cols });
    }
    let grid_r = patch_grid(rows)?;
    let grid_c = patch_grid(cols)?;
    let mut sum = vec![0.0f64; rows * cols];
    let mut hits = vec![0u32; rows * cols];
    for &r0 in &grid_r {
        for &c0 in &grid_c {
            let mut patch = Tensor::zeros(vec![1, 1, PATCH, PATCH]);
            for r in 0..PATCH {
                let src = &dense.data[(r0 + r) * cols + c0..][..PATCH];
                patch.values[r * PATCH..][..PATCH].copy_from_slice(src);
            }
            let out = net.forward(&patch)?;
            for r in 0..PATCH {
                for c in 0..PATCH {
                    let idx = (r0 + r) * cols + c0 + c;
                    sum[idx] += out.values[r * PATCH + c] as f64;
                    hits[idx] += 1;
                }
            }
        }
    }
    let clamp = dense.norm.is_some();
    let data: Vec<f32> = sum
        .iter()
        .zip(&hits)
        .map(|(&s, &h)| {
            let v = (s / h as f64) as f32;
            if clamp {
                v.clamp(0.0, 1.0)
            } else {
                v
            }
        })
        .collect();
    Ok(Sinogram { geometry: dense.geometry.clone(), data, norm: dense.norm })
}

/// Trains the enhancement net on (estimate, ground truth) sinogram pairs,
/// one patch per grid cell per pair.
pub fn train_enhance(
    pairs: &[(Sinogram, Sinogram)],
    config: EnhanceNetConfig,
    hyper: &crate::interp::TrainHyper,
) -> Result<(EnhanceNet<f32>, Vec<f32>), Error> {
    if pairs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // Collect patch pairs.
    let mut inputs: Vec<Vec<f32>> = Vec::new();
    let mut targets: Vec<Vec<f32>> = Vec::new();
    for (est, truth) in pairs {
        let (rows, cols) = (est.n_angles(), est.n_detectors());
        if truth.n_angles() != rows || truth.n_detectors() != cols {
            return Err(Error::ShapeMismatch);
        }
        for &r0 in &patch_grid(rows)? {
            for &c0 in &patch_grid(cols)? {
                let mut pi = Vec::with_capacity(PATCH * PATCH);
                let mut pt = Vec::with_capacity(PATCH * PATCH);
                for r in 0..PATCH {
                    pi.extend_from_slice(&est.data[(r0 + r) * cols + c0..][..PATCH]);
                    pt.extend_from_slice(&truth.data[(r0 + r) * cols + c0..][..PATCH]);
                }
                inputs.push(pi);
                targets.push(pt);
            }
        }
    }

    let mut rng = SplitMix64::new(derive_seed(hyper.seed, 0xE44A));
    let mut net = build_enhance_net::<f32>(config)?.init(&mut rng);
    let slot_sizes: Vec<usize> = net
        .layers()
        .iter()
        .flat_map(|l| [l.weight.len(), l.bias.len()])
        .collect();
    let mut adam = Adam::new(hyper.lr, &slot_sizes);
    let mut shuffle_rng = SplitMix64::new(derive_seed(hyper.seed, 0xE44B));
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut losses = Vec::with_capacity(hyper.epochs);
    let plane = PATCH * PATCH;
    for _ in 0..hyper.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        for chunk in order.chunks(hyper.batch) {
            let bsz = chunk.len();
            let mut x = Tensor::zeros(vec![bsz, 1, PATCH, PATCH]);
            let mut y = Tensor::zeros(vec![bsz, 1, PATCH, PATCH]);
            for (bi, &si) in chunk.iter().enumerate() {
                x.values[bi * plane..][..plane].copy_from_slice(&inputs[si]);
                y.values[bi * plane..][..plane].copy_from_slice(&targets[si]);
            }
            let (out, tape) = net.forward_train(&x)?;
            epoch_loss += mse(&out, &y)? as f64 * bsz as f64;
            let gout = mse_grad(&out, &y)?;
            let (grads, _) = net.backward(&tape, &gout)?;
            adam.begin_step();
            for (i, (layer, (gw, gb))) in net.layers_mut().into_iter().zip(&grads).enumerate() {
                adam.update(2 * i, &mut layer.weight, gw);
                adam.update(2 * i + 1, &mut layer.bias, gb);
            }
        }
        losses.push((epoch_loss / inputs.len() as f64) as f32);
    }
    Ok((net, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScanGeometry;
    use crate::nn::{mse, mse_grad};

    #[test]
    fn paper_full_encoder_channels() {
        let net = build_enhance_net::<f32>(EnhanceNetConfig::paper_full()).unwrap();
        assert_eq!(net.encoder_channels(), vec![1, 32, 32, 64, 128, 256, 512, 1024]);
    }

    #[test]
    fn patch_grid_covers_everything() {
        for n in [64usize, 65, 96, 128, 257, 512, 513] {
            let grid = patch_grid(n).unwrap();
            let mut covered = vec![false; n];
            for &p in &grid {
                for c in covered[p..p + PATCH].iter_mut() {
                    *c = true;
                }
            }
            assert!(covered.iter().all(|&c| c), "gap in coverage for n={n}");
            assert_eq!(*grid.last().unwrap(), n - PATCH, "last patch not flush for n={n}");
        }
    }

    #[test]
    fn too_small_rejected() {
        let g = ScanGeometry::with_angles(32, 32, 32);
        let s = Sinogram::new(g, vec![0.0; 32 * 32]).unwrap();
        let net = build_enhance_net::<f32>(EnhanceNetConfig::desk()).unwrap();
        assert!(matches!(
            enhance_sinogram(&s, &net),
            Err(Error::TooSmall { rows: 32, cols: 32 })
        ));
    }

    #[test]
    fn patch_shapes_flow_through() {
        let mut rng = SplitMix64::new(9);
        let net = build_enhance_net::<f32>(EnhanceNetConfig::desk())
            .unwrap()
            .init(&mut rng);
        let x = Tensor::from_values(
            vec![2, 1, PATCH, PATCH],
            (0..2 * PATCH * PATCH).map(|_| rng.next_f32()).collect(),
        );
        let y = net.forward(&x).unwrap();
        assert_eq!(y.shape, vec![2, 1, PATCH, PATCH]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        // Tiny 2D net, double precision. PATCH-sized inputs are too slow for
        // a unit test; exercise the same layer graph at 16x16 via a custom
        // config with depth 2 (16 is divisible by 4).
        let cfg = EnhanceNetConfig { depth: 2, base_width: 2, width_cap: 4 };
        let mut rng = SplitMix64::new(5);
        let net = build_enhance_net::<f64>(cfg).unwrap().init(&mut rng);
        let n = 16;
        let x = Tensor::from_values(
            vec![1, 1, n, n],
            (0..n * n).map(|_| rng.next_f64() * 2.0 - 1.0).collect(),
        );
        let y = Tensor::from_values(vec![1, 1, n, n], (0..n * n).map(|_| rng.next_f64()).collect());
        let (out, tape) = net.forward_train(&x).unwrap();
        let gout = mse_grad(&out, &y).unwrap();
        let (grads, gx) = net.backward(&tape, &gout).unwrap();
        let loss_at = |nt: &EnhanceNet<f64>, xs: &Tensor<f64>| -> f64 {
            mse(&nt.forward(xs).unwrap(), &y).unwrap()
        };
        let h = 1e-5;
        for i in (0..x.numel()).step_by(37) {
            let mut hi = x.clone();
            let mut lo = x.clone();
            hi.values[i] += h;
            lo.values[i] -= h;
            let fd = (loss_at(&net, &hi) - loss_at(&net, &lo)) / (2.0 * h);
            assert!(
                (gx.values[i] - fd).abs() < 1e-3 * gx.values[i].abs().max(fd.abs()) + 1e-4,
                "input grad {i}: {} vs {fd}",
                gx.values[i]
            );
        }
        for li in 0..net.layers().len() {
            let n_w = net.layers()[li].weight.len();
            for &wi in &[0usize, n_w - 1] {
                let mut plus = net.clone();
                plus.layers_mut()[li].weight[wi] += h;
                let mut minus = net.clone();
                minus.layers_mut()[li].weight[wi] -= h;
                let fd = (loss_at(&plus, &x) - loss_at(&minus, &x)) / (2.0 * h);
                let got = grads[li].0[wi];
                assert!(
                    (got - fd).abs() < 1e-3 * got.abs().max(fd.abs()) + 1e-4,
                    "layer {li} weight {wi}: {got} vs {fd}"
                );
            }
        }
    }
}
