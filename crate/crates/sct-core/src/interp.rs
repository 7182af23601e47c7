//! Per-offset interpolation networks: a 1D U-net takes two reference
//! acquisitions as channels and infers the acquisition at a fixed angular
//! offset between them. One network is trained per offset class `k`, with
//! classes `k` and `R-k` sharing a network by swapping the input order so the
//! angularly closer reference always arrives on channel 0.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::nn::{Activation, Adam, Conv1d, ConvKind, Scalar, Tensor};
use crate::nn::{mse, mse_grad};
use crate::rng::{derive_seed, SplitMix64};
use crate::sinogram::Sinogram;
use crate::Error;

const LEAKY: Activation = Activation::LeakyRelu(0.1);

/// Width schedule of the interpolation U-net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InterpNetConfig {
    /// Number of down-sampling units; the detector length must be divisible
    /// by `2^depth`.
    pub depth: usize,
    pub base_width: usize,
    pub width_cap: usize,
}

impl InterpNetConfig {
    /// Full-scale topology: seven down units, widths 32 doubling up to 1024.
    pub fn paper_full() -> Self {
        InterpNetConfig { depth: 7, base_width: 32, width_cap: 1024 }
    }

    /// Desk-scale topology used by the bundled experiments.
    pub fn desk() -> Self {
        InterpNetConfig { depth: 4, base_width: 8, width_cap: 128 }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.depth == 0 || self.base_width == 0 || self.width_cap < self.base_width {
            return Err(Error::BadWidths);
        }
        Ok(())
    }

    /// Channel width after `i` down units.
    pub fn width(&self, i: usize) -> usize {
        (self.base_width << i).min(self.width_cap)
    }
}

/// Down unit: strided reduction, expansion to the next width, refinement.
#[derive(Debug, Clone)]
struct DownUnit<T> {
    reduce: Conv1d<T>,
    expand: Conv1d<T>,
    refine: Conv1d<T>,
}

/// Up unit: strided transposed expansion, width reduction, then fusion of
/// the skip connection from the matching encoder level.
#[derive(Debug, Clone)]
struct UpUnit<T> {
    up: Conv1d<T>,
    shrink: Conv1d<T>,
    fuse: Conv1d<T>,
}

/// Encoder/decoder with skip connections; two input channels (the reference
/// acquisitions), one output channel (the inferred acquisition). The final
/// layer sees the raw two-channel input again, concatenated onto the
/// penultimate two-channel output.
#[derive(Debug, Clone)]
pub struct InterpNet<T> {
    pub config: InterpNetConfig,
    head0: Conv1d<T>,
    head1: Conv1d<T>,
    downs: Vec<DownUnit<T>>,
    ups: Vec<UpUnit<T>>,
    tail_pre: Conv1d<T>,
    tail_out: Conv1d<T>,
}

/// Builds the network with zero weights; callers seed real weights through
/// [`InterpNet::init`].
pub fn build_interp_net<T: Scalar>(config: InterpNetConfig) -> Result<InterpNet<T>, Error> {
    config.validate()?;
    let w = config.base_width;
    let head0 = Conv1d::new(ConvKind::Forward, 2, w, 3, 1, 1, LEAKY);
    let head1 = Conv1d::new(ConvKind::Forward, w, w, 3, 1, 1, LEAKY);
    let mut downs = Vec::with_capacity(config.depth);
    for i in 1..=config.depth {
        let (m, n) = (config.width(i - 1), config.width(i));
        downs.push(DownUnit {
            reduce: Conv1d::new(ConvKind::Forward, m, m, 4, 2, 1, LEAKY),
            expand: Conv1d::new(ConvKind::Forward, m, n, 3, 1, 1, LEAKY),
            refine: Conv1d::new(ConvKind::Forward, n, n, 3, 1, 1, LEAKY),
        });
    }
    let mut ups = Vec::with_capacity(config.depth);
    for i in (1..=config.depth).rev() {
        let (m, n) = (config.width(i), config.width(i - 1));
        ups.push(UpUnit {
            up: Conv1d::new(ConvKind::Transposed, m, m, 4, 2, 1, LEAKY),
            shrink: Conv1d::new(ConvKind::Forward, m, n, 3, 1, 1, LEAKY),
            fuse: Conv1d::new(ConvKind::Forward, 2 * n, n, 3, 1, 1, LEAKY),
        });
    }
    let tail_pre = Conv1d::new(ConvKind::Forward, w, 2, 3, 1, 1, LEAKY);
    let tail_out = Conv1d::new(ConvKind::Forward, 4, 1, 3, 1, 1, LEAKY);
    Ok(InterpNet { config, head0, head1, downs, ups, tail_pre, tail_out })
}

fn concat_channels<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    let (batch, ca, len) = (a.shape[0], a.shape[1], a.shape[2]);
    let cb = b.shape[1];
    let mut out = Tensor::zeros(vec![batch, ca + cb, len]);
    for bi in 0..batch {
        let dst = &mut out.values[bi * (ca + cb) * len..][..(ca + cb) * len];
        dst[..ca * len].copy_from_slice(&a.values[bi * ca * len..][..ca * len]);
        dst[ca * len..].copy_from_slice(&b.values[bi * cb * len..][..cb * len]);
    }
    out
}

fn split_channels<T: Scalar>(t: &Tensor<T>, ca: usize) -> (Tensor<T>, Tensor<T>) {
    let (batch, c, len) = (t.shape[0], t.shape[1], t.shape[2]);
    let cb = c - ca;
    let mut a = Tensor::zeros(vec![batch, ca, len]);
    let mut b = Tensor::zeros(vec![batch, cb, len]);
    for bi in 0..batch {
        let src = &t.values[bi * c * len..][..c * len];
        a.values[bi * ca * len..][..ca * len].copy_from_slice(&src[..ca * len]);
        b.values[bi * cb * len..][..cb * len].copy_from_slice(&src[ca * len..]);
    }
    (a, b)
}

fn add_into<T: Scalar>(dst: &mut Tensor<T>, src: &Tensor<T>) {
    for (d, &s) in dst.values.iter_mut().zip(&src.values) {
        *d += s;
    }
}

type LayerTrace<T> = (Tensor<T>, Option<Vec<T>>);

/// Forward activations needed to run the backward pass.
pub struct Tape<T> {
    head: [LayerTrace<T>; 2],
    downs: Vec<[LayerTrace<T>; 3]>,
    ups: Vec<[LayerTrace<T>; 3]>,
    tail_pre: LayerTrace<T>,
    tail_out: LayerTrace<T>,
}

/// Weight/bias gradients in the canonical layer order of
/// [`InterpNet::layers`].
pub struct NetGrads<T> {
    pub per_layer: Vec<(Vec<T>, Vec<T>)>,
}

impl<T: Scalar> InterpNet<T> {
    /// Seeded weight initialization for every layer.
    pub fn init(mut self, rng: &mut SplitMix64) -> Self {
        for layer in self.layers_mut() {
            let bound = (1.0 / (layer.in_ch * layer.kernel) as f64).sqrt();
            for w in &mut layer.weight {
                *w = T::lit((rng.next_f64() * 2.0 - 1.0) * bound);
            }
        }
        self
    }

    /// Layers in canonical order: head, down units, up units, tail.
    pub fn layers(&self) -> Vec<&Conv1d<T>> {
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

    pub fn layers_mut(&mut self) -> Vec<&mut Conv1d<T>> {
        let mut v: Vec<&mut Conv1d<T>> = Vec::new();
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

    /// Channel counts seen along the encoder, starting at the raw input.
    pub fn encoder_channels(&self) -> Vec<usize> {
        let mut v = vec![self.head0.in_ch, self.head0.out_ch, self.head1.out_ch];
        for d in &self.downs {
            v.push(d.refine.out_ch);
        }
        v
    }

    /// Output widths of the decoder units, then of the two tail layers.
    pub fn decoder_channels(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.ups.iter().map(|u| u.fuse.out_ch).collect();
        v.push(self.tail_pre.out_ch);
        v.push(self.tail_out.out_ch);
        v
    }

    fn check_len(&self, len: usize) -> Result<(), Error> {
        if len == 0 || len % (1 << self.config.depth) != 0 {
            return Err(Error::LengthNotDivisible { len, depth: self.config.depth });
        }
        Ok(())
    }

    /// Inference pass over `[batch, 2, len]`.
    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>, Error> {
        if x.shape.len() != 3 || x.shape[1] != 2 {
            return Err(Error::ShapeMismatch);
        }
        self.check_len(x.shape[2])?;
        let mut e = self.head1.forward(&self.head0.forward(x)?)?;
        let mut skips = Vec::with_capacity(self.downs.len());
        for d in &self.downs {
            skips.push(e.clone());
            e = d.refine.forward(&d.expand.forward(&d.reduce.forward(&e)?)?)?;
        }
        for (u, skip) in self.ups.iter().zip(skips.iter().rev()) {
            let v = u.shrink.forward(&u.up.forward(&e)?)?;
            e = u.fuse.forward(&concat_channels(&v, skip))?;
        }
        let t2 = self.tail_pre.forward(&e)?;
        self.tail_out.forward(&concat_channels(&t2, x))
    }

    /// Forward pass that records the tape for [`backward`](Self::backward).
    pub fn forward_train(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Tape<T>), Error> {
        if x.shape.len() != 3 || x.shape[1] != 2 {
            return Err(Error::ShapeMismatch);
        }
        self.check_len(x.shape[2])?;
        let (h0, p0) = self.head0.forward_train(x)?;
        let (h1, p1) = self.head1.forward_train(&h0)?;
        let mut tape = Tape {
            head: [(x.clone(), p0), (h0, p1)],
            downs: Vec::with_capacity(self.downs.len()),
            ups: Vec::with_capacity(self.ups.len()),
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
            let fused_in = concat_channels(&so, skip);
            let (fo, pf) = u.fuse.forward_train(&fused_in)?;
            tape.ups.push([(e, pu), (uo, ps), (fused_in, pf)]);
            e = fo;
        }
        let (t2, pt) = self.tail_pre.forward_train(&e)?;
        tape.tail_pre = (e, pt);
        let out_in = concat_channels(&t2, x);
        let (out, po) = self.tail_out.forward_train(&out_in)?;
        tape.tail_out = (out_in, po);
        Ok((out, tape))
    }

    /// Reverse pass; returns per-layer gradients (canonical order) and the
    /// gradient with respect to the network input.
    pub fn backward(&self, tape: &Tape<T>, gout: &Tensor<T>) -> Result<(NetGrads<T>, Tensor<T>), Error> {
        let d = self.downs.len();
        // tail_out over concat(tail_pre output, raw input)
        let go = self
            .tail_out
            .backward(&tape.tail_out.0, tape.tail_out.1.as_deref(), gout)?;
        let (g_t2, mut g_x) = split_channels(&go.input, 2);
        let tail_out_grads = (go.weight, go.bias);

        let gp = self
            .tail_pre
            .backward(&tape.tail_pre.0, tape.tail_pre.1.as_deref(), &g_t2)?;
        let tail_pre_grads = (gp.weight, gp.bias);
        let mut g = gp.input;

        // Decoder, reverse execution order; collect skip gradients, which
        // land on encoder levels d-1 .. 0.
        let mut up_grads: Vec<[(Vec<T>, Vec<T>); 3]> = Vec::with_capacity(d);
        let mut skip_grads: Vec<Tensor<T>> = Vec::with_capacity(d);
        for (u, t) in self.ups.iter().zip(&tape.ups).rev() {
            let gf = u.fuse.backward(&t[2].0, t[2].1.as_deref(), &g)?;
            let n = u.fuse.out_ch;
            let (g_v, g_skip) = split_channels(&gf.input, n);
            let gs = u.shrink.backward(&t[1].0, t[1].1.as_deref(), &g_v)?;
            let gu = u.up.backward(&t[0].0, t[0].1.as_deref(), &gs.input)?;
            up_grads.push([
                (gu.weight, gu.bias),
                (gs.weight, gs.bias),
                (gf.weight, gf.bias),
            ]);
            skip_grads.push(g_skip);
            g = gu.input;
        }
        up_grads.reverse(); // canonical order = execution order
        // skip_grads[j] (j = 0 .. d-1) belongs to encoder level d-1-j ... the
        // reversed iteration visited up units bottom-up, whose skips attach
        // to levels 0, 1, .., d-1 in that order.

        let mut down_grads: Vec<[(Vec<T>, Vec<T>); 3]> = Vec::with_capacity(d);
        for (i, (dn, t)) in self.downs.iter().zip(&tape.downs).enumerate().rev() {
            // Entering down unit i+1 (levels are 1-based): g applies to its
            // output e[i+1]; the skip taken from its *input* e[i] is handled
            // after the unit's backward below.
            let gr = dn.refine.backward(&t[2].0, t[2].1.as_deref(), &g)?;
            let ge = dn.expand.backward(&t[1].0, t[1].1.as_deref(), &gr.input)?;
            let gd = dn.reduce.backward(&t[0].0, t[0].1.as_deref(), &ge.input)?;
            down_grads.push([
                (gd.weight, gd.bias),
                (ge.weight, ge.bias),
                (gr.weight, gr.bias),
            ]);
            g = gd.input;
            // The up stack consumed this unit's input (encoder level i) as a
            // skip; skip_grads was pushed shallowest-first, so slot i holds it.
            add_into(&mut g, &skip_grads[i]);
        }
        down_grads.reverse();

        let g1 = self.head1.backward(&tape.head[1].0, tape.head[1].1.as_deref(), &g)?;
        let g0 = self.head0.backward(&tape.head[0].0, tape.head[0].1.as_deref(), &g1.input)?;
        add_into(&mut g_x, &g0.input);

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
        Ok((NetGrads { per_layer }, g_x))
    }
}

/// Number of networks needed for ratio `R`: offsets `k` and `R-k` share one,
/// so `floor(R/2)` classes cover every offset.
pub fn number_of_networks(ratio: usize) -> Result<usize, Error> {
    if ratio < 2 {
        return Err(Error::BadRatio(ratio));
    }
    Ok(ratio / 2)
}

/// Offset class of row offset `k`: the angular distance to the nearer
/// reference.
pub fn offset_class(k: usize, ratio: usize) -> usize {
    k.min(ratio - k)
}

/// One training sample: two reference acquisitions as channels and the
/// acquisition at the class offset as target.
#[derive(Debug, Clone)]
pub struct PairSample {
    /// `[2 * len]`: channel 0 is the angularly closer reference.
    pub input: Vec<f32>,
    pub target: Vec<f32>,
    /// Angular index distance from channel 0 / channel 1 to the target.
    pub near_dist: usize,
    pub far_dist: usize,
}

/// Builds the dataset for offset class `k` from dense ground-truth
/// sinograms. Every reference pair `(A_i, A_{i+R})` yields the sample
/// `(A_i, A_{i+R}) -> A_{i+k}` and, mirrored, `(A_{i+R}, A_i) -> A_{i+R-k}`;
/// the midpoint class emits the lower-index-first sample only.
pub fn make_training_pairs(
    dense: &[Sinogram],
    ratio: usize,
    k: usize,
) -> Result<Vec<PairSample>, Error> {
    if ratio < 2 {
        return Err(Error::BadRatio(ratio));
    }
    if k == 0 || k > ratio / 2 {
        return Err(Error::BadOffset { offset: k, ratio });
    }
    let mut samples = Vec::new();
    for s in dense {
        let rows = s.n_angles();
        if rows < ratio + 1 || (rows - 1) % ratio != 0 {
            return Err(Error::IndivisibleAngles { n_angles: rows, ratio });
        }
        for gap in 0..(rows - 1) / ratio {
            let lo = s.row(gap * ratio);
            let hi = s.row(gap * ratio + ratio);
            let fwd_target = s.row(gap * ratio + k);
            let mut input = Vec::with_capacity(2 * lo.len());
            input.extend_from_slice(lo);
            input.extend_from_slice(hi);
            samples.push(PairSample {
                input,
                target: fwd_target.to_vec(),
                near_dist: k,
                far_dist: ratio - k,
            });
            if k * 2 < ratio {
                let mirrored_target = s.row(gap * ratio + ratio - k);
                let mut input = Vec::with_capacity(2 * lo.len());
                input.extend_from_slice(hi);
                input.extend_from_slice(lo);
                samples.push(PairSample {
                    input,
                    target: mirrored_target.to_vec(),
                    near_dist: k,
                    far_dist: ratio - k,
                });
            }
        }
    }
    Ok(samples)
}

/// Training hyperparameters; the defaults mirror the bundled experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainHyper {
    pub epochs: usize,
    pub lr: f32,
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper { epochs: 4, lr: 1e-4, batch: 16, seed: 0 }
    }
}

/// The per-offset networks for one ratio plus the training metadata.
pub struct ModelBundle {
    pub ratio: usize,
    pub config: InterpNetConfig,
    pub hyper: TrainHyper,
    /// Network for class `k` at index `k - 1`.
    pub nets: Vec<InterpNet<f32>>,
    /// Per-network, per-epoch mean training loss.
    pub losses: Vec<Vec<f32>>,
}

/// Trains the network of one offset class on its pair dataset. Exposed so
/// callers can drive the (independent) classes concurrently.
pub fn train_class(
    samples: &[PairSample],
    config: InterpNetConfig,
    hyper: &TrainHyper,
    class: usize,
) -> Result<(InterpNet<f32>, Vec<f32>), Error> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let len = samples[0].target.len();
    let mut init_rng = SplitMix64::new(derive_seed(hyper.seed, class as u64));
    let mut net = build_interp_net::<f32>(config)?.init(&mut init_rng);
    net.check_len(len)?;

    let slot_sizes: Vec<usize> = net
        .layers()
        .iter()
        .flat_map(|l| [l.weight.len(), l.bias.len()])
        .collect();
    let mut adam = Adam::new(hyper.lr, &slot_sizes);
    let mut shuffle_rng = SplitMix64::new(derive_seed(hyper.seed, 0x5A5A + class as u64));
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut losses = Vec::with_capacity(hyper.epochs);

    for _ in 0..hyper.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_loss = 0.0f64;
        for chunk in order.chunks(hyper.batch) {
            let bsz = chunk.len();
            let mut x = Tensor::zeros(vec![bsz, 2, len]);
            let mut y = Tensor::zeros(vec![bsz, 1, len]);
            for (bi, &si) in chunk.iter().enumerate() {
                x.values[bi * 2 * len..][..2 * len].copy_from_slice(&samples[si].input);
                y.values[bi * len..][..len].copy_from_slice(&samples[si].target);
            }
            let (out, tape) = net.forward_train(&x)?;
            let loss = mse(&out, &y)?;
            epoch_loss += loss as f64 * bsz as f64;
            let gout = mse_grad(&out, &y)?;
            let (grads, _) = net.backward(&tape, &gout)?;
            adam.begin_step();
            for (i, (layer, (gw, gb))) in
                net.layers_mut().into_iter().zip(&grads.per_layer).enumerate()
            {
                adam.update(2 * i, &mut layer.weight, gw);
                adam.update(2 * i + 1, &mut layer.bias, gb);
            }
        }
        losses.push((epoch_loss / samples.len() as f64) as f32);
    }
    Ok((net, losses))
}

/// Trains one network per offset class, sequentially.
pub fn train_bundle(
    dense: &[Sinogram],
    ratio: usize,
    config: InterpNetConfig,
    hyper: &TrainHyper,
) -> Result<ModelBundle, Error> {
    if dense.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let classes = number_of_networks(ratio)?;
    let mut nets = Vec::with_capacity(classes);
    let mut losses = Vec::with_capacity(classes);
    for class in 1..=classes {
        let samples = make_training_pairs(dense, ratio, class)?;
        let (net, curve) = train_class(&samples, config, hyper, class)?;
        nets.push(net);
        losses.push(curve);
    }
    Ok(ModelBundle { ratio, config, hyper: *hyper, nets, losses })
}

/// Assembles the dense sinogram from a scarce one: reference rows are copied
/// verbatim, each missing row is inferred by its offset class network fed
/// with (closer, farther) reference rows. With `midpoint_avg`, the midpoint
/// row is the mean of both input orderings.
pub fn interpolate_learned(
    scarce: &Sinogram,
    ratio: usize,
    bundle: &ModelBundle,
    midpoint_avg: bool,
) -> Result<Sinogram, Error> {
    if bundle.ratio != ratio {
        return Err(Error::RatioMismatch { bundle: bundle.ratio, requested: ratio });
    }
    if ratio < 2 {
        return Err(Error::BadRatio(ratio));
    }
    if scarce.n_angles() < 2 {
        return Err(Error::EmptyInput);
    }
    let len = scarce.n_detectors();
    let gaps = scarce.n_angles() - 1;
    let geometry = scarce.geometry.upsampled(ratio);
    let mut data = vec![0.0f32; geometry.n_angles * len];
    for a in 0..scarce.n_angles() {
        data[a * ratio * len..][..len].copy_from_slice(scarce.row(a));
    }

    for class in 1..=ratio / 2 {
        let net = &bundle.nets[class - 1];
        // Jobs: (dense row, channel-0 ref, channel-1 ref).
        let mut jobs: Vec<(usize, usize, usize)> = Vec::new();
        for gap in 0..gaps {
            let (lo, hi) = (gap * ratio, gap * ratio + ratio);
            if 2 * class < ratio {
                jobs.push((lo + class, lo, hi));
                jobs.push((lo + ratio - class, hi, lo));
            } else {
                jobs.push((lo + class, lo, hi));
                if midpoint_avg {
                    jobs.push((lo + class, hi, lo));
                }
            }
        }
        let mut x = Tensor::zeros(vec![jobs.len(), 2, len]);
        for (bi, &(_, near, far)) in jobs.iter().enumerate() {
            x.values[bi * 2 * len..][..len].copy_from_slice(&data[near * len..][..len]);
            x.values[bi * 2 * len + len..][..len].copy_from_slice(&data[far * len..][..len]);
        }
        let out = net.forward(&x)?;
        let midpoint_scale = if midpoint_avg && 2 * class == ratio { 0.5 } else { 1.0 };
        // Midpoint rows were zero-initialized, so averaging accumulates.
        for (bi, &(row, _, _)) in jobs.iter().enumerate() {
            for (dst, &v) in data[row * len..][..len].iter_mut().zip(&out.values[bi * len..][..len])
            {
                *dst += midpoint_scale * v;
            }
        }
    }

    // Estimates of normalized data stay in the normalized range.
    if scarce.norm.is_some() {
        for gap in 0..gaps {
            for k in 1..ratio {
                let row = &mut data[(gap * ratio + k) * len..][..len];
                for v in row {
                    *v = v.clamp(0.0, 1.0);
                }
            }
        }
    }

    Ok(Sinogram { geometry, data, norm: scarce.norm })
}
