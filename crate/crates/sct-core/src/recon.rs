//! Iterative reconstruction: SIRT for quantitative evaluation, SART for
//! display.
//!
//! Both use the update `x += λ·C·Aᵀ·W·(b − A·x)` where `W` holds reciprocal
//! row sums of the projection matrix and `C` reciprocal column sums; SART
//! applies it one angle at a time, sweeping angles in ascending order.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::Float;

use crate::image::Image;
use crate::projector::{
    back_project, back_project_row_into, forward_project, forward_row_into, ProjectorConfig,
};
use crate::sinogram::Sinogram;
use crate::Error;

#[derive(Debug, Clone)]
pub struct ReconConfig {
    pub iterations: usize,
    /// Relaxation λ in `(0, 2)`.
    pub relaxation: f32,
    /// Clamp negatives after each iteration (display use).
    pub nonneg_clamp: bool,
}

impl ReconConfig {
    /// SIRT evaluation default: 10 iterations, λ = 1.
    pub fn sirt_default() -> Self {
        ReconConfig { iterations: 10, relaxation: 1.0, nonneg_clamp: false }
    }

    /// SART display default: 3 iterations, λ = 1.
    pub fn sart_default() -> Self {
        ReconConfig { iterations: 3, relaxation: 1.0, nonneg_clamp: false }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.iterations == 0 {
            return Err(Error::BadGeometry("iterations must be >= 1"));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::BadGeometry("relaxation must be in (0, 2)"));
        }
        Ok(())
    }
}

fn check_shapes(sino: &Sinogram, cfg: &ProjectorConfig) -> Result<(), Error> {
    if sino.n_angles() != cfg.geometry.n_angles || sino.n_detectors() != cfg.geometry.n_detectors {
        return Err(Error::SizeMismatch {
            expected: (cfg.geometry.n_angles, cfg.geometry.n_detectors),
            got: (sino.n_angles(), sino.n_detectors()),
        });
    }
    Ok(())
}

/// Reciprocal with near-zero sums mapped to zero so untouched rays and
/// pixels drop out of the update.
#[inline]
fn recip_or_zero(v: f32) -> f32 {
    if v > 1e-6 {
        1.0 / v
    } else {
        0.0
    }
}

/// Row/column normalization weights shared by every SIRT call on the same
/// geometry; computing them costs one forward and one backprojection.
#[derive(Debug, Clone)]
pub struct SirtWeights {
    /// 1 / row sums, sinogram-shaped.
    pub row_recip: Vec<f32>,
    /// 1 / column sums, image-shaped.
    pub col_recip: Vec<f32>,
}

impl SirtWeights {
    pub fn for_config(cfg: &ProjectorConfig) -> Result<Self, Error> {
        let g = &cfg.geometry;
        let ones_img = Image::new(g.image_size, vec![1.0; g.image_size * g.image_size])?;
        let row_sums = forward_project(&ones_img, cfg)?;
        let ones_sino = Sinogram::new(g.clone(), vec![1.0; g.n_angles * g.n_detectors])?;
        let col_sums = back_project(&ones_sino, cfg)?;
        Ok(SirtWeights {
            row_recip: row_sums.data.iter().map(|&v| recip_or_zero(v)).collect(),
            col_recip: col_sums.data.iter().map(|&v| recip_or_zero(v)).collect(),
        })
    }
}

/// Simultaneous iterative reconstruction from a zero initial image.
pub fn sirt(sino: &Sinogram, cfg: &ProjectorConfig, rc: &ReconConfig) -> Result<Image, Error> {
    let weights = SirtWeights::for_config(cfg)?;
    sirt_with_weights(sino, cfg, rc, &weights)
}

/// SIRT with precomputed normalization weights.
pub fn sirt_with_weights(
    sino: &Sinogram,
    cfg: &ProjectorConfig,
    rc: &ReconConfig,
    weights: &SirtWeights,
) -> Result<Image, Error> {
    rc.validate()?;
    check_shapes(sino, cfg)?;
    let g = &cfg.geometry;
    let mut x = Image::zeros(g.image_size);
    let mut residual = Sinogram::new(g.clone(), vec![0.0; sino.data.len()])?;
    for _ in 0..rc.iterations {
        let ax = forward_project(&x, cfg)?;
        for i in 0..residual.data.len() {
            residual.data[i] = (sino.data[i] - ax.data[i]) * weights.row_recip[i];
        }
        let update = back_project(&residual, cfg)?;
        for (xi, (u, c)) in x.data.iter_mut().zip(update.data.iter().zip(&weights.col_recip)) {
            *xi += rc.relaxation * c * u;
            if rc.nonneg_clamp && *xi < 0.0 {
                *xi = 0.0;
            }
        }
    }
    Ok(x)
}

/// SART: the SIRT update restricted to one angle's rays at a time, sweeping
/// all angles in ascending order each iteration.
pub fn sart(sino: &Sinogram, cfg: &ProjectorConfig, rc: &ReconConfig) -> Result<Image, Error> {
    rc.validate()?;
    check_shapes(sino, cfg)?;
    let g = &cfg.geometry;
    let n_px = g.image_size * g.image_size;
    let mut x = Image::zeros(g.image_size);

    // Global row sums; restricting the update to one angle leaves per-ray
    // row sums unchanged.
    let ones_img = Image::new(g.image_size, vec![1.0; n_px])?;
    let row_sums = forward_project(&ones_img, cfg)?;
    let ones_row = vec![1.0f32; g.n_detectors];

    let mut proj = vec![0.0f32; g.n_detectors];
    let mut weighted = vec![0.0f32; g.n_detectors];
    let mut acc = vec![0.0f64; n_px];
    let mut col_acc = vec![0.0f64; n_px];
    for _ in 0..rc.iterations {
        for a in 0..g.n_angles {
            forward_row_into(&x, cfg, a, &mut proj);
            let rows = &row_sums.data[a * g.n_detectors..(a + 1) * g.n_detectors];
            for d in 0..g.n_detectors {
                let b = sino.data[a * g.n_detectors + d];
                weighted[d] = (b - proj[d]) * recip_or_zero(rows[d]);
            }
            acc.iter_mut().for_each(|v| *v = 0.0);
            back_project_row_into(&weighted, cfg, a, &mut acc);
            // Column sums of this angle's block.
            col_acc.iter_mut().for_each(|v| *v = 0.0);
            back_project_row_into(&ones_row, cfg, a, &mut col_acc);
            for i in 0..n_px {
                let c = recip_or_zero(col_acc[i] as f32);
                x.data[i] += rc.relaxation * c * acc[i] as f32;
                if rc.nonneg_clamp && x.data[i] < 0.0 {
                    x.data[i] = 0.0;
                }
            }
        }
    }
    Ok(x)
}

/// ℓ2 norm of `b − A·x`; the quantity the monotonicity checks track.
pub fn residual_norm(sino: &Sinogram, cfg: &ProjectorConfig, x: &Image) -> Result<f64, Error> {
    let ax = forward_project(x, cfg)?;
    Ok(sino
        .data
        .iter()
        .zip(&ax.data)
        .map(|(b, v)| {
            let d = (*b - *v) as f64;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}
