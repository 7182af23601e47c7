//! Parallel-beam forward projection and its exact adjoint.
//!
//! Rays are marched on a fixed step grid; the image is sampled bilinearly and
//! each sample is weighted by the step length. Backprojection scatters with
//! the same positions and weights, so the pair is an exact matrix transpose
//! of one another (up to float rounding), which SIRT/SART rely on.

use alloc::vec;
use num_traits::Float;

use crate::geometry::ScanGeometry;
use crate::image::Image;
use crate::sinogram::Sinogram;
use crate::Error;

#[derive(Debug, Clone)]
pub struct ProjectorConfig {
    pub geometry: ScanGeometry,
    /// Ray marching step in pixel units, in `(0, 1]`.
    pub sampling_step: f64,
}

impl ProjectorConfig {
    pub fn new(geometry: ScanGeometry) -> Self {
        ProjectorConfig { geometry, sampling_step: 0.5 }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.geometry.validate()?;
        if !(self.sampling_step > 0.0 && self.sampling_step <= 1.0) {
            return Err(Error::BadGeometry("sampling_step must be in (0, 1]"));
        }
        Ok(())
    }
}

/// One ray: entry point, per-step increment and the marching index range.
struct Ray {
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
    steps: usize,
}

/// Intersects `origin + t*dir ∈ [lo, hi]` with the running `[t0, t1]` window.
fn clip_axis(origin: f64, dir: f64, lo: f64, hi: f64, t0: &mut f64, t1: &mut f64) {
    if dir.abs() < 1e-12 {
        if origin < lo || origin > hi {
            *t0 = 1.0;
            *t1 = 0.0; // empty
        }
    } else {
        let (a, b) = ((lo - origin) / dir, (hi - origin) / dir);
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        *t0 = t0.max(a);
        *t1 = t1.min(b);
    }
}

fn build_ray(geometry: &ScanGeometry, step: f64, angle: usize, bin: usize) -> Option<Ray> {
    let size = geometry.image_size as f64;
    let center = (size - 1.0) / 2.0;
    let theta = geometry.angle_deg(angle).to_radians();
    let (sin_t, cos_t) = (theta.sin(), theta.cos());
    let u = geometry.detector_offset(bin);
    // Detector axis (cos, sin); ray direction (-sin, cos).
    let ox = center + u * cos_t;
    let oy = center + u * sin_t;

    // Fixed symmetric t-grid shared by every ray of the geometry.
    let t_max = size * core::f64::consts::SQRT_2 / 2.0 + 1.0;
    // Clip to the bilinear support box [-1, size].
    let (mut t0, mut t1) = (-t_max, t_max);
    clip_axis(ox, -sin_t, -1.0, size, &mut t0, &mut t1);
    clip_axis(oy, cos_t, -1.0, size, &mut t0, &mut t1);
    if t0 > t1 {
        return None;
    }
    let j0 = ((t0 + t_max) / step).ceil() as usize;
    let j1 = ((t1 + t_max) / step).floor() as usize;
    if j1 < j0 {
        return None;
    }
    let t_start = -t_max + j0 as f64 * step;
    Some(Ray {
        x0: ox - t_start * sin_t,
        y0: oy + t_start * cos_t,
        dx: -sin_t * step,
        dy: cos_t * step,
        steps: j1 - j0 + 1,
    })
}

/// Bilinear neighborhood of a point; weights of out-of-grid pixels are
/// dropped, matching the "samples outside contribute zero" contract.
#[inline]
fn neighborhood(x: f64, y: f64, size: usize) -> ([(usize, f64); 4], usize) {
    // Truncation equals floor after the +1 shift because the clip box
    // guarantees x, y >= -1.
    let xi = (x + 1.0) as isize - 1;
    let yi = (y + 1.0) as isize - 1;
    let fx = x - xi as f64;
    let fy = y - yi as f64;
    let mut out = [(0usize, 0.0f64); 4];
    let mut n = 0;
    let s = size as isize;
    if xi >= 0 && xi < s && yi >= 0 && yi < s {
        out[n] = ((yi * s + xi) as usize, (1.0 - fx) * (1.0 - fy));
        n += 1;
    }
    if xi + 1 >= 0 && xi + 1 < s && yi >= 0 && yi < s {
        out[n] = ((yi * s + xi + 1) as usize, fx * (1.0 - fy));
        n += 1;
    }
    if xi >= 0 && xi < s && yi + 1 >= 0 && yi + 1 < s {
        out[n] = (((yi + 1) * s + xi) as usize, (1.0 - fx) * fy);
        n += 1;
    }
    if xi + 1 >= 0 && xi + 1 < s && yi + 1 >= 0 && yi + 1 < s {
        out[n] = (((yi + 1) * s + xi + 1) as usize, fx * fy);
        n += 1;
    }
    (out, n)
}

fn integrate_ray(img: &[f32], size: usize, ray: &Ray, step: f64) -> f64 {
    let mut x = ray.x0;
    let mut y = ray.y0;
    let mut acc = 0.0f64;
    for _ in 0..ray.steps {
        let (nb, n) = neighborhood(x, y, size);
        let mut v = 0.0f64;
        for &(idx, w) in &nb[..n] {
            v += w * img[idx] as f64;
        }
        acc += v;
        x += ray.dx;
        y += ray.dy;
    }
    acc * step
}

fn scatter_ray(out: &mut [f64], size: usize, ray: &Ray, step: f64, value: f64) {
    let mut x = ray.x0;
    let mut y = ray.y0;
    let v = value * step;
    for _ in 0..ray.steps {
        let (nb, n) = neighborhood(x, y, size);
        for &(idx, w) in &nb[..n] {
            out[idx] += w * v;
        }
        x += ray.dx;
        y += ray.dy;
    }
}

/// Discrete Radon transform of `img` under `cfg.geometry`.
pub fn forward_project(img: &Image, cfg: &ProjectorConfig) -> Result<Sinogram, Error> {
    cfg.validate()?;
    let g = &cfg.geometry;
    if img.size != g.image_size {
        return Err(Error::SizeMismatch {
            expected: (g.image_size, g.image_size),
            got: (img.size, img.size),
        });
    }
    let mut data = vec![0.0f32; g.n_angles * g.n_detectors];
    for a in 0..g.n_angles {
        let row = &mut data[a * g.n_detectors..(a + 1) * g.n_detectors];
        forward_row_into(img, cfg, a, row);
    }
    Sinogram::new(g.clone(), data)
}

/// Projects a single angle; used by SART and by `forward_project`.
pub fn forward_row_into(img: &Image, cfg: &ProjectorConfig, angle: usize, out: &mut [f32]) {
    let g = &cfg.geometry;
    for (d, slot) in out.iter_mut().enumerate() {
        *slot = match build_ray(g, cfg.sampling_step, angle, d) {
            Some(ray) => integrate_ray(&img.data, g.image_size, &ray, cfg.sampling_step) as f32,
            None => 0.0,
        };
    }
}

/// Exact adjoint of [`forward_project`].
pub fn back_project(sino: &Sinogram, cfg: &ProjectorConfig) -> Result<Image, Error> {
    cfg.validate()?;
    let g = &cfg.geometry;
    if sino.n_angles() != g.n_angles || sino.n_detectors() != g.n_detectors {
        return Err(Error::SizeMismatch {
            expected: (g.n_angles, g.n_detectors),
            got: (sino.n_angles(), sino.n_detectors()),
        });
    }
    let mut acc = vec![0.0f64; g.image_size * g.image_size];
    for a in 0..g.n_angles {
        back_project_row_into(sino.row(a), cfg, a, &mut acc);
    }
    let data = acc.iter().map(|&v| v as f32).collect();
    Image::new(g.image_size, data)
}

/// Scatters one angle's row into an f64 accumulator image.
pub fn back_project_row_into(row: &[f32], cfg: &ProjectorConfig, angle: usize, acc: &mut [f64]) {
    let g = &cfg.geometry;
    for (d, &v) in row.iter().enumerate() {
        if v == 0.0 {
            continue;
        }
        if let Some(ray) = build_ray(g, cfg.sampling_step, angle, d) {
            scatter_ray(acc, g.image_size, &ray, cfg.sampling_step, v as f64);
        }
    }
}
