//! Seeded procedural ellipse phantoms.

use alloc::vec;
use alloc::vec::Vec;
use num_traits::Float;

use crate::image::Image;
use crate::rng::SplitMix64;
use crate::Error;

/// Specification of a procedural phantom. The same spec always produces the
/// same image, bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub seed: u64,
    /// Number of superposed ellipses, in `[3, 12]`.
    pub n_ellipses: usize,
    /// Ellipse intensity magnitudes are drawn from this range.
    pub intensity_min: f32,
    pub intensity_max: f32,
    /// Grid size; the phantom lives inside the inscribed circle.
    pub size: usize,
}

impl PhantomSpec {
    pub fn new(seed: u64, n_ellipses: usize, size: usize) -> Self {
        PhantomSpec {
            seed,
            n_ellipses,
            intensity_min: 0.1,
            intensity_max: 1.0,
            size,
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if !(3..=12).contains(&self.n_ellipses) {
            return Err(Error::BadSpec("n_ellipses must be in [3, 12]"));
        }
        if self.size < 32 {
            return Err(Error::BadSpec("size must be >= 32"));
        }
        if !(self.intensity_min >= 0.1 - 1e-6
            && self.intensity_max <= 1.0 + 1e-6
            && self.intensity_min < self.intensity_max)
        {
            return Err(Error::BadSpec("intensity range must lie in [0.1, 1.0]"));
        }
        Ok(())
    }
}

struct Ellipse {
    cx: f32,
    cy: f32,
    a: f32,
    b: f32,
    cos_t: f32,
    sin_t: f32,
    value: f32,
}

impl Ellipse {
    /// Signed indicator: 1 inside, 0 outside, evaluated at (x, y).
    #[inline]
    fn contains(&self, x: f32, y: f32) -> bool {
        let dx = x - self.cx;
        let dy = y - self.cy;
        let u = dx * self.cos_t + dy * self.sin_t;
        let v = -dx * self.sin_t + dy * self.cos_t;
        let su = u / self.a;
        let sv = v / self.b;
        su * su + sv * sv <= 1.0
    }
}

/// Generates an additive superposition of rotated ellipses, clamped to >= 0.
///
/// The first ellipse is a large positive body; later ones add or subtract
/// internal structure. Edges are rasterized with 2x2 subsampling so the
/// boundary is a coverage ramp rather than a hard step. All ellipses are
/// contained in the inscribed circle of the grid.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<Image, Error> {
    spec.validate()?;
    let size = spec.size;
    let half = size as f32 / 2.0;
    let mut rng = SplitMix64::new(spec.seed);

    let mut ellipses: Vec<Ellipse> = Vec::with_capacity(spec.n_ellipses);
    for i in 0..spec.n_ellipses {
        let (a, b, max_center) = if i == 0 {
            // Body: large, roughly centered.
            let a = rng.range_f32(0.55, 0.8) * half;
            let b = rng.range_f32(0.55, 0.8) * half;
            (a, b, half * 0.1)
        } else {
            let a = rng.range_f32(0.08, 0.45) * half;
            let b = rng.range_f32(0.08, 0.45) * half;
            (a, b, half - a.max(b) - 1.0)
        };
        // Uniform over the disk of radius max_center.
        let r = max_center.min(half - a.max(b) - 1.0).max(0.0) * rng.next_f32().sqrt();
        let phi = rng.range_f32(0.0, 2.0 * core::f32::consts::PI);
        let theta = rng.range_f32(0.0, core::f32::consts::PI);
        let magnitude = rng.range_f32(spec.intensity_min, spec.intensity_max);
        let sign = if i == 0 || rng.next_f32() < 0.7 { 1.0 } else { -1.0 };
        ellipses.push(Ellipse {
            cx: half - 0.5 + r * phi.cos(),
            cy: half - 0.5 + r * phi.sin(),
            a,
            b,
            cos_t: theta.cos(),
            sin_t: theta.sin(),
            value: sign * magnitude,
        });
    }

    let mut data = vec![0.0f32; size * size];
    // 2x2 subsample offsets around each pixel center.
    const SUB: [(f32, f32); 4] = [(-0.25, -0.25), (0.25, -0.25), (-0.25, 0.25), (0.25, 0.25)];
    for y in 0..size {
        for x in 0..size {
            let mut acc = 0.0f32;
            for e in &ellipses {
                let mut hits = 0u32;
                for (dx, dy) in SUB {
                    if e.contains(x as f32 + dx, y as f32 + dy) {
                        hits += 1;
                    }
                }
                if hits > 0 {
                    acc += e.value * (hits as f32 / 4.0);
                }
            }
            data[y * size + x] = acc.max(0.0);
        }
    }
    Image::new(size, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let spec = PhantomSpec::new(1, 6, 64);
        assert_eq!(generate_phantom(&spec).unwrap(), generate_phantom(&spec).unwrap());
    }

    #[test]
    fn seeds_differ() {
        let a = generate_phantom(&PhantomSpec::new(1, 6, 64)).unwrap();
        let b = generate_phantom(&PhantomSpec::new(2, 6, 64)).unwrap();
        assert_ne!(a.data, b.data);
    }

    #[test]
    fn zero_ellipses_rejected() {
        let spec = PhantomSpec::new(1, 0, 64);
        assert!(matches!(generate_phantom(&spec), Err(Error::BadSpec(_))));
    }

    #[test]
    fn tiny_grid_rejected() {
        let spec = PhantomSpec::new(1, 4, 16);
        assert!(matches!(generate_phantom(&spec), Err(Error::BadSpec(_))));
    }

    #[test]
    fn mass_inside_inscribed_circle() {
        for seed in 0..8 {
            let img = generate_phantom(&PhantomSpec::new(seed, 9, 96)).unwrap();
            let half = img.size as f32 / 2.0;
            let c = half - 0.5;
            for y in 0..img.size {
                for x in 0..img.size {
                    let r = ((x as f32 - c).powi(2) + (y as f32 - c).powi(2)).sqrt();
                    if r > half {
                        assert_eq!(img.at(y, x), 0.0, "mass outside circle at ({x},{y})");
                    }
                }
            }
        }
    }

    #[test]
    fn nonnegative_and_nonempty() {
        let img = generate_phantom(&PhantomSpec::new(5, 8, 64)).unwrap();
        assert!(img.data.iter().all(|&v| v >= 0.0));
        assert!(img.data.iter().any(|&v| v > 0.0));
    }
}
