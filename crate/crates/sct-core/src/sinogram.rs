//! Sinogram container, min-max normalization and angular subsampling.

use alloc::vec::Vec;

use crate::geometry::ScanGeometry;
use crate::Error;

/// Pre-normalization extrema; the record needed to undo [`normalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormParams {
    pub vmin: f32,
    pub vmax: f32,
}

impl NormParams {
    /// Maps a normalized value back to the original range.
    #[inline]
    pub fn denormalize(&self, v: f32) -> f32 {
        self.vmin + v * (self.vmax - self.vmin)
    }
}

/// Angle-major stack of acquisitions: row = angle, column = detector bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    pub geometry: ScanGeometry,
    pub data: Vec<f32>,
    pub norm: Option<NormParams>,
}

impl Sinogram {
    pub fn new(geometry: ScanGeometry, data: Vec<f32>) -> Result<Self, Error> {
        if data.len() != geometry.n_angles * geometry.n_detectors {
            return Err(Error::SizeMismatch {
                expected: (geometry.n_angles, geometry.n_detectors),
                got: (data.len() / geometry.n_detectors.max(1), geometry.n_detectors),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite);
        }
        Ok(Sinogram { geometry, data, norm: None })
    }

    pub fn n_angles(&self) -> usize {
        self.geometry.n_angles
    }

    pub fn n_detectors(&self) -> usize {
        self.geometry.n_detectors
    }

    pub fn row(&self, a: usize) -> &[f32] {
        let w = self.n_detectors();
        &self.data[a * w..(a + 1) * w]
    }

    pub fn row_mut(&mut self, a: usize) -> &mut [f32] {
        let w = self.n_detectors();
        &mut self.data[a * w..(a + 1) * w]
    }

    /// Min-max normalization to `[0, 1]`, recording the original extrema.
    ///
    /// Fails with [`Error::ConstantSinogram`] when min == max.
    pub fn normalize(&self) -> Result<Sinogram, Error> {
        let vmin = self.data.iter().copied().fold(f32::INFINITY, f32::min);
        let vmax = self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max);
        if vmax <= vmin {
            return Err(Error::ConstantSinogram);
        }
        let scale = 1.0 / (vmax - vmin);
        let data = self.data.iter().map(|&v| (v - vmin) * scale).collect();
        Ok(Sinogram {
            geometry: self.geometry.clone(),
            data,
            norm: Some(NormParams { vmin, vmax }),
        })
    }

    /// Inverse of [`normalize`]; a no-op when no record is present.
    pub fn denormalize(&self) -> Sinogram {
        match self.norm {
            None => self.clone(),
            Some(p) => Sinogram {
                geometry: self.geometry.clone(),
                data: self.data.iter().map(|&v| p.denormalize(v)).collect(),
                norm: None,
            },
        }
    }

    /// Keeps rows `{0, R, 2R, ..., n_angles - 1}`; both endpoint acquisitions
    /// survive, so `(n - 1)` must be divisible by `ratio`.
    pub fn subsample(&self, ratio: usize) -> Result<Sinogram, Error> {
        let geometry = self.geometry.subsampled(ratio)?;
        let w = self.n_detectors();
        let mut data = Vec::with_capacity(geometry.n_angles * w);
        for a in (0..self.n_angles()).step_by(ratio) {
            data.extend_from_slice(self.row(a));
        }
        Ok(Sinogram { geometry, data, norm: self.norm })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::rng::SplitMix64;

    fn sino(rows: usize, cols: usize, data: Vec<f32>) -> Sinogram {
        let g = ScanGeometry::with_angles(rows, cols, cols);
        Sinogram::new(g, data).unwrap()
    }

    #[test]
    fn normalize_min_max() {
        let s = sino(3, 1, vec![0.0, 2.0, 4.0]);
        let n = s.normalize().unwrap();
        assert_eq!(n.data, vec![0.0, 0.5, 1.0]);
        assert_eq!(n.norm, Some(NormParams { vmin: 0.0, vmax: 4.0 }));
    }

    #[test]
    fn normalize_identity_on_unit_range() {
        let s = sino(2, 1, vec![0.0, 1.0]);
        let n = s.normalize().unwrap();
        assert_eq!(n.data, s.data);
    }

    #[test]
    fn normalize_rejects_constant() {
        let s = sino(3, 1, vec![3.0, 3.0, 3.0]);
        assert_eq!(s.normalize().unwrap_err(), Error::ConstantSinogram);
    }

    #[test]
    fn denormalize_inverts() {
        let mut rng = SplitMix64::new(11);
        for _ in 0..20 {
            let data: Vec<f32> = (0..64).map(|_| rng.range_f32(-3.0, 17.0)).collect();
            let s = sino(8, 8, data);
            let back = s.normalize().unwrap().denormalize();
            for (a, b) in s.data.iter().zip(back.data.iter()) {
                assert!((a - b).abs() < 1e-5, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn subsample_keeps_endpoints() {
        let rows: Vec<f32> = (0..513).map(|a| a as f32).collect();
        let s = sino(513, 1, rows);
        let sub = s.subsample(16).unwrap();
        assert_eq!(sub.n_angles(), 33);
        assert_eq!(sub.data[0], 0.0);
        assert_eq!(sub.data[32], 512.0);
        assert!((sub.geometry.angle_step_deg - 16.0 * s.geometry.angle_step_deg).abs() < 1e-12);
    }

    #[test]
    fn subsample_by_one_is_identity() {
        let s = sino(5, 2, (0..10).map(|v| v as f32).collect());
        let sub = s.subsample(1).unwrap();
        assert_eq!(sub, s);
    }

    #[test]
    fn subsample_indivisible() {
        let s = sino(512, 1, vec![0.0; 512]);
        assert_eq!(
            s.subsample(16).unwrap_err(),
            Error::IndivisibleAngles { n_angles: 512, ratio: 16 }
        );
    }

    #[test]
    fn row_count_after_subsample() {
        for (n, r) in [(513, 16), (257, 8), (65, 4), (9, 2)] {
            let s = sino(n, 1, vec![0.0; n]);
            assert_eq!(s.subsample(r).unwrap().n_angles(), (n - 1) / r + 1);
        }
    }
}
