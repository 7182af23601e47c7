//! Parallel-beam 2D scan geometry.

use crate::Error;

/// Description of a parallel-beam 2D acquisition: equally spaced angles,
/// a linear detector and the square reconstruction grid.
///
/// Angles are in degrees; detector pitch is in image-pixel units. Detector
/// bin `d` sits at signed offset `(d - (n_detectors - 1) / 2) * pitch` from
/// the rotation center.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGeometry {
    pub n_angles: usize,
    pub angle_start_deg: f64,
    pub angle_step_deg: f64,
    pub n_detectors: usize,
    pub detector_pitch: f64,
    pub image_size: usize,
}

/// Angular span of the default scan, degrees. 513 angles at 0.35° cover it;
/// halving the angle count doubles the step (0.7° at 257 angles).
pub const DEFAULT_SPAN_DEG: f64 = 179.2;

impl ScanGeometry {
    pub fn new(
        n_angles: usize,
        angle_start_deg: f64,
        angle_step_deg: f64,
        n_detectors: usize,
        detector_pitch: f64,
        image_size: usize,
    ) -> Result<Self, Error> {
        let g = ScanGeometry {
            n_angles,
            angle_start_deg,
            angle_step_deg,
            n_detectors,
            detector_pitch,
            image_size,
        };
        g.validate()?;
        Ok(g)
    }

    /// Default scan: 513 angles at 0.35° from 0°, 512 detector bins of unit
    /// pitch, 512x512 grid.
    pub fn default_scan() -> Self {
        Self::with_angles(513, 512, 512)
    }

    /// Geometry with `n_angles` spread over the default span, `n_detectors`
    /// bins of unit pitch and an `image_size` grid.
    pub fn with_angles(n_angles: usize, n_detectors: usize, image_size: usize) -> Self {
        ScanGeometry {
            n_angles,
            angle_start_deg: 0.0,
            angle_step_deg: DEFAULT_SPAN_DEG / (n_angles - 1) as f64,
            n_detectors,
            detector_pitch: 1.0,
            image_size,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n_angles < 2 {
            return Err(Error::BadGeometry("n_angles must be >= 2"));
        }
        if !(self.angle_step_deg > 0.0) {
            return Err(Error::BadGeometry("angle_step_deg must be > 0"));
        }
        if self.n_detectors == 0 {
            return Err(Error::BadGeometry("n_detectors must be positive"));
        }
        if !(self.detector_pitch > 0.0) {
            return Err(Error::BadGeometry("detector_pitch must be > 0"));
        }
        if self.image_size == 0 {
            return Err(Error::BadGeometry("image_size must be positive"));
        }
        Ok(())
    }

    /// Angle of acquisition `i`, degrees.
    pub fn angle_deg(&self, i: usize) -> f64 {
        self.angle_start_deg + i as f64 * self.angle_step_deg
    }

    /// Signed detector offset of bin `d` from the rotation center, pixels.
    pub fn detector_offset(&self, d: usize) -> f64 {
        (d as f64 - (self.n_detectors - 1) as f64 / 2.0) * self.detector_pitch
    }

    /// Geometry after keeping every `ratio`-th angle (endpoints included).
    pub fn subsampled(&self, ratio: usize) -> Result<Self, Error> {
        if ratio == 0 {
            return Err(Error::BadRatio(0));
        }
        if (self.n_angles - 1) % ratio != 0 {
            return Err(Error::IndivisibleAngles {
                n_angles: self.n_angles,
                ratio,
            });
        }
        Ok(ScanGeometry {
            n_angles: (self.n_angles - 1) / ratio + 1,
            angle_step_deg: self.angle_step_deg * ratio as f64,
            ..self.clone()
        })
    }

    /// Inverse of [`subsampled`]: the dense geometry with `(n-1)*ratio + 1`
    /// angles at `step / ratio`.
    pub fn upsampled(&self, ratio: usize) -> Self {
        ScanGeometry {
            n_angles: (self.n_angles - 1) * ratio + 1,
            angle_step_deg: self.angle_step_deg / ratio as f64,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_scan_step() {
        let g = ScanGeometry::default_scan();
        assert_eq!(g.n_angles, 513);
        assert!((g.angle_step_deg - 0.35).abs() < 1e-12);
        assert!((g.angle_deg(512) - 179.2).abs() < 1e-9);
    }

    #[test]
    fn halved_angles_double_step() {
        let g = ScanGeometry::with_angles(257, 256, 256);
        assert!((g.angle_step_deg - 0.7).abs() < 1e-12);
    }

    #[test]
    fn detector_offsets_are_centered() {
        let g = ScanGeometry::with_angles(3, 4, 8);
        assert_eq!(g.detector_offset(0), -1.5);
        assert_eq!(g.detector_offset(3), 1.5);
    }

    #[test]
    fn subsample_roundtrip() {
        let g = ScanGeometry::default_scan();
        let s = g.subsampled(16).unwrap();
        assert_eq!(s.n_angles, 33);
        assert!((s.angle_step_deg - 5.6).abs() < 1e-12);
        assert_eq!(s.upsampled(16).n_angles, 513);
    }

    #[test]
    fn indivisible_rejected() {
        let g = ScanGeometry::with_angles(512, 512, 512);
        assert_eq!(
            g.subsampled(16),
            Err(Error::IndivisibleAngles { n_angles: 512, ratio: 16 })
        );
    }
}
