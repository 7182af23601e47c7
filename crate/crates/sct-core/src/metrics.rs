//! PSNR family: sinogram-PSNR, per-offset angular-PSNR and image-PSNR.

use alloc::string::String;
use alloc::vec::Vec;
use num_traits::Float;

use crate::image::Image;
use crate::projector::ProjectorConfig;
use crate::recon::{sirt_with_weights, ReconConfig, SirtWeights};
use crate::sinogram::Sinogram;
use crate::Error;

/// `20·log10(peak) − 10·log10(MSE)` with the peak taken jointly over both
/// arrays, which keeps the measure symmetric. Identical arrays give
/// `f64::INFINITY`.
pub fn psnr(a: &[f32], b: &[f32]) -> Result<f64, Error> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch);
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut peak = f64::NEG_INFINITY;
    let mut sq = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        peak = peak.max(x as f64).max(y as f64);
        let d = x as f64 - y as f64;
        sq += d * d;
    }
    let mse = sq / a.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * peak.log10() - 10.0 * mse.log10())
}

/// PSNR over whole sinograms.
pub fn sinogram_psnr(est: &Sinogram, truth: &Sinogram) -> Result<f64, Error> {
    if est.n_angles() != truth.n_angles() || est.n_detectors() != truth.n_detectors() {
        return Err(Error::ShapeMismatch);
    }
    psnr(&est.data, &truth.data)
}

/// PSNR per offset class: for each `k` in `[1, R-1]`, the PSNR over the
/// concatenation of all rows at that offset from their reference.
pub fn angular_psnr(
    est: &Sinogram,
    truth: &Sinogram,
    ratio: usize,
) -> Result<Vec<(usize, f64)>, Error> {
    if est.n_angles() != truth.n_angles() || est.n_detectors() != truth.n_detectors() {
        return Err(Error::ShapeMismatch);
    }
    if ratio < 2 {
        return Err(Error::BadRatio(ratio));
    }
    let rows = est.n_angles();
    if (rows - 1) % ratio != 0 {
        return Err(Error::IndivisibleAngles { n_angles: rows, ratio });
    }
    let mut out = Vec::with_capacity(ratio - 1);
    for k in 1..ratio {
        let mut ea: Vec<f32> = Vec::new();
        let mut ta: Vec<f32> = Vec::new();
        let mut row = k;
        while row < rows {
            ea.extend_from_slice(est.row(row));
            ta.extend_from_slice(truth.row(row));
            row += ratio;
        }
        out.push((k, psnr(&ea, &ta)?));
    }
    Ok(out)
}

/// Reconstructs the estimated sinogram with SIRT and scores it against the
/// ground-truth image.
pub fn image_psnr(
    est: &Sinogram,
    truth_image: &Image,
    cfg: &ProjectorConfig,
    rc: &ReconConfig,
) -> Result<f64, Error> {
    let weights = SirtWeights::for_config(cfg)?;
    image_psnr_with_weights(est, truth_image, cfg, rc, &weights)
}

/// [`image_psnr`] with SIRT normalization weights computed once by the
/// caller.
pub fn image_psnr_with_weights(
    est: &Sinogram,
    truth_image: &Image,
    cfg: &ProjectorConfig,
    rc: &ReconConfig,
    weights: &SirtWeights,
) -> Result<f64, Error> {
    let recon = sirt_with_weights(est, cfg, rc, weights)?;
    psnr(&recon.data, &truth_image.data)
}

/// Per-sample metric rows plus aggregate values for one method.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub method: String,
    pub ratio: usize,
    /// `(sample id, sinogram dB, image dB)`.
    pub per_sample: Vec<(usize, f64, Option<f64>)>,
    /// `(offset k, dB)` averaged over samples, `k = 1..R-1`.
    pub angular: Vec<(usize, f64)>,
}

impl MetricsReport {
    pub fn mean_sinogram_psnr(&self) -> f64 {
        let n = self.per_sample.len() as f64;
        self.per_sample.iter().map(|(_, s, _)| s).sum::<f64>() / n
    }

    pub fn mean_image_psnr(&self) -> Option<f64> {
        let vals: Vec<f64> = self.per_sample.iter().filter_map(|(_, _, i)| *i).collect();
        if vals.is_empty() {
            None
        } else {
            Some(vals.iter().sum::<f64>() / vals.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::baseline::{linear_interpolate, nearest_upsample};
    use crate::geometry::ScanGeometry;

    #[test]
    fn identical_arrays_are_infinite() {
        let a = [0.3f32, 0.7, 0.1];
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn hand_value() {
        // peak 1, MSE 0.5 -> 10*log10(2) = 3.0103 dB.
        let got = psnr(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((got - 3.0103).abs() < 1e-4, "{got}");
    }

    #[test]
    fn scale_invariance() {
        let a = psnr(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        let b = psnr(&[2.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.9f32, 0.1, 0.4, 0.6];
        let b = [0.2f32, 0.8, 0.3, 0.5];
        assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
    }

    #[test]
    fn empty_and_mismatched_rejected() {
        assert!(matches!(psnr(&[], &[]), Err(Error::EmptyInput)));
        assert!(matches!(psnr(&[1.0], &[1.0, 2.0]), Err(Error::ShapeMismatch)));
    }

    fn sino(rows: usize, cols: usize, data: Vec<f32>) -> Sinogram {
        Sinogram::new(ScanGeometry::with_angles(rows, cols, cols), data).unwrap()
    }

    #[test]
    fn angular_psnr_infinite_when_equal() {
        let s = sino(9, 3, (0..27).map(|v| v as f32 * 0.1).collect());
        for (k, db) in angular_psnr(&s, &s, 4).unwrap() {
            assert!(db.is_infinite(), "offset {k}");
        }
    }

    #[test]
    fn angular_psnr_exact_for_linear_on_affine() {
        let u = [0.5f32, 1.0, -0.25, 2.0];
        let mut data = Vec::new();
        for a in 0..9 {
            data.extend(u.iter().map(|&x| a as f32 * x));
        }
        let truth = sino(9, 4, data);
        let est = linear_interpolate(&truth.subsample(4).unwrap(), 4).unwrap();
        for (k, db) in angular_psnr(&est, &truth, 4).unwrap() {
            assert!(db > 120.0, "offset {k}: {db}");
        }
    }

    #[test]
    fn nearest_is_worst_at_the_farthest_offset() {
        // Rows move smoothly with angle, so copying the closest reference
        // hurts most at the largest angular distance.
        let cols = 8;
        let rows = 33;
        let mut data = Vec::new();
        for a in 0..rows {
            for c in 0..cols {
                let phase = a as f32 * 0.15 + c as f32;
                data.push((phase).sin() * 0.4 + 0.5);
            }
        }
        let truth = sino(rows, cols, data);
        let est = nearest_upsample(&truth.subsample(8).unwrap(), 8).unwrap();
        let curve = angular_psnr(&est, &truth, 8).unwrap();
        let (min_k, _) = curve
            .iter()
            .fold((0usize, f64::INFINITY), |acc, &(k, db)| {
                if db < acc.1 {
                    (k, db)
                } else {
                    acc
                }
            });
        assert_eq!(min_k, 4, "curve: {curve:?}");
    }

    #[test]
    fn image_psnr_zero_sinogram_is_finite() {
        use crate::phantom::{generate_phantom, PhantomSpec};
        let phantom = generate_phantom(&PhantomSpec::new(3, 4, 32)).unwrap();
        let cfg = ProjectorConfig::new(ScanGeometry::with_angles(16, 32, 32));
        let zero = Sinogram::new(cfg.geometry.clone(), vec![0.0; 16 * 32]).unwrap();
        let db = image_psnr(&zero, &phantom, &cfg, &ReconConfig::sirt_default()).unwrap();
        assert!(db.is_finite());
    }
}
