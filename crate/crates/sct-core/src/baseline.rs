//! Deterministic angular up-sampling baselines: linear interpolation of
//! acquisitions, nearest-neighbor row copies and an image-style bilinear
//! resize of the angular axis.

use crate::sinogram::Sinogram;
use crate::Error;

fn check_ratio(scarce: &Sinogram, ratio: usize) -> Result<(), Error> {
    if ratio < 2 {
        return Err(Error::BadRatio(ratio));
    }
    if scarce.n_angles() < 2 {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

fn dense_shell(scarce: &Sinogram, ratio: usize) -> (Sinogram, usize) {
    let geometry = scarce.geometry.upsampled(ratio);
    let w = scarce.n_detectors();
    let data = alloc::vec![0.0f32; geometry.n_angles * w];
    (
        Sinogram { geometry, data, norm: scarce.norm },
        w,
    )
}

/// Linear interpolation between consecutive reference acquisitions: the row
/// at offset `k` from reference `i` is `(1 - k/R)·A_i + (k/R)·A_{i+R}`.
/// Reference rows are copied verbatim.
pub fn linear_interpolate(scarce: &Sinogram, ratio: usize) -> Result<Sinogram, Error> {
    check_ratio(scarce, ratio)?;
    let (mut dense, w) = dense_shell(scarce, ratio);
    for gap in 0..scarce.n_angles() - 1 {
        let lo = scarce.row(gap);
        let hi = scarce.row(gap + 1);
        for k in 0..ratio {
            let t = k as f32 / ratio as f32;
            let row = &mut dense.data[(gap * ratio + k) * w..(gap * ratio + k + 1) * w];
            if k == 0 {
                row.copy_from_slice(lo);
            } else {
                for ((o, &a), &b) in row.iter_mut().zip(lo).zip(hi) {
                    *o = (1.0 - t) * a + t * b;
                }
            }
        }
    }
    let last = dense.n_angles() - 1;
    dense.row_mut(last).copy_from_slice(scarce.row(scarce.n_angles() - 1));
    Ok(dense)
}

/// Copies the angularly closest reference row; the `k = R/2` tie goes to the
/// earlier reference.
pub fn nearest_upsample(scarce: &Sinogram, ratio: usize) -> Result<Sinogram, Error> {
    check_ratio(scarce, ratio)?;
    let (mut dense, w) = dense_shell(scarce, ratio);
    let n_dense = dense.n_angles();
    for a in 0..n_dense {
        let gap = (a / ratio).min(scarce.n_angles() - 2);
        let k = a - gap * ratio;
        // Tie at k = R/2 rounds down to the earlier reference.
        let src = if 2 * k <= ratio { gap } else { gap + 1 };
        dense.data[a * w..(a + 1) * w].copy_from_slice(scarce.row(src));
    }
    Ok(dense)
}

/// Align-corners bilinear resize of the angular axis by `ratio`. The detector
/// axis is untouched, so on exact inputs this coincides with
/// [`linear_interpolate`]; it is implemented as an independent image-resize
/// path since it mirrors a generic up-sampling pipeline rather than an
/// acquisition-interpolation one.
pub fn bilinear_upsample(scarce: &Sinogram, ratio: usize) -> Result<Sinogram, Error> {
    check_ratio(scarce, ratio)?;
    let (mut dense, w) = dense_shell(scarce, ratio);
    let n_in = scarce.n_angles();
    let n_out = dense.n_angles();
    // Align-corners: output row a maps to source coordinate a*(n_in-1)/(n_out-1).
    let scale = (n_in - 1) as f64 / (n_out - 1) as f64;
    for a in 0..n_out {
        let pos = a as f64 * scale;
        let i0 = (pos as usize).min(n_in - 2);
        let frac = (pos - i0 as f64) as f32;
        let lo = scarce.row(i0);
        let hi = scarce.row(i0 + 1);
        let row = &mut dense.data[a * w..(a + 1) * w];
        for ((o, &p), &q) in row.iter_mut().zip(lo).zip(hi) {
            *o = (1.0 - frac) * p + frac * q;
        }
    }
    Ok(dense)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use crate::geometry::ScanGeometry;
    use crate::rng::SplitMix64;

    fn sino(rows: usize, cols: usize, data: Vec<f32>) -> Sinogram {
        Sinogram::new(ScanGeometry::with_angles(rows, cols, cols), data).unwrap()
    }

    #[test]
    fn linear_matches_quarter_weights() {
        // A0 = [0,0], A4 = [4,8] with R = 4.
        let s = sino(2, 2, vec![0.0, 0.0, 4.0, 8.0]);
        let d = linear_interpolate(&s, 4).unwrap();
        assert_eq!(d.n_angles(), 5);
        assert_eq!(d.row(0), &[0.0, 0.0]);
        assert_eq!(d.row(1), &[1.0, 2.0]);
        assert_eq!(d.row(2), &[2.0, 4.0]);
        assert_eq!(d.row(3), &[3.0, 6.0]);
        assert_eq!(d.row(4), &[4.0, 8.0]);
    }

    #[test]
    fn reference_rows_copied_exactly() {
        let mut rng = SplitMix64::new(5);
        let data: Vec<f32> = (0..5 * 7).map(|_| rng.next_f32()).collect();
        let s = sino(5, 7, data);
        for method in [linear_interpolate, nearest_upsample, bilinear_upsample] {
            let d = method(&s, 8).unwrap();
            assert_eq!(d.n_angles(), 33);
            for a in 0..s.n_angles() {
                assert_eq!(d.row(a * 8), s.row(a), "reference row {a}");
            }
        }
    }

    #[test]
    fn linear_exact_on_affine_rows() {
        // Rows v(a) = a * u are affine in the angle index.
        let u = [1.0f32, -2.0, 0.5];
        let mut data = Vec::new();
        for a in 0..9 {
            data.extend(u.iter().map(|&x| a as f32 * x));
        }
        let dense_truth = sino(9, 3, data.clone());
        let scarce = dense_truth.subsample(4).unwrap();
        for method in [linear_interpolate, bilinear_upsample] {
            let d = method(&scarce, 4).unwrap();
            for (got, want) in d.data.iter().zip(&dense_truth.data) {
                assert!((got - want).abs() < 1e-6, "{got} vs {want}");
            }
        }
    }

    #[test]
    fn linear_rows_are_convex_combinations() {
        let mut rng = SplitMix64::new(6);
        let data: Vec<f32> = (0..3 * 5).map(|_| rng.next_f32()).collect();
        let s = sino(3, 5, data);
        let d = linear_interpolate(&s, 4).unwrap();
        for gap in 0..2 {
            for k in 1..4 {
                let row = d.row(gap * 4 + k);
                for (i, &v) in row.iter().enumerate() {
                    let (a, b) = (s.row(gap)[i], s.row(gap + 1)[i]);
                    assert!(v >= a.min(b) - 1e-6 && v <= a.max(b) + 1e-6);
                }
            }
        }
    }

    #[test]
    fn nearest_tie_rounds_down() {
        let s = sino(2, 1, vec![0.0, 4.0]);
        let d = nearest_upsample(&s, 4).unwrap();
        assert_eq!(d.data.as_slice(), &[0.0, 0.0, 0.0, 4.0, 4.0]);
    }

    #[test]
    fn nearest_output_has_at_most_m_distinct_rows() {
        let mut rng = SplitMix64::new(8);
        let data: Vec<f32> = (0..4 * 3).map(|_| rng.next_f32()).collect();
        let s = sino(4, 3, data);
        let d = nearest_upsample(&s, 8).unwrap();
        for a in 0..d.n_angles() {
            let row = d.row(a);
            assert!(
                (0..s.n_angles()).any(|r| s.row(r) == row),
                "row {a} is not a copy of any input row"
            );
        }
    }

    #[test]
    fn bilinear_midpoint_is_mean() {
        let s = sino(2, 2, vec![0.0, 2.0, 4.0, 6.0]);
        let d = bilinear_upsample(&s, 2).unwrap();
        assert_eq!(d.row(1), &[2.0, 4.0]);
    }

    #[test]
    fn ratio_below_two_rejected() {
        let s = sino(2, 1, vec![0.0, 1.0]);
        for method in [linear_interpolate, nearest_upsample, bilinear_upsample] {
            assert_eq!(method(&s, 1).unwrap_err(), Error::BadRatio(1));
        }
    }

    #[test]
    fn output_row_count() {
        let s = sino(5, 2, vec![0.5; 10]);
        for method in [linear_interpolate, nearest_upsample, bilinear_upsample] {
            for r in [2usize, 3, 4, 8] {
                assert_eq!(method(&s, r).unwrap().n_angles(), 4 * r + 1);
            }
        }
    }
}
