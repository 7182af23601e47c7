//! The `SCT1` container: an ASCII header line, an optional angle list for
//! sinograms, then raw little-endian f32 payload in row-major order.
//!
//! ```text
//! SCT1 <kind:sino|img> <rows> <cols> f32le\n
//! angles: <a0>,<a1>,...\n        (sinograms only)
//! <payload>
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use sct_core::{Image, ScanGeometry, Sinogram};

use crate::{Error, Result};

/// A loaded container: either a sinogram or an image.
#[derive(Debug, Clone, PartialEq)]
pub enum Container {
    Sino(Sinogram),
    Img(Image),
}

impl Container {
    pub fn into_sino(self, path: &Path) -> Result<Sinogram> {
        match self {
            Container::Sino(s) => Ok(s),
            Container::Img(_) => Err(Error::DimensionMismatch {
                path: path.into(),
                detail: "expected a sinogram, found an image".into(),
            }),
        }
    }

    pub fn into_img(self, path: &Path) -> Result<Image> {
        match self {
            Container::Img(i) => Ok(i),
            Container::Sino(_) => Err(Error::DimensionMismatch {
                path: path.into(),
                detail: "expected an image, found a sinogram".into(),
            }),
        }
    }
}

fn write_payload(out: &mut impl Write, data: &[f32], path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(data.len() * 4);
    for v in data {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn save_sinogram(path: impl AsRef<Path>, sino: &Sinogram) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    let g = &sino.geometry;
    let header = format!("SCT1 sino {} {} f32le\n", g.n_angles, g.n_detectors);
    out.extend_from_slice(header.as_bytes());
    let angles: Vec<String> = (0..g.n_angles).map(|i| format!("{}", g.angle_deg(i))).collect();
    out.extend_from_slice(format!("angles: {}\n", angles.join(",")).as_bytes());
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&out).map_err(|e| Error::io(path, e))?;
    write_payload(&mut file, &sino.data, path)
}

pub fn save_image(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    let header = format!("SCT1 img {} {} f32le\n", img.size, img.size);
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
    write_payload(&mut file, &img.data, path)
}

fn read_line(reader: &mut impl BufRead, path: &Path) -> Result<String> {
    let mut line = String::new();
    reader.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    Ok(line.trim_end_matches('\n').to_string())
}

fn read_f32_payload(reader: &mut impl Read, count: usize, path: &Path) -> Result<Vec<f32>> {
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    if bytes.len() < count * 4 {
        return Err(Error::TruncatedPayload { path: path.into(), expected: count, got: bytes.len() / 4 });
    }
    if bytes.len() > count * 4 {
        return Err(Error::DimensionMismatch {
            path: path.into(),
            detail: format!("payload longer than header declares ({} extra bytes)", bytes.len() - count * 4),
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Loads either container kind. Sinogram geometry is reconstructed from the
/// angle list; detector pitch defaults to 1 and the image grid to the
/// detector count (override downstream when a scan file says otherwise).
pub fn load_container(path: impl AsRef<Path>) -> Result<Container> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let header = read_line(&mut reader, path)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != "SCT1" || parts[4] != "f32le" {
        return Err(Error::BadMagic { path: path.into() });
    }
    let rows: usize = parts[2]
        .parse()
        .map_err(|_| Error::MalformedHeader { path: path.into(), detail: "rows".into() })?;
    let cols: usize = parts[3]
        .parse()
        .map_err(|_| Error::MalformedHeader { path: path.into(), detail: "cols".into() })?;
    match parts[1] {
        "img" => {
            if rows != cols {
                return Err(Error::DimensionMismatch {
                    path: path.into(),
                    detail: format!("image must be square, got {rows}x{cols}"),
                });
            }
            let data = read_f32_payload(&mut reader, rows * cols, path)?;
            Ok(Container::Img(Image::new(rows, data).map_err(Error::Core)?))
        }
        "sino" => {
            let angles_line = read_line(&mut reader, path)?;
            let rest = angles_line.strip_prefix("angles: ").ok_or_else(|| Error::MalformedHeader {
                path: path.into(),
                detail: "missing angles line".into(),
            })?;
            let angles: Vec<f64> = rest
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::MalformedHeader { path: path.into(), detail: "angles".into() })?;
            if angles.len() != rows {
                return Err(Error::DimensionMismatch {
                    path: path.into(),
                    detail: format!("header declares {rows} rows, angles line has {}", angles.len()),
                });
            }
            if angles.len() < 2 {
                return Err(Error::MalformedHeader { path: path.into(), detail: "need >= 2 angles".into() });
            }
            let data = read_f32_payload(&mut reader, rows * cols, path)?;
            let geometry = ScanGeometry::new(
                rows,
                angles[0],
                angles[1] - angles[0],
                cols,
                1.0,
                cols,
            )
            .map_err(Error::Core)?;
            Ok(Container::Sino(Sinogram::new(geometry, data).map_err(Error::Core)?))
        }
        _ => Err(Error::BadMagic { path: path.into() }),
    }
}

/// 8-bit min-max scaled PGM (P5) export for quick visual inspection.
pub fn export_pgm(path: impl AsRef<Path>, data: &[f32], width: usize, height: usize) -> Result<()> {
    let path = path.as_ref();
    let lo = data.iter().copied().fold(f32::INFINITY, f32::min);
    let hi = data.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(data.iter().map(|&v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8));
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sct_core::rng::SplitMix64;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sct-container-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn sinogram_roundtrip_is_bit_exact() {
        let g = ScanGeometry::with_angles(33, 512, 512);
        let mut rng = SplitMix64::new(1);
        let data: Vec<f32> = (0..33 * 512).map(|_| rng.next_f32()).collect();
        let sino = Sinogram::new(g, data).unwrap();
        let path = tmp("roundtrip.sct");
        save_sinogram(&path, &sino).unwrap();
        let first = fs::read(&path).unwrap();
        let loaded = load_container(&path).unwrap().into_sino(&path).unwrap();
        assert_eq!(loaded.data, sino.data);
        assert_eq!(loaded.n_angles(), 33);
        assert_eq!(loaded.n_detectors(), 512);
        assert!((loaded.geometry.angle_step_deg - sino.geometry.angle_step_deg).abs() < 1e-12);
        // Save the loaded copy again: the bytes must not drift.
        let path2 = tmp("roundtrip2.sct");
        save_sinogram(&path2, &loaded).unwrap();
        assert_eq!(first, fs::read(&path2).unwrap());
    }

    #[test]
    fn image_roundtrip() {
        let img = Image::new(3, (0..9).map(|v| v as f32 * 0.5).collect()).unwrap();
        let path = tmp("img.sct");
        save_image(&path, &img).unwrap();
        let loaded = load_container(&path).unwrap().into_img(&path).unwrap();
        assert_eq!(loaded, img);
    }

    #[test]
    fn wrong_magic_rejected() {
        let path = tmp("bad_magic.sct");
        fs::write(&path, b"XYZ9 sino 2 2 f32le\nangles: 0,1\n\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0\0").unwrap();
        assert!(matches!(load_container(&path), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncated_payload_rejected() {
        let g = ScanGeometry::with_angles(3, 4, 4);
        let sino = Sinogram::new(g, vec![0.5; 12]).unwrap();
        let path = tmp("trunc.sct");
        save_sinogram(&path, &sino).unwrap();
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        match load_container(&path) {
            Err(Error::TruncatedPayload { expected, got, .. }) => {
                assert_eq!(expected, 12);
                assert_eq!(got, 11);
            }
            other => panic!("expected TruncatedPayload, got {other:?}"),
        }
    }

    #[test]
    fn kind_mismatch_is_reported() {
        let img = Image::new(2, vec![0.0; 4]).unwrap();
        let path = tmp("kind.sct");
        save_image(&path, &img).unwrap();
        assert!(matches!(
            load_container(&path).unwrap().into_sino(&path),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pgm_has_expected_header() {
        let path = tmp("view.pgm");
        export_pgm(&path, &[0.0, 0.5, 1.0, 0.25], 2, 2).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P5\n2 2\n255\n"));
        assert_eq!(bytes.len(), b"P5\n2 2\n255\n".len() + 4);
    }
}
