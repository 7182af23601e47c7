//! Metrics CSV and simple PGM line plots.
//!
//! CSV schema: `sample_id,method,R,offset,sinogram_psnr,image_psnr`. Rows
//! with an empty offset are per-sample aggregates; rows with an offset carry
//! that offset's angular-PSNR in the `sinogram_psnr` column. `sample_id`
//! `mean` aggregates the test set.

use std::fmt::Write as _;
use std::path::Path;

use crate::container;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sample_id: String,
    pub method: String,
    pub ratio: usize,
    pub offset: Option<usize>,
    pub sinogram_psnr: f64,
    pub image_psnr: Option<f64>,
}

fn fmt_db(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn parse_db(tok: &str) -> std::result::Result<f64, String> {
    if tok == "inf" {
        Ok(f64::INFINITY)
    } else {
        tok.parse().map_err(|_| format!("bad dB value `{tok}`"))
    }
}

pub fn write_csv(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("sample_id,method,R,offset,sinogram_psnr,image_psnr\n");
    for r in rows {
        let offset = r.offset.map(|k| k.to_string()).unwrap_or_default();
        let image = r.image_psnr.map(fmt_db).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.sample_id,
            r.method,
            r.ratio,
            offset,
            fmt_db(r.sinogram_psnr),
            image
        )
        .unwrap();
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Vec<CsvRow>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "sample_id,method,R,offset,sinogram_psnr,image_psnr" {
        return Err(Error::MalformedHeader { path: path.into(), detail: "csv header".into() });
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = |d: String| Error::MalformedHeader {
            path: path.into(),
            detail: format!("row {}: {d}", i + 2),
        };
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad("expected 6 fields".into()));
        }
        rows.push(CsvRow {
            sample_id: f[0].to_string(),
            method: f[1].to_string(),
            ratio: f[2].parse().map_err(|_| bad("ratio".into()))?,
            offset: if f[3].is_empty() {
                None
            } else {
                Some(f[3].parse().map_err(|_| bad("offset".into()))?)
            },
            sinogram_psnr: parse_db(f[4]).map_err(bad)?,
            image_psnr: if f[5].is_empty() { None } else { Some(parse_db(f[5]).map_err(bad)?) },
        });
    }
    Ok(rows)
}

const PLOT_W: usize = 420;
const PLOT_H: usize = 260;
const MARGIN: usize = 24;

struct Canvas {
    px: Vec<u8>,
}

impl Canvas {
    fn new() -> Self {
        Canvas { px: vec![255u8; PLOT_W * PLOT_H] }
    }

    fn set(&mut self, x: isize, y: isize, shade: u8) {
        if x >= 0 && (x as usize) < PLOT_W && y >= 0 && (y as usize) < PLOT_H {
            let idx = y as usize * PLOT_W + x as usize;
            self.px[idx] = self.px[idx].min(shade);
        }
    }

    fn line(&mut self, x0: isize, y0: isize, x1: isize, y1: isize, shade: u8) {
        // Bresenham.
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, shade);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }
}

/// Shade assigned to a method curve; unknown methods get mid-gray.
fn method_shade(method: &str) -> u8 {
    match method {
        "linear" => 0,
        "nearest" => 96,
        "bilinear" => 160,
        "learned" => 64,
        _ => 128,
    }
}

/// Rasters the mean angular-PSNR curves (one shade per method) for one
/// ratio into a PGM.
pub fn plot_angular(path: impl AsRef<Path>, rows: &[CsvRow], ratio: usize) -> Result<()> {
    let mut series: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    for r in rows {
        let (Some(k), "mean") = (r.offset, r.sample_id.as_str()) else { continue };
        if r.ratio != ratio || !r.sinogram_psnr.is_finite() {
            continue;
        }
        match series.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, pts)) => pts.push((k, r.sinogram_psnr)),
            None => series.push((r.method.clone(), vec![(k, r.sinogram_psnr)])),
        }
    }
    render_curves(path, &series, (ratio - 1) as f64, |k| k as f64 - 1.0)
}

/// Rasters mean sinogram-PSNR against the up-sampling ratio, one curve per
/// method, when the CSV covers several ratios.
pub fn plot_ratio_sweep(path: impl AsRef<Path>, rows: &[CsvRow]) -> Result<()> {
    let mut ratios: Vec<usize> = rows.iter().map(|r| r.ratio).collect();
    ratios.sort_unstable();
    ratios.dedup();
    let mut series: Vec<(String, Vec<(usize, f64)>)> = Vec::new();
    for r in rows {
        if r.sample_id != "mean" || r.offset.is_some() || !r.sinogram_psnr.is_finite() {
            continue;
        }
        match series.iter_mut().find(|(m, _)| *m == r.method) {
            Some((_, pts)) => pts.push((r.ratio, r.sinogram_psnr)),
            None => series.push((r.method.clone(), vec![(r.ratio, r.sinogram_psnr)])),
        }
    }
    let span = (ratios.len().max(2) - 1) as f64;
    let pos = move |ratio: usize| ratios.iter().position(|&x| x == ratio).unwrap_or(0) as f64;
    render_curves(path, &series, span, pos)
}

fn render_curves(
    path: impl AsRef<Path>,
    series: &[(String, Vec<(usize, f64)>)],
    x_span: f64,
    x_pos: impl Fn(usize) -> f64,
) -> Result<()> {
    let path = path.as_ref();
    let mut canvas = Canvas::new();
    let (x0, x1) = (MARGIN as f64, (PLOT_W - MARGIN) as f64);
    let (y0, y1) = ((PLOT_H - MARGIN) as f64, MARGIN as f64);
    canvas.line(x0 as isize, y0 as isize, x1 as isize, y0 as isize, 0);
    canvas.line(x0 as isize, y0 as isize, x0 as isize, y1 as isize, 0);

    let all: Vec<f64> = series.iter().flat_map(|(_, pts)| pts.iter().map(|&(_, v)| v)).collect();
    if !all.is_empty() {
        let lo = all.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.05).max(0.5);
        let (lo, hi) = (lo - pad, hi + pad);
        for (method, pts) in series {
            let shade = method_shade(method);
            let mut sorted = pts.clone();
            sorted.sort_by_key(|&(k, _)| k);
            let mut prev: Option<(isize, isize)> = None;
            for &(k, v) in &sorted {
                let fx = x0 + (x1 - x0) * (x_pos(k) / x_span.max(1.0));
                let fy = y0 + (y1 - y0) * ((v - lo) / (hi - lo));
                let p = (fx.round() as isize, fy.round() as isize);
                if let Some(q) = prev {
                    canvas.line(q.0, q.1, p.0, p.1, shade);
                }
                canvas.set(p.0, p.1 - 1, shade);
                canvas.set(p.0, p.1 + 1, shade);
                prev = Some(p);
            }
        }
    }
    container::export_pgm(path, &canvas.px.iter().map(|&v| v as f32).collect::<Vec<_>>(), PLOT_W, PLOT_H)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sct-report-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn sample_rows() -> Vec<CsvRow> {
        vec![
            CsvRow {
                sample_id: "0".into(),
                method: "linear".into(),
                ratio: 4,
                offset: None,
                sinogram_psnr: 31.25,
                image_psnr: Some(27.5),
            },
            CsvRow {
                sample_id: "0".into(),
                method: "linear".into(),
                ratio: 4,
                offset: Some(1),
                sinogram_psnr: 33.0,
                image_psnr: None,
            },
            CsvRow {
                sample_id: "mean".into(),
                method: "linear".into(),
                ratio: 4,
                offset: None,
                sinogram_psnr: f64::INFINITY,
                image_psnr: Some(27.5),
            },
        ]
    }

    #[test]
    fn csv_roundtrip() {
        let rows = sample_rows();
        let path = tmp("metrics.csv");
        write_csv(&path, &rows).unwrap();
        assert_eq!(read_csv(&path).unwrap(), rows);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("sample_id,method,R,offset,sinogram_psnr,image_psnr\n"));
        assert!(text.contains("mean,linear,4,,inf,27.5"));
    }

    #[test]
    fn csv_is_deterministic() {
        let rows = sample_rows();
        let (p1, p2) = (tmp("m1.csv"), tmp("m2.csv"));
        write_csv(&p1, &rows).unwrap();
        write_csv(&p2, &rows).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn plots_are_deterministic() {
        let rows: Vec<CsvRow> = (1..8)
            .map(|k| CsvRow {
                sample_id: "mean".into(),
                method: "nearest".into(),
                ratio: 8,
                offset: Some(k),
                sinogram_psnr: 30.0 - (k as f64 - 4.0).abs(),
                image_psnr: None,
            })
            .collect();
        let (p1, p2) = (tmp("a1.pgm"), tmp("a2.pgm"));
        plot_angular(&p1, &rows, 8).unwrap();
        plot_angular(&p2, &rows, 8).unwrap();
        let b1 = std::fs::read(&p1).unwrap();
        assert_eq!(b1, std::fs::read(&p2).unwrap());
        assert!(b1.starts_with(b"P5\n420 260\n255\n"));
    }
}
