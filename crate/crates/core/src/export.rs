//! CSV, JSON and SVG writers.
//!
//! Numbers in CSV are written as `{:.16e}` (17 significant digits, exact
//! round trip), rows in a fixed order, so identical inputs give
//! byte-identical files.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::axisym::KerrSurface;
use crate::charcoords::{CharField, HalfPlaneMap};
use crate::ergosphere::ErgosphereCurve;
use crate::geodesics::NullGeodesic;
use crate::horizon::Horizon;
use crate::metric::SpacetimeMetric;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header and numeric rows as RFC 4180 CSV.
pub fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|&x| fmt(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write>(mut out: W, value: &impl Serialize) -> Result<(), ExportError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn csv_file(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), ExportError> {
    write_csv(io::BufWriter::new(fs::File::create(path)?), header, rows)
}

pub fn json_file(path: &Path, value: &impl Serialize) -> Result<(), ExportError> {
    write_json(io::BufWriter::new(fs::File::create(path)?), value)
}

pub const ERGOSPHERE_HEADER: [&str; 8] = ["angle", "x1", "x2", "delta_grad_1", "delta_grad_2", "char_form", "char_form_normalized", "orient"];

pub fn ergosphere_rows(curve: &ErgosphereCurve) -> impl Iterator<Item = Vec<f64>> + '_ {
    curve.vertices.iter().map(|v| {
        vec![
            v.angle,
            v.position[0],
            v.position[1],
            v.delta_grad[0],
            v.delta_grad[1],
            v.char_form,
            v.char_form_normalized,
            v.orient,
        ]
    })
}

pub const HORIZON_HEADER: [&str; 5] = ["theta", "x1", "x2", "rho0", "radius"];

/// One row per sample: angle about the seed, position, collar depth
/// `ρ₀ = −Δ` and distance from the seed.
pub fn horizon_rows<'a>(m: &'a SpacetimeMetric<2>, h: &'a Horizon) -> impl Iterator<Item = Vec<f64>> + 'a {
    h.angles.iter().zip(&h.points).zip(&h.radii).map(move |((&t, p), &r)| {
        let rho0 = m.spatial_det(p).map_or(f64::NAN, |d| -d);
        vec![t, p[0], p[1], rho0, r]
    })
}

pub const TRAJECTORY_HEADER: [&str; 7] = ["x0", "x1", "x2", "xi1", "xi2", "xi0", "H"];

pub fn trajectory_rows(g: &NullGeodesic<2>) -> impl Iterator<Item = Vec<f64>> + '_ {
    g.samples
        .iter()
        .map(|s| vec![s.x0, s.x[0], s.x[1], s.xi[0], s.xi[1], s.xi0, s.h])
}

pub const FIELD_HEADER: [&str; 7] = ["rho", "theta", "s_plus", "s_minus", "y1", "y2", "delta_tilde"];

pub fn field_rows<'a>(f: &'a CharField, hp: &'a HalfPlaneMap) -> impl Iterator<Item = Vec<f64>> + 'a {
    (0..f.rho.len()).flat_map(move |i| {
        (0..f.theta.len()).map(move |j| {
            vec![
                f.rho[i],
                f.theta[j],
                f.s_plus[i][j],
                f.s_minus[i][j],
                hp.y1[i][j],
                hp.y2[i][j],
                f.delta_tilde[i][j],
            ]
        })
    })
}

pub const KERR_HEADER: [&str; 2] = ["rho", "z"];

pub fn kerr_rows(s: &KerrSurface) -> impl Iterator<Item = Vec<f64>> + '_ {
    s.points.iter().map(|p| vec![p[0], p[1]])
}

/// A polyline for [`svg`].
pub struct Path2<'a> {
    pub points: &'a [[f64; 2]],
    pub closed: bool,
    pub stroke: &'a str,
}

/// A plain SVG 1.1 document with one `<path>` per curve, `y` pointing up.
pub fn svg(paths: &[Path2]) -> String {
    let all = paths.iter().flat_map(|p| p.points.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in all.filter(|p| p[0].is_finite() && p[1].is_finite()) {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (-1.0, -1.0, 1.0, 1.0);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1e-12);
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let stroke_width = 0.003 * w.max(h);
    let mut s = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
         <svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"{} {} {} {}\" width=\"600\" height=\"{}\">\n\
         <g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"{}\">\n",
        x0 - pad,
        -(y1 + pad),
        w,
        h,
        (600.0 * h / w).round(),
        stroke_width
    );
    for p in paths {
        let mut d = String::new();
        for (k, q) in p.points.iter().enumerate() {
            d.push_str(if k == 0 { "M" } else { " L" });
            d.push_str(&format!("{} {}", q[0], q[1]));
        }
        if p.closed {
            d.push_str(" Z");
        }
        s.push_str(&format!("<path stroke=\"{}\" d=\"{}\"/>\n", p.stroke, d));
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_exactly() {
        let xs = [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        let mut buf = Vec::new();
        write_csv(&mut buf, &["a", "b", "c", "d"], [xs.to_vec()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let row = text.lines().nth(1).unwrap();
        let back: Vec<f64> = row.split(',').map(|t| t.parse().unwrap()).collect();
        assert_eq!(back, xs);
    }

    #[test]
    fn svg_has_one_path_per_curve() {
        let a = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]];
        let s = svg(&[
            Path2 { points: &a, closed: true, stroke: "black" },
            Path2 { points: &a[..2], closed: false, stroke: "red" },
        ]);
        assert_eq!(s.matches("<path").count(), 2);
        assert!(s.contains("M0 0 L1 0 L1 1 Z"));
    }
}
