//! Tracing and classifying the ergosphere `Δ(x) = 0`.
//!
//! The ergoregion `{Δ ≤ 0}` is assumed star-shaped about a seed point. Each
//! ray from the seed is scanned for its single sign change of `Δ`, refined
//! with Brent's method, and decorated with the local geometry: the outward
//! normal `ν`, the kernel `e` of the spatial block, the characteristic form
//! `Σ g^{jk} ν_j ν_k` and the orientation `Σ g^{0j} ∂Δ/∂x_j`.
//!
//! A curve is *characteristic* (Schwarzschild type: the ergosphere is itself
//! the horizon) when the form vanishes everywhere, *non-characteristic* when
//! it vanishes nowhere, and *mixed* otherwise. A negative orientation
//! everywhere marks a black hole, positive a white hole.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{sym2_eigenvalues, sym2_eigenvector, sym2_norm, MetricError, SpacetimeMetric};
use crate::roots::{brent, RootError};

/// Default relative tolerance on the normalized characteristic form.
pub const DEFAULT_CHAR_TOL: f64 = 1e-6;

/// Samples per ray when scanning for the sign change.
const SCAN_SAMPLES: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ErgoError {
    #[error("seed {seed:?} is not in the ergoregion (Δ = {delta})")]
    SeedNotInErgoregion { seed: [f64; 2], delta: f64 },
    #[error("no ergosphere crossing on the ray at angle {angle} within radius {radius}")]
    NoCrossing { angle: f64, radius: f64 },
    #[error(
        "ray at angle {angle} crosses Δ = 0 {crossings} times: the ergoregion is not \
         star-shaped about the seed; re-seed closer to its centre"
    )]
    NotStarShaped { angle: f64, crossings: usize },
    #[error("|∇Δ| = {grad} at {point:?}: the ergosphere is not smooth there")]
    NotSmooth { point: [f64; 2], grad: f64 },
    #[error("root refinement left |Δ| = {delta} at {point:?}")]
    Unresolved { point: [f64; 2], delta: f64 },
    #[error("spatial block has full rank at {point:?} (Δ = {delta})")]
    FullRank { point: [f64; 2], delta: f64 },
    #[error("spatial block vanishes at {point:?}")]
    RankZero { point: [f64; 2] },
    #[error("need at least 16 rays, got {0}")]
    TooFewRays(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Root(#[from] RootError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    /// Case a: characteristic at every vertex.
    Characteristic,
    /// Case b: characteristic at no vertex.
    NonCharacteristic,
    /// Case c: both; not processed further.
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    BlackHole,
    WhiteHole,
    Indefinite,
}

impl Orientation {
    pub fn from_values(orient: &[f64]) -> Self {
        if !orient.is_empty() && orient.iter().all(|&o| o < 0.0) {
            Orientation::BlackHole
        } else if !orient.is_empty() && orient.iter().all(|&o| o > 0.0) {
            Orientation::WhiteHole
        } else {
            Orientation::Indefinite
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgoVertex {
    /// Ray angle about the seed.
    pub angle: f64,
    pub position: [f64; 2],
    pub delta: f64,
    pub delta_grad: [f64; 2],
    /// Outward unit normal, `∇Δ/|∇Δ|`.
    pub normal: [f64; 2],
    /// Unit kernel vector of the spatial block, pointing inward.
    pub null_vector: [f64; 2],
    /// `|[g^{jk}] e|`.
    pub kernel_residual: f64,
    /// `Σ g^{jk} ν_j ν_k`.
    pub char_form: f64,
    /// `|char_form|` over the spectral norm of the spatial block.
    pub char_form_normalized: f64,
    /// `Σ g^{0j} ∂Δ/∂x_j`.
    pub orient: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErgosphereCurve {
    pub seed: [f64; 2],
    /// In increasing ray angle; the polyline closes from last to first.
    pub vertices: Vec<ErgoVertex>,
    pub classification: Classification,
    pub orientation: Orientation,
    pub char_tol: f64,
    pub tol: f64,
}

impl ErgosphereCurve {
    pub fn radii(&self) -> Vec<f64> {
        self.vertices
            .iter()
            .map(|v| dist(v.position, self.seed))
            .collect()
    }

    pub fn mean_radius(&self) -> f64 {
        let r = self.radii();
        r.iter().sum::<f64>() / r.len() as f64
    }

    pub fn min_radius(&self) -> f64 {
        self.radii().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_char_form_normalized(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.char_form_normalized)
            .fold(0.0, f64::max)
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| v.position).collect()
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `Δ` with points outside the metric's domain reported as interior.
///
/// Singular cores (a vortex centre, a superluminal flow region) lie inside
/// the ergoregion in every metric this crate ships.
fn interior_delta(m: &SpacetimeMetric<2>, p: [f64; 2]) -> f64 {
    match m.spatial_det(&p) {
        Ok(d) => d,
        Err(_) => -1.0,
    }
}

/// Distance from `seed` along direction `angle` to the ergosphere.
///
/// `search_radius` bounds the scan; `None` expands geometrically from unit
/// distance until `Δ > 0` and then scans four times that far.
pub fn ray_root(
    m: &SpacetimeMetric<2>,
    seed: [f64; 2],
    angle: f64,
    search_radius: Option<f64>,
    tol: f64,
) -> Result<f64, ErgoError> {
    let u = [angle.cos(), angle.sin()];
    let at = |s: f64| [seed[0] + s * u[0], seed[1] + s * u[1]];
    let f = |s: f64| interior_delta(m, at(s));
    let radius = match search_radius {
        Some(r) => r,
        None => {
            let mut r = 1.0;
            while f(r) <= 0.0 {
                r *= 2.0;
                if r > 1e8 {
                    return Err(ErgoError::NoCrossing { angle, radius: r });
                }
            }
            4.0 * r
        }
    };
    let mut crossings = Vec::new();
    let mut s_prev = 0.0;
    let mut f_prev = f(0.0).min(0.0);
    for i in 1..=SCAN_SAMPLES {
        let s = radius * i as f64 / SCAN_SAMPLES as f64;
        let fs = f(s);
        if (fs > 0.0) != (f_prev > 0.0) {
            crossings.push((s_prev, s));
        }
        s_prev = s;
        f_prev = fs;
    }
    match crossings.len() {
        0 => Err(ErgoError::NoCrossing { angle, radius }),
        1 => {
            let (a, b) = crossings[0];
            let s = brent(f, a, b, 1e-15 * b)?;
            let delta = f(s);
            if delta.abs() >= tol {
                return Err(ErgoError::Unresolved {
                    point: at(s),
                    delta,
                });
            }
            Ok(s)
        }
        n => Err(ErgoError::NotStarShaped {
            angle,
            crossings: n,
        }),
    }
}

/// Unit kernel vector of the spatial block at `p`.
///
/// The block must have rank exactly one: its smaller eigenvalue (in
/// magnitude) at most `rank_tol` times the larger.
pub fn null_kernel(m: &SpacetimeMetric<2>, p: [f64; 2], rank_tol: f64) -> Result<[f64; 2], ErgoError> {
    let g = m.eval_inverse_metric(&p)?;
    let s = g.spatial();
    let (hi, lo) = sym2_eigenvalues(&s);
    let (big, small) = if hi.abs() >= lo.abs() { (hi, lo) } else { (lo, hi) };
    if big.abs() <= f64::MIN_POSITIVE {
        return Err(ErgoError::RankZero { point: p });
    }
    if small.abs() > rank_tol * big.abs() {
        return Err(ErgoError::FullRank {
            point: p,
            delta: g.spatial_det(),
        });
    }
    Ok(sym2_eigenvector(&s, small))
}

/// `Σ g^{jk}(p) ν_j ν_k`.
pub fn char_form(m: &SpacetimeMetric<2>, p: [f64; 2], nu: [f64; 2]) -> Result<f64, MetricError> {
    Ok(m.eval_inverse_metric(&p)?.spatial_form(&nu))
}

/// Geometric data at a point of the ergosphere. The kernel sign is made to
/// point inward when that is well defined; otherwise it is left as found.
pub fn vertex_at(m: &SpacetimeMetric<2>, p: [f64; 2], angle: f64) -> Result<ErgoVertex, ErgoError> {
    let jet = m.eval_jet(&p)?;
    let g = jet.values();
    let d = jet.spatial_det();
    let grad = d.eps;
    let gn = grad[0].hypot(grad[1]);
    let s = g.spatial();
    let scale = sym2_norm(&s);
    // Δ is quadratic in the block; compare |∇Δ|·(radius) against ‖G‖².
    let length = p[0].hypot(p[1]).max(1.0);
    if gn * length < 1e-8 * scale * scale {
        return Err(ErgoError::NotSmooth { point: p, grad: gn });
    }
    let nu = [grad[0] / gn, grad[1] / gn];
    let (hi, lo) = sym2_eigenvalues(&s);
    let small = if hi.abs() <= lo.abs() { hi } else { lo };
    let mut e = sym2_eigenvector(&s, small);
    if e[0] * nu[0] + e[1] * nu[1] > 1e-6 {
        e = [-e[0], -e[1]];
    }
    let ge = [
        s[0][0] * e[0] + s[0][1] * e[1],
        s[1][0] * e[0] + s[1][1] * e[1],
    ];
    let cf = g.spatial_form(&nu);
    Ok(ErgoVertex {
        angle,
        position: p,
        delta: d.re,
        delta_grad: grad,
        normal: nu,
        null_vector: e,
        kernel_residual: ge[0].hypot(ge[1]),
        char_form: cf,
        char_form_normalized: cf.abs() / scale,
        orient: g.ts(0) * grad[0] + g.ts(1) * grad[1],
    })
}

/// Traces the ergosphere with `n_rays` equally spaced rays from `seed`.
pub fn trace_ergosphere(
    m: &SpacetimeMetric<2>,
    seed: [f64; 2],
    n_rays: usize,
    tol: f64,
) -> Result<ErgosphereCurve, ErgoError> {
    trace_ergosphere_with(m, seed, n_rays, tol, DEFAULT_CHAR_TOL)
}

pub fn trace_ergosphere_with(
    m: &SpacetimeMetric<2>,
    seed: [f64; 2],
    n_rays: usize,
    tol: f64,
    char_tol: f64,
) -> Result<ErgosphereCurve, ErgoError> {
    if n_rays < 16 {
        return Err(ErgoError::TooFewRays(n_rays));
    }
    let d0 = interior_delta(m, seed);
    if d0 >= 0.0 {
        return Err(ErgoError::SeedNotInErgoregion { seed, delta: d0 });
    }
    let mut vertices: Vec<ErgoVertex> = (0..n_rays)
        .into_par_iter()
        .map(|k| {
            let angle = TAU * k as f64 / n_rays as f64;
            let s = ray_root(m, seed, angle, None, tol)?;
            let p = [seed[0] + s * angle.cos(), seed[1] + s * angle.sin()];
            vertex_at(m, p, angle)
        })
        .collect::<Result<_, _>>()?;
    // Where e ⟂ ν the inward rule is void; continue the sign along the curve.
    for k in 0..vertices.len() {
        let v = &vertices[k];
        let tangential = (v.null_vector[0] * v.normal[0] + v.null_vector[1] * v.normal[1]).abs() <= 1e-6;
        if tangential && k > 0 {
            let prev = vertices[k - 1].null_vector;
            let e = &mut vertices[k].null_vector;
            if e[0] * prev[0] + e[1] * prev[1] < 0.0 {
                *e = [-e[0], -e[1]];
            }
        }
    }
    let mut curve = ErgosphereCurve {
        seed,
        vertices,
        classification: Classification::Mixed,
        orientation: Orientation::Indefinite,
        char_tol,
        tol,
    };
    let (c, o) = classify(&curve, char_tol);
    curve.classification = c;
    curve.orientation = o;
    Ok(curve)
}

/// Case a/b/c from the normalized characteristic form, plus orientation.
pub fn classify(curve: &ErgosphereCurve, char_tol: f64) -> (Classification, Orientation) {
    let small = curve
        .vertices
        .iter()
        .filter(|v| v.char_form_normalized < char_tol)
        .count();
    let class = if small == curve.vertices.len() {
        Classification::Characteristic
    } else if small == 0 {
        Classification::NonCharacteristic
    } else {
        Classification::Mixed
    };
    let orient: Vec<f64> = curve.vertices.iter().map(|v| v.orient).collect();
    (class, Orientation::from_values(&orient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::builtin::{acoustic_vortex, minkowski, schwarzschild_equatorial};

    #[test]
    fn acoustic_radius() {
        let m = acoustic_vortex(-1.0, 1.0).unwrap();
        let c = trace_ergosphere(&m, [0.1, 0.0], 64, 1e-12).unwrap();
        for v in &c.vertices {
            assert!((v.position[0].hypot(v.position[1]) - 2f64.sqrt()).abs() < 1e-9);
            assert!(v.kernel_residual < 1e-8);
        }
        assert_eq!(c.classification, Classification::NonCharacteristic);
        assert_eq!(c.orientation, Orientation::BlackHole);
    }

    #[test]
    fn minkowski_has_no_ergoregion() {
        assert!(matches!(
            trace_ergosphere(&minkowski(), [0.0, 0.0], 32, 1e-12),
            Err(ErgoError::SeedNotInErgoregion { .. })
        ));
        assert!(matches!(
            null_kernel(&minkowski(), [1.0, 2.0], 1e-8),
            Err(ErgoError::FullRank { .. })
        ));
    }

    #[test]
    fn schwarzschild_is_characteristic() {
        let m = schwarzschild_equatorial(1.0).unwrap();
        let c = trace_ergosphere(&m, [1.0, 0.0], 32, 1e-12).unwrap();
        assert!(c.points().iter().all(|p| (p[0].hypot(p[1]) - 2.0).abs() < 1e-9));
        assert_eq!(c.classification, Classification::Characteristic);
        assert_eq!(c.orientation, Orientation::BlackHole);
    }

    #[test]
    fn char_form_values() {
        assert_eq!(char_form(&minkowski(), [0.0, 0.0], [1.0, 0.0]).unwrap(), -1.0);
        let m = acoustic_vortex(-1.0, 0.0).unwrap();
        assert!(char_form(&m, [1.0, 0.0], [1.0, 0.0]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn kernel_directions() {
        let radial = null_kernel(&acoustic_vortex(-1.0, 0.0).unwrap(), [1.0, 0.0], 1e-8).unwrap();
        assert!(radial[1].abs() < 1e-12);
        let r = 2f64.sqrt();
        let p = [r * 0.3f64.cos(), r * 0.3f64.sin()];
        let e = null_kernel(&acoustic_vortex(-1.0, 1.0).unwrap(), p, 1e-8).unwrap();
        let cos = (e[0] * p[0] + e[1] * p[1]).abs() / r;
        assert!(cos.acos() > 0.1);
    }

    #[test]
    fn non_star_shaped_is_reported() {
        // Kerr's restricted ergoregion is an annulus about the origin.
        let m = crate::metric::builtin::kerr_restricted(1.0, 0.5).unwrap();
        let err = trace_ergosphere(&m, [1.0, 0.3], 32, 1e-12).unwrap_err();
        assert!(matches!(err, ErgoError::NotStarShaped { .. } | ErgoError::NoCrossing { .. }), "{err}");
    }
}
