//! Axisymmetric 3+1 metrics reduced to the meridional plane `(ρ, z)`.
//!
//! With `ξ_φ = 0` the Hamiltonian loses every `φ` term, so the restricted
//! problem is an ordinary 2+1 metric that the rest of the crate can consume.
//! The Kerr surfaces `Δ₁ = 0` sit at the Boyer–Lindquist radii
//! `r± = m ± √(m² − a²)`, i.e. on the ellipses
//! `ρ²/(r±² + a²) + z²/r±² = 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::dual::{Dual, Scalar};
use crate::ergosphere::Orientation;
use crate::metric::{sym2_norm, Components, MetricError, MetricField, Point, Provenance, SpacetimeMetric};
use crate::roots::{brent, RootError};

/// Samples closer to the axis than this are clamped onto it.
pub const AXIS_CLAMP: f64 = 1e-6;

/// Contravariant components in cylindrical coordinates `(t, ρ, φ, z)`.
///
/// Coefficients must not depend on `φ`; that is the whole content of the
/// trait and is enforced by the signature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylindrical<S> {
    pub tt: S,
    pub t_rho: S,
    pub t_phi: S,
    pub t_z: S,
    pub rho_rho: S,
    pub rho_phi: S,
    pub rho_z: S,
    pub phi_phi: S,
    pub phi_z: S,
    pub z_z: S,
}

pub trait AxisymmetricField: Send + Sync + std::fmt::Debug {
    fn cylindrical<S: Scalar>(&self, rho: S, z: S) -> Result<Cylindrical<S>, MetricError>;
}

#[derive(Debug, Clone)]
struct Restricted<F>(F);

impl<F: AxisymmetricField> Restricted<F> {
    fn eval<S: Scalar>(&self, x: &[S; 2]) -> Result<Components<S, 2>, MetricError> {
        let c = self.0.cylindrical(x[0], x[1])?;
        let ss = [[c.rho_rho, c.rho_z], [c.rho_z, c.z_z]];
        Ok(Components::from_upper(c.tt, [c.t_rho, c.t_z], |j, k| ss[j][k]))
    }
}

impl<F: AxisymmetricField> MetricField<2> for Restricted<F> {
    fn components(&self, x: &[Dual<2>; 2]) -> Result<Components<Dual<2>, 2>, MetricError> {
        self.eval(x)
    }

    fn values(&self, x: &Point<2>) -> Result<Components<f64, 2>, MetricError> {
        self.eval(x)
    }
}

/// Deletes the `φ` row and column (`ξ_φ = 0`).
pub fn restrict<F: AxisymmetricField + 'static>(field: F, provenance: Provenance) -> SpacetimeMetric<2> {
    SpacetimeMetric::new(Restricted(field), provenance)
}

/// Spatial 3×3 block in `(ρ, φ, z)` order.
pub fn spatial_block<F: AxisymmetricField>(field: &F, rho: f64, z: f64) -> Result<[[f64; 3]; 3], MetricError> {
    let c = field.cylindrical(rho, z)?;
    Ok([
        [c.rho_rho, c.rho_phi, c.rho_z],
        [c.rho_phi, c.phi_phi, c.phi_z],
        [c.rho_z, c.phi_z, c.z_z],
    ])
}

/// Boyer–Lindquist `r` from `ρ²/(r²+a²) + z²/r² = 1`, given `ρ²`.
pub fn kerr_r_scalar<S: Scalar>(rho2: S, z: S, a: f64) -> S {
    let a2 = a * a;
    let q = rho2 + z * z - a2;
    let disc = (q * q + z * z * (4.0 * a2)).sqrt();
    let r2 = if q.value() >= 0.0 {
        (q + disc) * 0.5
    } else {
        // same root, written without cancellation
        z * z * (2.0 * a2) / (disc - q)
    };
    r2.sqrt()
}

/// The unique `r ≥ 0` on the confocal ellipse through `(ρ, z)`.
pub fn kerr_r(rho: f64, z: f64, a: f64) -> Result<f64, MetricError> {
    if rho == 0.0 && z == 0.0 {
        return Err(MetricError::singular(&[rho, z], "kerr_r is degenerate at the origin"));
    }
    Ok(kerr_r_scalar(rho * rho, z, a))
}

/// `r± = m ± √(m² − a²)`.
pub fn kerr_radii(m: f64, a: f64) -> Option<(f64, f64)> {
    let d = m * m - a * a;
    (d >= 0.0).then(|| (m + d.sqrt(), m - d.sqrt()))
}

/// Kerr in Kerr–Schild form, written in cylindrical components.
#[derive(Debug, Clone, Copy)]
pub struct KerrAxisym {
    pub m: f64,
    pub a: f64,
}

impl AxisymmetricField for KerrAxisym {
    fn cylindrical<S: Scalar>(&self, rho: S, z: S) -> Result<Cylindrical<S>, MetricError> {
        let a = self.a;
        let r = kerr_r_scalar(rho * rho, z, a);
        if !(r.value() > 0.0) {
            return Err(MetricError::singular(&[rho.value(), z.value()], "ring singularity"));
        }
        let r2 = r * r;
        let k = r2 * r * (2.0 * self.m) / (r2 * r2 + z * z * (a * a));
        let q = (r2 + a * a).recip();
        // projections of the Kerr–Schild null vector on ρ̂, φ̂, ẑ
        let b_rho = r * rho * q;
        let b_phi = rho * q * -a;
        let b_z = z / r;
        Ok(Cylindrical {
            tt: k + 1.0,
            t_rho: -(k * b_rho),
            t_phi: -(k * b_phi) / rho,
            t_z: -(k * b_z),
            rho_rho: k * b_rho * b_rho - 1.0,
            rho_phi: k * b_rho * b_phi / rho,
            rho_z: k * b_rho * b_z,
            phi_phi: (k * b_phi * b_phi - 1.0) / (rho * rho),
            phi_z: k * b_phi * b_z / rho,
            z_z: k * b_z * b_z - 1.0,
        })
    }
}

/// A planar metric placed in the meridional plane with a flat `φ` direction,
/// `(ρ, z) ↦ planar(ρ − c₁, z − c₂)`.
#[derive(Debug, Clone)]
pub struct TrivialAxisym {
    planar: SpacetimeMetric<2>,
    center: [f64; 2],
}

pub fn trivially_axisymmetric(planar: SpacetimeMetric<2>, center: [f64; 2]) -> TrivialAxisym {
    TrivialAxisym { planar, center }
}

impl AxisymmetricField for TrivialAxisym {
    fn cylindrical<S: Scalar>(&self, rho: S, z: S) -> Result<Cylindrical<S>, MetricError> {
        // Only value and first derivatives are needed, and the shift is a
        // translation, so the jet of the planar metric carries over exactly.
        let p = [rho.value() - self.center[0], z.value() - self.center[1]];
        let jet = self.planar.eval_jet(&p)?;
        let lift = |d: Dual<2>| {
            let drho = rho - rho.value();
            let dz = z - z.value();
            drho * d.eps[0] + dz * d.eps[1] + d.re
        };
        let zero = S::constant(0.0);
        Ok(Cylindrical {
            tt: lift(jet.tt()),
            t_rho: lift(jet.ts(0)),
            t_phi: zero,
            t_z: lift(jet.ts(1)),
            rho_rho: lift(jet.ss(0, 0)),
            rho_phi: zero,
            rho_z: lift(jet.ss(0, 1)),
            phi_phi: -(rho * rho).recip(),
            phi_z: zero,
            z_z: lift(jet.ss(1, 1)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AxisymError {
    #[error("spin |a| = {a} must be below m = {m} for two distinct surfaces")]
    SpinOutOfRange { m: f64, a: f64 },
    #[error("a = 0: the inner surface collapses onto the singularity")]
    ZeroSpin,
    #[error("ray at ψ = {psi}: expected two roots of Δ₁, found {found}")]
    RootCount { psi: f64, found: usize },
    #[error("need at least 16 samples, got {0}")]
    TooFewSamples(usize),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// One traced surface `Δ₁ = 0`, closed by mirroring across the axis.
#[derive(Debug, Clone, Serialize)]
pub struct KerrSurface {
    /// Boyer–Lindquist radius of the surface.
    pub r: f64,
    pub semi_axis_rho: f64,
    pub semi_axis_z: f64,
    /// Closed polyline; the first half has `ρ > 0`.
    pub points: Vec<[f64; 2]>,
    /// Largest `|F|/|∇F|` against the ellipse `F = ρ²/(r²+a²) + z²/r² − 1`.
    pub max_ellipse_deviation: f64,
    pub max_abs_delta: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KerrSurfaces {
    pub m: f64,
    pub a: f64,
    pub outer: KerrSurface,
    pub inner: KerrSurface,
}

/// Traces both zero sets of the restricted Kerr determinant.
///
/// Rays leave the origin at `ψ ∈ (−π/2, π/2)`, offset by half a step so the
/// equatorial plane (where the singular disk lives) is never sampled.
pub fn kerr_ergosurfaces(m: f64, a: f64, n_samples: usize) -> Result<KerrSurfaces, AxisymError> {
    if n_samples < 16 {
        return Err(AxisymError::TooFewSamples(n_samples));
    }
    if !(m > 0.0) || !(a.abs() < m) {
        return Err(AxisymError::SpinOutOfRange { m, a });
    }
    if a == 0.0 {
        return Err(AxisymError::ZeroSpin);
    }
    let metric = crate::metric::builtin::kerr_restricted(m, a)?;
    let (r_plus, r_minus) = kerr_radii(m, a).expect("checked |a| < m");
    let s_max = 1.5 * (r_plus * r_plus + a * a).sqrt();
    let s_min = 1e-6 * r_minus;
    const SCAN: usize = 2000;

    let roots: Vec<[[f64; 2]; 2]> = (0..n_samples)
        .into_par_iter()
        .map(|k| {
            let psi = -PI / 2.0 + (k as f64 + 0.5) * PI / n_samples as f64;
            let (c, s) = (psi.cos(), psi.sin());
            let at = |t: f64| [(t * c).max(AXIS_CLAMP), t * s];
            let delta = |t: f64| metric.spatial_det(&at(t)).unwrap_or(f64::NAN);
            let ratio = (s_max / s_min).powf(1.0 / (SCAN - 1) as f64);
            let mut found = Vec::new();
            let mut t_prev = s_min;
            let mut d_prev = delta(t_prev);
            for i in 1..SCAN {
                let t = s_min * ratio.powi(i as i32);
                let d = delta(t);
                if d.is_finite() && d_prev.is_finite() && d.signum() != d_prev.signum() {
                    let span = t - t_prev;
                    found.push(brent(delta, t_prev, t, 1e-15 * span.max(t))?);
                }
                t_prev = t;
                d_prev = d;
            }
            if found.len() != 2 {
                return Err(AxisymError::RootCount {
                    psi,
                    found: found.len(),
                });
            }
            Ok([at(found[1]), at(found[0])])
        })
        .collect::<Result<_, _>>()?;

    let surface = |idx: usize, r: f64| -> Result<KerrSurface, AxisymError> {
        let half: Vec<[f64; 2]> = roots.iter().map(|p| p[idx]).collect();
        let mut points = half.clone();
        points.extend(half.iter().rev().map(|p| [-p[0], p[1]]));
        let (ar, az) = ((r * r + a * a).sqrt(), r);
        let mut max_dev = 0.0f64;
        let mut max_delta = 0.0f64;
        for p in &half {
            let f = (p[0] / ar).powi(2) + (p[1] / az).powi(2) - 1.0;
            let grad = (2.0 * p[0] / (ar * ar)).hypot(2.0 * p[1] / (az * az));
            max_dev = max_dev.max(f.abs() / grad);
            max_delta = max_delta.max(metric.spatial_det(p)?.abs());
        }
        Ok(KerrSurface {
            r,
            semi_axis_rho: ar,
            semi_axis_z: az,
            points,
            max_ellipse_deviation: max_dev,
            max_abs_delta: max_delta,
        })
    };
    Ok(KerrSurfaces {
        m,
        a,
        outer: surface(0, r_plus)?,
        inner: surface(1, r_minus)?,
    })
}

/// Characteristic test of a traced zero set of `Δ`.
#[derive(Debug, Clone, Serialize)]
pub struct CharacteristicReport {
    /// Per sample: `|∇Δᵀ G ∇Δ| / (|∇Δ|² ‖G‖)`.
    pub normalized: Vec<f64>,
    pub max_normalized: f64,
    /// Per sample: `g^{0·} · ν_out` with `ν_out` the unit normal pointing
    /// away from `center`.
    pub orient: Vec<f64>,
    pub orientation: Orientation,
}

/// Evaluates the characteristic form on samples of a closed zero set that is
/// star-shaped about `center`.
///
/// Orientation uses the outward normal of the enclosed region rather than
/// `∇Δ` itself, so nested surfaces where `Δ` changes sign in opposite senses
/// are labelled consistently.
pub fn verify_characteristic(
    m2: &SpacetimeMetric<2>,
    samples: &[[f64; 2]],
    center: [f64; 2],
) -> Result<CharacteristicReport, MetricError> {
    let mut normalized = Vec::with_capacity(samples.len());
    let mut orient = Vec::with_capacity(samples.len());
    for p in samples {
        let p = [p[0].signum() * p[0].abs().max(AXIS_CLAMP), p[1]];
        let jet = m2.eval_jet(&p)?;
        let g = jet.values();
        let d = jet.spatial_det();
        let grad = d.eps;
        let gn2 = grad[0] * grad[0] + grad[1] * grad[1];
        let form = g.spatial_form(&grad);
        normalized.push(form.abs() / (gn2 * sym2_norm(&g.spatial())));
        let out = [p[0] - center[0], p[1] - center[1]];
        let sign = if grad[0] * out[0] + grad[1] * out[1] >= 0.0 { 1.0 } else { -1.0 };
        let nu = [sign * grad[0] / gn2.sqrt(), sign * grad[1] / gn2.sqrt()];
        orient.push(g.ts(0) * nu[0] + g.ts(1) * nu[1]);
    }
    let max_normalized = normalized.iter().cloned().fold(0.0, f64::max);
    let orientation = Orientation::from_values(&orient);
    Ok(CharacteristicReport {
        normalized,
        max_normalized,
        orient,
        orientation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::builtin::{kerr_restricted, schwarzschild_equatorial};
    use approx::assert_relative_eq;

    #[test]
    fn kerr_r_special_cases() {
        let a = 0.5;
        assert_relative_eq!(kerr_r(2.0, 0.0, a).unwrap(), (4.0f64 - 0.25).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(kerr_r(0.0, -1.5, a).unwrap(), 1.5, epsilon = 1e-15);
        assert_relative_eq!(kerr_r(3.0, 4.0, 0.0).unwrap(), 5.0, epsilon = 1e-15);
        assert!(kerr_r(0.0, 0.0, a).is_err());
    }

    #[test]
    fn kerr_r_satisfies_ellipse_equation() {
        let a: f64 = 0.7;
        for &(rho, z) in &[(0.1, 0.01), (0.3, -0.2), (2.0, 1e-9), (5.0, 3.0), (0.69, 1e-4)] {
            let r: f64 = kerr_r(rho, z, a).unwrap();
            let res = rho * rho / (r * r + a * a) + z * z / (r * r) - 1.0;
            assert!(res.abs() < 1e-12, "({rho}, {z}): {res}");
        }
    }

    #[test]
    fn radii() {
        let (p, m) = kerr_radii(1.0, 0.5).unwrap();
        assert_relative_eq!(p, 1.8660254037844386, epsilon = 1e-15);
        assert_relative_eq!(m, 0.1339745962155614, epsilon = 1e-15);
        assert_eq!(kerr_radii(1.0, 1.0), Some((1.0, 1.0)));
        assert_eq!(kerr_radii(1.0, 1.1), None);
    }

    #[test]
    fn restricted_determinant_factorizes() {
        let (m, a) = (1.0, 0.5);
        let metric = kerr_restricted(m, a).unwrap();
        let (rp, rm) = kerr_radii(m, a).unwrap();
        for &(rho, z) in &[(2.0, 0.3), (0.4, 0.1), (1.0, -1.2), (0.05, 0.05)] {
            let r = kerr_r(rho, z, a).unwrap();
            let expect = (r - rp) * (r - rm) / (r * r + a * a);
            assert_relative_eq!(metric.spatial_det(&[rho, z]).unwrap(), expect, epsilon = 1e-13);
        }
    }

    #[test]
    fn zero_spin_is_equatorial_schwarzschild() {
        let k = kerr_restricted(1.0, 0.0).unwrap();
        let s = schwarzschild_equatorial(1.0).unwrap();
        for p in [[3.0, 0.0], [1.5, 0.0], [2.5, 0.7]] {
            let gk = k.eval_inverse_metric(&p).unwrap();
            let gs = s.eval_inverse_metric(&p).unwrap();
            for j in 0..3 {
                for l in 0..3 {
                    assert_relative_eq!(gk.get(j, l), gs.get(j, l), epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn restriction_is_the_meridional_minor() {
        let field = KerrAxisym { m: 1.0, a: 0.5 };
        let metric = restrict(field, Provenance::builtin("kerr", []));
        let b = spatial_block(&field, 1.3, 0.4).unwrap();
        let minor = b[0][0] * b[2][2] - b[0][2] * b[2][0];
        assert_relative_eq!(metric.spatial_det(&[1.3, 0.4]).unwrap(), minor, epsilon = 1e-15);
    }

    #[test]
    fn surfaces_are_ellipses() {
        let s = kerr_ergosurfaces(1.0, 0.5, 64).unwrap();
        assert!(s.outer.max_ellipse_deviation < 1e-4);
        assert!(s.inner.max_ellipse_deviation < 1e-4);
        assert_eq!(s.outer.points.len(), 128);
        assert!(matches!(kerr_ergosurfaces(1.0, 1.0, 64), Err(AxisymError::SpinOutOfRange { .. })));
        assert!(matches!(kerr_ergosurfaces(1.0, 0.0, 64), Err(AxisymError::ZeroSpin)));
    }
}
