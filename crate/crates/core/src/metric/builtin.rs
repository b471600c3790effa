//! Built-in metrics: flat space, acoustic vortex, Schwarzschild, Gordon and Kerr, plus a user expression table.
//!
//! Acoustic metrics use unit density and sound speed throughout.

use crate::axisym::{self, KerrAxisym};
use crate::dual::{Dual, Scalar};
use crate::expr::Expr;

use super::{Components, MetricError, MetricField, Point, Provenance, SpacetimeMetric};

fn finite_param(name: &str, v: f64) -> Result<(), MetricError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(MetricError::Parameter(format!("{name} must be finite, got {v}")))
    }
}

fn positive_param(name: &str, v: f64) -> Result<(), MetricError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MetricError::Parameter(format!("{name} must be positive, got {v}")))
    }
}

fn point_of<S: Scalar, const N: usize>(x: &[S; N]) -> Vec<f64> {
    x.iter().map(Scalar::value).collect()
}

#[derive(Debug, Clone, Copy)]
struct Minkowski;

impl<const N: usize> MetricField<N> for Minkowski {
    fn components(&self, _x: &[Dual<N>; N]) -> Result<Components<Dual<N>, N>, MetricError> {
        Ok(minkowski_components())
    }

    fn values(&self, _x: &Point<N>) -> Result<Components<f64, N>, MetricError> {
        Ok(minkowski_components())
    }
}

fn minkowski_components<S: Scalar, const N: usize>() -> Components<S, N> {
    Components::from_upper(S::constant(1.0), [S::constant(0.0); N], |j, k| {
        S::constant(if j == k { -1.0 } else { 0.0 })
    })
}

/// Flat space, `diag(1, -1, …, -1)`.
pub fn minkowski<const N: usize>() -> SpacetimeMetric<N> {
    SpacetimeMetric::new(Minkowski, Provenance::builtin("minkowski", []))
}

/// Draining vortex with velocity `v = (A/r) r̂ + (B/r) φ̂`.
#[derive(Debug, Clone, Copy)]
pub struct AcousticVortex {
    pub a: f64,
    pub b: f64,
}

impl AcousticVortex {
    fn eval<S: Scalar>(&self, x: &[S; 2]) -> Result<Components<S, 2>, MetricError> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if !(r2.value() > 0.0) {
            return Err(MetricError::singular(&point_of(x), "vortex core r = 0"));
        }
        let v = [
            (x[0] * self.a - x[1] * self.b) / r2,
            (x[1] * self.a + x[0] * self.b) / r2,
        ];
        Ok(Components::from_upper(S::constant(1.0), v, |j, k| {
            let vv = v[j] * v[k];
            if j == k {
                vv - 1.0
            } else {
                vv
            }
        }))
    }
}

impl MetricField<2> for AcousticVortex {
    fn components(&self, x: &[Dual<2>; 2]) -> Result<Components<Dual<2>, 2>, MetricError> {
        self.eval(x)
    }

    fn values(&self, x: &Point<2>) -> Result<Components<f64, 2>, MetricError> {
        self.eval(x)
    }
}

/// Acoustic vortex; the ergosphere is `r = √(A²+B²)` and for `A < 0` the
/// black hole is `r < |A|`.
pub fn acoustic_vortex(a: f64, b: f64) -> Result<SpacetimeMetric<2>, MetricError> {
    finite_param("A", a)?;
    finite_param("B", b)?;
    Ok(SpacetimeMetric::new(
        AcousticVortex { a, b },
        Provenance::builtin("acoustic", [("A", a), ("B", b)]),
    ))
}

/// Kerr–Schild form `g^{jk} = η^{jk} + f k^j k^k` with `k = (1, -k_1, …)`.
fn kerr_schild<S: Scalar, const N: usize>(f: S, k: [S; N]) -> Components<S, N> {
    Components::from_upper(f + 1.0, k.map(|kj| -(f * kj)), |j, l| {
        let fk = f * k[j] * k[l];
        if j == l {
            fk - 1.0
        } else {
            fk
        }
    })
}

#[derive(Debug, Clone, Copy)]
struct SchwarzschildEquatorial {
    m: f64,
}

impl SchwarzschildEquatorial {
    fn eval<S: Scalar>(&self, x: &[S; 2]) -> Result<Components<S, 2>, MetricError> {
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        if !(r.value() > 0.0) {
            return Err(MetricError::singular(&point_of(x), "curvature singularity R = 0"));
        }
        let f = r.recip() * (2.0 * self.m);
        Ok(kerr_schild(f, [x[0] / r, x[1] / r]))
    }
}

impl MetricField<2> for SchwarzschildEquatorial {
    fn components(&self, x: &[Dual<2>; 2]) -> Result<Components<Dual<2>, 2>, MetricError> {
        self.eval(x)
    }

    fn values(&self, x: &Point<2>) -> Result<Components<f64, 2>, MetricError> {
        self.eval(x)
    }
}

/// Equatorial Schwarzschild in horizon-penetrating Cartesian coordinates;
/// `Δ = 1 − 2m/R`.
pub fn schwarzschild_equatorial(m: f64) -> Result<SpacetimeMetric<2>, MetricError> {
    positive_param("m", m)?;
    Ok(SpacetimeMetric::new(
        SchwarzschildEquatorial { m },
        Provenance::builtin("schwarzschild", [("m", m)]),
    ))
}

/// Planar Gordon metric for a flow `w(x)` in a medium of index `n(x)`.
#[derive(Debug, Clone)]
pub struct Gordon {
    pub w: [Expr; 2],
    pub index: Expr,
    pub c: f64,
}

impl Gordon {
    fn eval<S: Scalar>(&self, x: &[S; 2]) -> Result<Components<S, 2>, MetricError> {
        let w = [self.w[0].eval(x), self.w[1].eval(x)];
        let n = self.index.eval(x);
        let c2 = self.c * self.c;
        let w2 = w[0] * w[0] + w[1] * w[1];
        if !(w2.value() < c2) {
            return Err(MetricError::singular(&point_of(x), "flow speed |w| >= c"));
        }
        // β = (n² − 1) γ², γ² = 1 / (1 − |w|²/c²)
        let beta = (n * n - 1.0) / (w2 / -c2 + 1.0);
        Ok(Components::from_upper(
            beta + 1.0,
            w.map(|wj| beta * wj / self.c),
            |j, k| {
                let b = beta * w[j] * w[k] / c2;
                if j == k {
                    b - 1.0
                } else {
                    b
                }
            },
        ))
    }
}

impl MetricField<2> for Gordon {
    fn components(&self, x: &[Dual<2>; 2]) -> Result<Components<Dual<2>, 2>, MetricError> {
        self.eval(x)
    }

    fn values(&self, x: &Point<2>) -> Result<Components<f64, 2>, MetricError> {
        self.eval(x)
    }
}

/// Gordon metric with user-supplied flow and refractive index.
pub fn gordon(w: [Expr; 2], index: Expr, c: f64) -> Result<SpacetimeMetric<2>, MetricError> {
    positive_param("c", c)?;
    Ok(SpacetimeMetric::new(
        Gordon { w, index, c },
        Provenance::builtin("gordon", [("c", c)]),
    ))
}

/// Gordon preset: radial inflow `w = −α x/r²` in a uniform medium.
///
/// The ergosphere is the circle `r = α n / c`; inside `r ≤ α/c` the flow is
/// superluminal and the metric is undefined.
pub fn gordon_radial(alpha: f64, n: f64, c: f64) -> Result<SpacetimeMetric<2>, MetricError> {
    positive_param("alpha", alpha)?;
    positive_param("c", c)?;
    if !(n.is_finite() && n > 1.0) {
        return Err(MetricError::Parameter(format!(
            "refractive index must exceed 1 for an ergoregion, got {n}"
        )));
    }
    let r2 = Expr::Add(
        Box::new(Expr::Pow(Box::new(Expr::Var(0)), 2)),
        Box::new(Expr::Pow(Box::new(Expr::Var(1)), 2)),
    );
    let wj = |j| {
        Expr::Div(
            Box::new(Expr::Mul(Box::new(Expr::Const(-alpha)), Box::new(Expr::Var(j)))),
            Box::new(r2.clone()),
        )
    };
    Ok(SpacetimeMetric::new(
        Gordon {
            w: [wj(0), wj(1)],
            index: Expr::Const(n),
            c,
        },
        Provenance::builtin("gordon_radial", [("alpha", alpha), ("n", n), ("c", c)]),
    ))
}

/// Kerr restricted to `ξ_φ = 0`, in the meridional coordinates `(ρ, z)`.
pub fn kerr_restricted(m: f64, a: f64) -> Result<SpacetimeMetric<2>, MetricError> {
    positive_param("m", m)?;
    finite_param("a", a)?;
    Ok(axisym::restrict(
        KerrAxisym { m, a },
        Provenance::builtin("kerr", [("m", m), ("a", a)]),
    ))
}

#[derive(Debug, Clone, Copy)]
struct KerrSchild3 {
    m: f64,
    a: f64,
}

impl KerrSchild3 {
    fn eval<S: Scalar>(&self, x: &[S; 3]) -> Result<Components<S, 3>, MetricError> {
        let a = self.a;
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let z = x[2];
        let r = axisym::kerr_r_scalar(rho2, z, a);
        if !(r.value() > 0.0) {
            return Err(MetricError::singular(&point_of(x), "ring singularity"));
        }
        let r2 = r * r;
        let f = r2 * r * (2.0 * self.m) / (r2 * r2 + z * z * (a * a));
        let q = (r2 + a * a).recip();
        let k = [
            (r * x[0] + x[1] * a) * q,
            (r * x[1] - x[0] * a) * q,
            z / r,
        ];
        Ok(kerr_schild(f, k))
    }
}

impl MetricField<3> for KerrSchild3 {
    fn components(&self, x: &[Dual<3>; 3]) -> Result<Components<Dual<3>, 3>, MetricError> {
        self.eval(x)
    }

    fn values(&self, x: &Point<3>) -> Result<Components<f64, 3>, MetricError> {
        self.eval(x)
    }
}

/// Full Kerr in Cartesian Kerr–Schild coordinates, spin along `z`.
pub fn kerr_schild_3d(m: f64, a: f64) -> Result<SpacetimeMetric<3>, MetricError> {
    positive_param("m", m)?;
    finite_param("a", a)?;
    Ok(SpacetimeMetric::new(
        KerrSchild3 { m, a },
        Provenance::builtin("kerr_schild_3d", [("m", m), ("a", a)]),
    ))
}

/// Inverse metric given as an upper-triangular table of expressions.
#[derive(Debug, Clone)]
pub struct ExprMetric<const N: usize> {
    pub tt: Expr,
    pub ts: [Expr; N],
    /// Row-major upper triangle of the spatial block, `(1,1), (1,2), …`.
    pub ss: Vec<Expr>,
}

impl<const N: usize> ExprMetric<N> {
    fn upper_index(j: usize, k: usize) -> usize {
        // row i of the upper triangle holds N - i entries
        j * N - j * j.saturating_sub(1) / 2 + (k - j)
    }

    fn eval<S: Scalar>(&self, x: &[S; N]) -> Components<S, N> {
        Components::from_upper(
            self.tt.eval(x),
            std::array::from_fn(|j| self.ts[j].eval(x)),
            |j, k| self.ss[Self::upper_index(j, k)].eval(x),
        )
    }
}

impl<const N: usize> MetricField<N> for ExprMetric<N> {
    fn components(&self, x: &[Dual<N>; N]) -> Result<Components<Dual<N>, N>, MetricError> {
        Ok(self.eval(x))
    }

    fn values(&self, x: &Point<N>) -> Result<Components<f64, N>, MetricError> {
        Ok(self.eval(x))
    }
}
