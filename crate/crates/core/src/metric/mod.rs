//! Stationary inverse metrics `g^{jk}(x)` with exact first derivatives.
//!
//! Index 0 is time; indices `1..=N` are the spatial coordinates. Components
//! depend on the spatial point only. Every evaluator is written once against
//! [`Scalar`] and run either on `f64` (values) or on [`Dual`] (values plus
//! the full spatial gradient).

pub mod builtin;
pub mod config;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::dual::{Dual, Scalar};

/// A spatial point. The time coordinate is carried separately where needed.
pub type Point<const N: usize> = [f64; N];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("singular point {point:?}: {reason}")]
    Singular { point: Vec<f64>, reason: String },
    #[error("g^00 = {value} is not positive at {point:?}")]
    NonPositiveTime { point: Vec<f64>, value: f64 },
    #[error("non-finite metric component at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("invalid metric parameter: {0}")]
    Parameter(String),
}

impl MetricError {
    pub(crate) fn singular(point: &[f64], reason: impl Into<String>) -> Self {
        MetricError::Singular {
            point: point.to_vec(),
            reason: reason.into(),
        }
    }
}

/// The `(N+1)×(N+1)` symmetric inverse metric at one point.
///
/// Only the time entry, the time-space row and the upper spatial triangle
/// are ever supplied; the lower triangle is mirrored on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Components<S, const N: usize> {
    tt: S,
    ts: [S; N],
    ss: [[S; N]; N],
}

impl<S: Scalar, const N: usize> Components<S, N> {
    /// `upper(j, k)` is only called with `j <= k`.
    pub fn from_upper(tt: S, ts: [S; N], upper: impl Fn(usize, usize) -> S) -> Self {
        let mut ss = [[S::constant(0.0); N]; N];
        for j in 0..N {
            for k in j..N {
                let v = upper(j, k);
                ss[j][k] = v;
                ss[k][j] = v;
            }
        }
        Components { tt, ts, ss }
    }

    /// `g^{00}`.
    pub fn tt(&self) -> S {
        self.tt
    }

    /// `g^{0j}` for spatial index `j` in `0..N`.
    pub fn ts(&self, j: usize) -> S {
        self.ts[j]
    }

    pub fn ts_row(&self) -> [S; N] {
        self.ts
    }

    /// `g^{jk}` for spatial indices in `0..N`.
    pub fn ss(&self, j: usize, k: usize) -> S {
        self.ss[j][k]
    }

    pub fn spatial(&self) -> [[S; N]; N] {
        self.ss
    }

    /// Entry `(j, k)` of the full matrix, `0..=N` with 0 the time index.
    pub fn get(&self, j: usize, k: usize) -> S {
        match (j, k) {
            (0, 0) => self.tt,
            (0, k) => self.ts[k - 1],
            (j, 0) => self.ts[j - 1],
            (j, k) => self.ss[j - 1][k - 1],
        }
    }

    /// `Δ = det[g^{jk}]_{j,k≥1}`.
    pub fn spatial_det(&self) -> S {
        det(&self.ss)
    }

    /// Spatial quadratic form `Σ g^{jk} v_j v_k`.
    pub fn spatial_form(&self, v: &[f64; N]) -> S {
        let mut acc = S::constant(0.0);
        for j in 0..N {
            for k in 0..N {
                acc = acc + self.ss[j][k] * (v[j] * v[k]);
            }
        }
        acc
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(S) -> T) -> Components<T, N> {
        Components {
            tt: f(self.tt),
            ts: self.ts.map(&f),
            ss: self.ss.map(|row| row.map(&f)),
        }
    }
}

impl<const N: usize> Components<f64, N> {
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..=N)
            .map(|j| (0..=N).map(|k| self.get(j, k)).collect())
            .collect()
    }
}

impl<const N: usize> Components<Dual<N>, N> {
    pub fn values(&self) -> Components<f64, N> {
        self.map(|d| d.re)
    }

    /// `∂g^{jk}/∂x_l` for full indices `j, k` in `0..=N` and spatial `l`.
    pub fn partial(&self, j: usize, k: usize, l: usize) -> f64 {
        self.get(j, k).eps[l]
    }
}

/// Determinant for the spatial dimensions this crate supports.
pub fn det<S: Scalar, const N: usize>(m: &[[S; N]; N]) -> S {
    match N {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => panic!("spatial dimension {N} is not supported"),
    }
}

/// Eigenvalues `(λ_max, λ_min)` of a symmetric 2×2 matrix.
pub fn sym2_eigenvalues(m: &[[f64; 2]; 2]) -> (f64, f64) {
    let mean = 0.5 * (m[0][0] + m[1][1]);
    let half_diff = 0.5 * (m[0][0] - m[1][1]);
    let rad = half_diff.hypot(m[0][1]);
    (mean + rad, mean - rad)
}

/// Unit eigenvector of a symmetric 2×2 matrix for eigenvalue `lambda`.
pub fn sym2_eigenvector(m: &[[f64; 2]; 2], lambda: f64) -> [f64; 2] {
    // Rows of (M - λI) are orthogonal to the eigenvector; use the larger one.
    let r0 = [m[0][0] - lambda, m[0][1]];
    let r1 = [m[1][0], m[1][1] - lambda];
    let pick = if r0[0].hypot(r0[1]) >= r1[0].hypot(r1[1]) {
        r0
    } else {
        r1
    };
    let v = [-pick[1], pick[0]];
    let n = v[0].hypot(v[1]);
    if n == 0.0 {
        [1.0, 0.0]
    } else {
        [v[0] / n, v[1] / n]
    }
}

/// Spectral norm of a symmetric 2×2 matrix.
pub fn sym2_norm(m: &[[f64; 2]; 2]) -> f64 {
    let (hi, lo) = sym2_eigenvalues(m);
    hi.abs().max(lo.abs())
}

/// Where a metric came from; carried into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Builtin {
        name: String,
        params: BTreeMap<String, f64>,
    },
    Config {
        kind: String,
    },
}

impl Provenance {
    pub fn builtin<'a>(name: &str, params: impl IntoIterator<Item = (&'a str, f64)>) -> Self {
        Provenance::Builtin {
            name: name.to_string(),
            params: params
                .into_iter()
                .map(|(k, v)| (k.to_string(), v))
                .collect(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Provenance::Builtin { name, .. } => name,
            Provenance::Config { kind } => kind,
        }
    }
}

/// A source of inverse-metric components.
///
/// `components` receives the point as dual numbers seeded with the identity,
/// so the returned duals carry `∂g^{jk}/∂x_l`. `values` is the value-only
/// fast path; the default goes through the dual evaluation.
pub trait MetricField<const N: usize>: Send + Sync + fmt::Debug {
    fn components(&self, x: &[Dual<N>; N]) -> Result<Components<Dual<N>, N>, MetricError>;

    fn values(&self, x: &Point<N>) -> Result<Components<f64, N>, MetricError> {
        Ok(self.components(&Dual::seed(x))?.values())
    }
}

/// A stationary Lorentzian inverse metric in `N` spatial dimensions.
///
/// Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct SpacetimeMetric<const N: usize> {
    field: Arc<dyn MetricField<N>>,
    provenance: Provenance,
}

impl<const N: usize> fmt::Debug for SpacetimeMetric<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpacetimeMetric")
            .field("n", &N)
            .field("provenance", &self.provenance)
            .field("field", &self.field)
            .finish()
    }
}

impl<const N: usize> SpacetimeMetric<N> {
    pub fn new(field: impl MetricField<N> + 'static, provenance: Provenance) -> Self {
        assert!((1..=3).contains(&N), "spatial dimension must be 1, 2 or 3");
        SpacetimeMetric {
            field: Arc::new(field),
            provenance,
        }
    }

    pub fn dim(&self) -> usize {
        N
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Symmetric `(N+1)×(N+1)` inverse metric with `g^{00} > 0`.
    pub fn eval_inverse_metric(&self, p: &Point<N>) -> Result<Components<f64, N>, MetricError> {
        let c = self.field.values(p)?;
        check(p, &c, |v| *v)?;
        Ok(c)
    }

    /// Components with exact first derivatives.
    pub fn eval_jet(&self, p: &Point<N>) -> Result<Components<Dual<N>, N>, MetricError> {
        let c = self.field.components(&Dual::seed(p))?;
        check(p, &c, |d| d.re)?;
        if c.ss.iter().flatten().chain(c.ts.iter()).chain([&c.tt]).any(|d| d.eps.iter().any(|e| !e.is_finite())) {
            return Err(MetricError::NonFinite { point: p.to_vec() });
        }
        Ok(c)
    }

    /// `grad[l]` is the matrix `∂g^{jk}/∂x_l` (full indices `0..=N`).
    pub fn eval_metric_gradient(&self, p: &Point<N>) -> Result<Vec<Vec<Vec<f64>>>, MetricError> {
        let jet = self.eval_jet(p)?;
        Ok((0..N)
            .map(|l| {
                (0..=N)
                    .map(|j| (0..=N).map(|k| jet.partial(j, k, l)).collect())
                    .collect()
            })
            .collect())
    }

    /// `Δ(x) = det[g^{jk}(x)]_{j,k=1..N}`; negative inside the ergoregion.
    pub fn spatial_det(&self, p: &Point<N>) -> Result<f64, MetricError> {
        Ok(self.eval_inverse_metric(p)?.spatial_det())
    }

    /// `Δ` together with `∂Δ/∂x`.
    pub fn spatial_det_jet(&self, p: &Point<N>) -> Result<Dual<N>, MetricError> {
        Ok(self.eval_jet(p)?.spatial_det())
    }
}

fn check<S, const N: usize>(
    p: &Point<N>,
    c: &Components<S, N>,
    value: impl Fn(&S) -> f64,
) -> Result<(), MetricError> {
    let finite = std::iter::once(&c.tt)
        .chain(c.ts.iter())
        .chain(c.ss.iter().flatten())
        .all(|s| value(s).is_finite());
    if !finite {
        return Err(MetricError::NonFinite { point: p.to_vec() });
    }
    let g00 = value(&c.tt);
    if g00 <= 0.0 {
        return Err(MetricError::NonPositiveTime {
            point: p.to_vec(),
            value: g00,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::builtin::minkowski;

    #[test]
    fn minkowski_matrix_and_gradient() {
        let m = minkowski::<2>();
        let g = m.eval_inverse_metric(&[0.3, -2.0]).unwrap();
        assert_eq!(
            g.to_rows(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, -1.0]
            ]
        );
        let grad = m.eval_metric_gradient(&[0.3, -2.0]).unwrap();
        assert!(grad.iter().flatten().flatten().all(|&v| v == 0.0));
        assert_eq!(m.spatial_det(&[5.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn symmetric_eigen_helpers() {
        let m = [[2.0, 1.0], [1.0, 2.0]];
        let (hi, lo) = sym2_eigenvalues(&m);
        assert!((hi - 3.0).abs() < 1e-15 && (lo - 1.0).abs() < 1e-15);
        let v = sym2_eigenvector(&m, hi);
        assert!((v[0].abs() - v[1].abs()).abs() < 1e-15);
        assert_eq!(sym2_norm(&[[-4.0, 0.0], [0.0, 1.0]]), 4.0);
    }

    #[test]
    fn three_by_three_determinant() {
        let m = [[2.0, 0.0, 1.0], [0.0, 3.0, 0.0], [1.0, 0.0, 1.0]];
        assert_eq!(det(&m), 3.0);
    }
}
