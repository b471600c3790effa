//! Collar coordinates, characteristic functions and the half-plane map.
//!
//! The chart covers the strip `Π` between the ergosphere and the horizon
//! with coordinates `(ρ, θ)`: `ρ = −Δ(x)` and `θ` is an orientation-fixed
//! arclength parameter of the ergosphere, carried inward along rays from the
//! seed. In these coordinates the spatial form becomes `ĝ = J G Jᵀ` and the
//! characteristic equation `ĝ^{ρρ}S_ρ² + 2ĝ^{ρθ}S_ρS_θ + ĝ^{θθ}S_θ² = 0`
//! factors into the transport equations `S_ρ = μ± S_θ` with
//! `μ± = (−ĝ^{ρθ} ± √(−Δ̃))/ĝ^{ρρ}`. Level curves of `S±` solve
//! `dθ/dρ = −μ±` and carry the label `S±(0, θ₀) = θ₀`.
//!
//! Because `√(−Δ̃)` vanishes like `√ρ` at the ergosphere, level curves are
//! integrated in `u = √ρ`, where `dθ/du = −2u μ±(u², θ)` is smooth up to
//! `u = 0`.

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ergosphere::{Classification, ErgoError, ErgosphereCurve};
use crate::geodesics::{flow, Direction, Family, FlowOptions, GeoError, GeodesicState};
use crate::horizon::Horizon;
use crate::metric::{MetricError, SpacetimeMetric};
use crate::ode::{integrate, Control, Options, Outcome};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CharError {
    #[error("collar coordinates need a non-characteristic ergosphere, got {0:?}")]
    Classification(Classification),
    #[error("transversals cross or fold at ρ = {rho}, θ = {theta}: reduce the depth")]
    TransversalCrossing { rho: f64, theta: f64 },
    #[error("no point with ρ = {rho} on the transversal at angle {phi}")]
    RadialSolve { phi: f64, rho: f64 },
    #[error("ĝ^ρρ = 0: the coordinate line is characteristic here")]
    CoordinateAligned,
    #[error("Δ̃ = {delta_tilde} > 0: the point is outside the ergoregion")]
    OutsideErgoregion { delta_tilde: f64 },
    #[error("level curve from θ₀ = {theta0} failed: {reason}")]
    LevelCurve { theta0: f64, reason: String },
    #[error("level curves of one family cross at row ρ = {rho}; increase the launch density")]
    LevelCurvesCrossed { rho: f64 },
    #[error(transparent)]
    Ergo(#[from] ErgoError),
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// The two factors of the characteristic quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CharFamily {
    Plus,
    Minus,
}

impl CharFamily {
    pub fn sign(self) -> f64 {
        match self {
            CharFamily::Plus => 1.0,
            CharFamily::Minus => -1.0,
        }
    }
}

const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> (f64, f64) {
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let v = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dv = (6.0 * s * s - 6.0 * s) * (y0 - y1) / h
        + (3.0 * s * s - 4.0 * s + 1.0) * d0
        + (3.0 * s * s - 2.0 * s) * d1;
    (v, dv)
}

/// The spatial inverse metric and time row in collar coordinates.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PulledBackMetric {
    pub rho: f64,
    pub theta: f64,
    pub x: [f64; 2],
    pub g00: f64,
    /// `(ĝ^{0ρ}, ĝ^{0θ})`.
    pub g0: [f64; 2],
    pub g_rho_rho: f64,
    pub g_rho_theta: f64,
    pub g_theta_theta: f64,
    /// `det ∂(ρ, θ)/∂x`.
    pub det_j: f64,
    pub delta_tilde: f64,
}

impl PulledBackMetric {
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [
            [self.g_rho_rho, self.g_rho_theta],
            [self.g_rho_theta, self.g_theta_theta],
        ]
    }
}

/// Roots `μ` of `a μ² + 2 r μ + c = 0` labelled by the sign in front of
/// `s = √(r² − ac)`, evaluated without cancellation.
fn signed_roots(a: f64, r: f64, c: f64, s: f64) -> Result<(f64, f64), CharError> {
    if a == 0.0 || !a.is_finite() {
        return Err(CharError::CoordinateAligned);
    }
    let q = -(r + r.signum() * s);
    if q == 0.0 {
        return Ok((0.0, 0.0));
    }
    let (m1, m2) = (q / a, c / q);
    Ok(if r.is_sign_negative() { (m1, m2) } else { (m2, m1) })
}

/// `(μ⁺, μ⁻) = (−ĝ^{ρθ} ± √(−Δ̃))/ĝ^{ρρ}` for a symmetric `ĝ` with
/// `Δ̃ = det ĝ ≤ 0`.
pub fn mu_pm(g: &[[f64; 2]; 2]) -> Result<(f64, f64), CharError> {
    let (a, r, c) = (g[0][0], g[0][1], g[1][1]);
    let dt = a * c - r * r;
    // rounding at the ergosphere itself
    if dt > 1e-14 * (a * c).abs().max(r * r) {
        return Err(CharError::OutsideErgoregion { delta_tilde: dt });
    }
    signed_roots(a, r, c, (-dt).max(0.0).sqrt())
}

/// Collar chart of the strip between an ergosphere and the seed.
#[derive(Debug, Clone)]
pub struct CollarChart {
    metric: SpacetimeMetric<2>,
    seed: [f64; 2],
    sigma: f64,
    depth: f64,
    /// Ray angles `φ_k`, closed with `2π`.
    phi: Vec<f64>,
    r: Vec<f64>,
    dr: Vec<f64>,
    big: Vec<f64>,
    dbig: Vec<f64>,
}

impl CollarChart {
    pub fn metric(&self) -> &SpacetimeMetric<2> {
        &self.metric
    }

    pub fn seed(&self) -> [f64; 2] {
        self.seed
    }

    /// `+1` if `θ` increases counter-clockwise about the seed.
    pub fn orientation(&self) -> f64 {
        self.sigma
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    fn segment(&self, phi: f64) -> (usize, f64) {
        let n = self.phi.len() - 1;
        let p = phi.rem_euclid(TAU);
        let k = (self.phi.partition_point(|&t| t <= p).max(1) - 1).min(n - 1);
        (k, (p - self.phi[k]) / (self.phi[k + 1] - self.phi[k]))
    }

    /// Interpolated ergosphere radius about the seed and its derivative.
    pub fn boundary_radius(&self, phi: f64) -> (f64, f64) {
        let (k, s) = self.segment(phi);
        let h = self.phi[k + 1] - self.phi[k];
        hermite(self.r[k], self.dr[k], self.r[k + 1], self.dr[k + 1], h, s)
    }

    /// Normalized arclength `Θ(φ) ∈ [0, 2π)` and `Θ'(φ)`.
    fn big_theta(&self, phi: f64) -> (f64, f64) {
        let (k, s) = self.segment(phi);
        let h = self.phi[k + 1] - self.phi[k];
        hermite(self.big[k], self.dbig[k], self.big[k + 1], self.dbig[k + 1], h, s)
    }

    fn big_theta_inv(&self, t: f64) -> f64 {
        let t = t.rem_euclid(TAU);
        let n = self.big.len() - 1;
        let k = (self.big.partition_point(|&b| b <= t).max(1) - 1).min(n - 1);
        let (mut lo, mut hi) = (self.phi[k], self.phi[k + 1]);
        let mut p = lo + (hi - lo) * (t - self.big[k]) / (self.big[k + 1] - self.big[k]);
        for _ in 0..60 {
            let (v, dv) = self.big_theta(p.min(hi - 1e-300).max(lo));
            let f = v - t;
            if f > 0.0 {
                hi = p;
            } else {
                lo = p;
            }
            let next = p - f / dv;
            let next = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
            if (next - p).abs() <= 1e-16 * p.abs().max(1.0) {
                return next;
            }
            p = next;
        }
        p
    }

    /// `(ρ, θ)` of a point, `θ ∈ [0, 2π)`.
    pub fn inverse(&self, x: &[f64; 2]) -> Result<[f64; 2], CharError> {
        let rho = -self.metric.spatial_det(x)?;
        let phi = (x[1] - self.seed[1]).atan2(x[0] - self.seed[0]);
        Ok([rho, (self.sigma * self.big_theta(phi).0).rem_euclid(TAU)])
    }

    /// The point with coordinates `(ρ, θ)`; `θ` may be any real.
    pub fn forward(&self, rho: f64, theta: f64) -> Result<[f64; 2], CharError> {
        let phi = self.big_theta_inv(self.sigma * theta);
        let r = self.radial_solve(phi, rho)?;
        Ok([self.seed[0] + r * phi.cos(), self.seed[1] + r * phi.sin()])
    }

    /// Distance along the ray at angle `φ` where `−Δ = ρ`: Newton iteration
    /// safeguarded by bisection, treating points off the metric's domain as
    /// deep inside.
    fn radial_solve(&self, phi: f64, rho: f64) -> Result<f64, CharError> {
        let u = [phi.cos(), phi.sin()];
        let at = |r: f64| [self.seed[0] + r * u[0], self.seed[1] + r * u[1]];
        let fail = || CharError::RadialSolve { phi, rho };
        let (rb, _) = self.boundary_radius(phi);
        let (mut lo, mut hi) = (0.0, rb);
        let mut grow = 0;
        while self.metric.spatial_det(&at(hi)).map_or(true, |d| -d - rho > 0.0) {
            hi *= 1.01;
            grow += 1;
            if grow > 200 {
                return Err(fail());
            }
        }
        let mut r = hi;
        for _ in 0..200 {
            let step = match self.metric.spatial_det_jet(&at(r)) {
                Ok(d) => {
                    let f = -d.re - rho;
                    if f == 0.0 {
                        return Ok(r);
                    }
                    if f > 0.0 {
                        lo = r;
                    } else {
                        hi = r;
                    }
                    let df = -(d.eps[0] * u[0] + d.eps[1] * u[1]);
                    if df < 0.0 && df.is_finite() {
                        Some(r - f / df)
                    } else {
                        None
                    }
                }
                Err(_) => {
                    lo = r;
                    None
                }
            };
            let next = match step {
                Some(n) if n > lo && n < hi => n,
                _ => 0.5 * (lo + hi),
            };
            if (next - r).abs() <= 4.0 * f64::EPSILON * r.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            r = next;
        }
        Err(fail())
    }

    /// `J = ∂(ρ, θ)/∂x` and the inverse metric at a point.
    fn jacobian(&self, x: &[f64; 2]) -> Result<([[f64; 2]; 2], crate::metric::Components<f64, 2>), CharError> {
        let jet = self.metric.eval_jet(x)?;
        let dd = jet.spatial_det().eps;
        let g = jet.values();
        let (dx, dy) = (x[0] - self.seed[0], x[1] - self.seed[1]);
        let r2 = dx * dx + dy * dy;
        let (_, dbig) = self.big_theta(dy.atan2(dx));
        let k = self.sigma * dbig / r2;
        Ok(([[-dd[0], -dd[1]], [-dy * k, dx * k]], g))
    }

    /// `ĝ` at a point given in Cartesian coordinates.
    pub fn pulled_back_at(&self, x: &[f64; 2]) -> Result<PulledBackMetric, CharError> {
        let [rho, theta] = self.inverse(x)?;
        let (j, g) = self.jacobian(x)?;
        let s = g.spatial();
        let form = |a: [f64; 2], b: [f64; 2]| {
            a[0] * (s[0][0] * b[0] + s[0][1] * b[1]) + a[1] * (s[1][0] * b[0] + s[1][1] * b[1])
        };
        let (rr, rt, tt) = (form(j[0], j[0]), form(j[0], j[1]), form(j[1], j[1]));
        let g0 = g.ts_row();
        Ok(PulledBackMetric {
            rho,
            theta,
            x: *x,
            g00: g.tt(),
            g0: [
                j[0][0] * g0[0] + j[0][1] * g0[1],
                j[1][0] * g0[0] + j[1][1] * g0[1],
            ],
            g_rho_rho: rr,
            g_rho_theta: rt,
            g_theta_theta: tt,
            det_j: j[0][0] * j[1][1] - j[0][1] * j[1][0],
            delta_tilde: rr * tt - rt * rt,
        })
    }

    /// `ĝ` at chart coordinates `(ρ, θ)`.
    pub fn pulled_back(&self, rho: f64, theta: f64) -> Result<PulledBackMetric, CharError> {
        let x = self.forward(rho, theta)?;
        let mut pb = self.pulled_back_at(&x)?;
        pb.theta = theta;
        Ok(pb)
    }

    /// `dθ/du` along a level curve of `S±`, `ρ = u²`.
    fn level_slope(&self, family: CharFamily, u: f64, theta: f64) -> Result<f64, CharError> {
        let pb = self.pulled_back(u * u, theta)?;
        let s = pb.det_j.abs() * u;
        let (mp, mm) = signed_roots(pb.g_rho_rho, pb.g_rho_theta, pb.g_theta_theta, s)?;
        let mu = match family {
            CharFamily::Plus => mp,
            CharFamily::Minus => mm,
        };
        Ok(-2.0 * u * mu)
    }
}

/// Builds the collar chart on rays from the curve's seed and checks it on an
/// `n_rho × n_theta` grid of `0 ≤ ρ ≤ depth`.
pub fn build_collar(
    m: &SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    depth: f64,
    n_rho: usize,
    n_theta: usize,
) -> Result<CollarChart, CharError> {
    if curve.classification != Classification::NonCharacteristic {
        return Err(CharError::Classification(curve.classification));
    }
    let seed = curve.seed;
    let mut phi = Vec::with_capacity(curve.vertices.len() + 1);
    let mut r = Vec::with_capacity(phi.capacity());
    let mut dr = Vec::with_capacity(phi.capacity());
    for v in &curve.vertices {
        let (c, s) = (v.angle.cos(), v.angle.sin());
        let rad = (v.position[0] - seed[0]).hypot(v.position[1] - seed[1]);
        let g = v.delta_grad;
        phi.push(v.angle);
        r.push(rad);
        dr.push(-rad * (-g[0] * s + g[1] * c) / (g[0] * c + g[1] * s));
    }
    phi.push(phi[0] + TAU);
    r.push(r[0]);
    dr.push(dr[0]);
    let n = phi.len() - 1;
    let mut chart = CollarChart {
        metric: m.clone(),
        seed,
        sigma: 1.0,
        depth,
        phi,
        r,
        dr,
        big: vec![0.0; n + 1],
        dbig: vec![0.0; n + 1],
    };
    let speed = |c: &CollarChart, p: f64| {
        let (k, s) = c.segment(p);
        let h = c.phi[k + 1] - c.phi[k];
        let (rv, dv) = hermite(c.r[k], c.dr[k], c.r[k + 1], c.dr[k + 1], h, s);
        rv.hypot(dv)
    };
    let mut arc = vec![0.0; n + 1];
    for k in 0..n {
        let (a, b) = (chart.phi[k], chart.phi[k + 1]);
        let half = 0.5 * (b - a);
        // the last segment ends on 2π; evaluate it just inside
        let seg: f64 = GL_X
            .iter()
            .zip(GL_W)
            .map(|(x, w)| w * speed(&chart, (a + half * (1.0 + x)).min(TAU * (1.0 - 1e-16))))
            .sum();
        arc[k + 1] = arc[k] + half * seg;
    }
    let total = arc[n];
    for k in 0..=n {
        chart.big[k] = TAU * arc[k] / total;
        chart.dbig[k] = TAU * chart.r[k].hypot(chart.dr[k]) / total;
    }
    // the ergosphere starts at φ₀ = 0; shift so Θ(0) = 0 exactly
    let b0 = chart.big[0];
    chart.big.iter_mut().for_each(|b| *b -= b0);

    let x0 = curve.vertices[0].position;
    let pb = chart.pulled_back_at(&x0)?;
    let mu0 = -pb.g_rho_theta / pb.g_rho_rho;
    if pb.g0[0] * mu0 + pb.g0[1] < 0.0 {
        chart.sigma = -1.0;
    }

    let n_rho = n_rho.max(2);
    let mut sign = 0.0;
    for i in 0..=n_rho {
        let rho = depth * i as f64 / n_rho as f64;
        for j in 0..n_theta {
            let theta = TAU * j as f64 / n_theta as f64;
            let crossing = CharError::TransversalCrossing { rho, theta };
            let x = chart.forward(rho, theta).map_err(|_| crossing.clone())?;
            let phi = chart.big_theta_inv(chart.sigma * theta);
            let d = m.spatial_det_jet(&x)?;
            let radial = d.eps[0] * phi.cos() + d.eps[1] * phi.sin();
            let det = chart.pulled_back_at(&x)?.det_j;
            if !(radial > 0.0) || det == 0.0 || (sign != 0.0 && det.signum() != sign) {
                return Err(crossing);
            }
            sign = det.signum();
        }
    }
    Ok(chart)
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelCurve {
    pub family: CharFamily,
    pub theta0: f64,
    /// `(ρ, θ)` at every accepted step, `θ` on the universal cover.
    pub points: Vec<[f64; 2]>,
}

fn level_options() -> Options {
    Options {
        rtol: 1e-11,
        atol: 1e-12,
        h_min: 1e-14,
        ..Options::default()
    }
}

/// Integrates the level curve `S = θ₀` of one family from the ergosphere
/// to `ρ = rho_end`.
pub fn integrate_level_curve(
    chart: &CollarChart,
    theta0: f64,
    family: CharFamily,
    rho_end: f64,
) -> Result<LevelCurve, CharError> {
    let mut points = vec![[0.0, theta0]];
    let sol = integrate(
        |u, y: &[f64; 1]| chart.level_slope(family, u, y[0]).map(|d| [d]),
        0.0,
        [theta0],
        rho_end.sqrt(),
        &level_options(),
        |step| {
            points.push([step.t1 * step.t1, step.y1[0]]);
            Control::Continue
        },
    );
    match sol.outcome {
        Outcome::Completed => Ok(LevelCurve {
            family,
            theta0,
            points,
        }),
        o => Err(CharError::LevelCurve {
            theta0,
            reason: format!("{o:?}"),
        }),
    }
}

/// `θ` where the level curve from `θ₀` meets each `ρ` of `rows` (increasing,
/// starting at 0).
fn trace_rows(chart: &CollarChart, theta0: f64, family: CharFamily, rows: &[f64]) -> Result<Vec<f64>, CharError> {
    let us: Vec<f64> = rows.iter().map(|r| r.sqrt()).collect();
    let mut out = vec![theta0];
    let sol = integrate(
        |u, y: &[f64; 1]| chart.level_slope(family, u, y[0]).map(|d| [d]),
        0.0,
        [theta0],
        *us.last().unwrap(),
        &level_options(),
        |step| {
            while out.len() < us.len() && us[out.len()] <= step.t1 {
                out.push(step.interpolate(us[out.len()])[0]);
            }
            Control::Continue
        },
    );
    if out.len() < us.len() {
        if let Outcome::Completed = sol.outcome {
            out.push(sol.y[0]);
        } else {
            return Err(CharError::LevelCurve {
                theta0,
                reason: format!("{:?}", sol.outcome),
            });
        }
    }
    Ok(out)
}

/// `S±(ρ, θ)` by following the level curve through `(ρ, θ)` back to the
/// ergosphere. `θ` lives on the universal cover.
pub fn evaluate_s(chart: &CollarChart, family: CharFamily, rho: f64, theta: f64) -> Result<f64, CharError> {
    if rho <= 0.0 {
        return Ok(theta);
    }
    let sol = integrate(
        |u, y: &[f64; 1]| chart.level_slope(family, u, y[0]).map(|d| [d]),
        rho.sqrt(),
        [theta],
        0.0,
        &level_options(),
        |_| Control::Continue,
    );
    match sol.outcome {
        Outcome::Completed => Ok(sol.y[0]),
        o => Err(CharError::LevelCurve {
            theta0: theta,
            reason: format!("{o:?}"),
        }),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FieldOptions {
    pub n_rho: usize,
    pub n_theta: usize,
    /// Level curves launched per grid column.
    pub oversample: usize,
    /// Fraction of the smallest horizon depth used for the `C₁` fit.
    pub fit_fraction: f64,
}

impl Default for FieldOptions {
    fn default() -> Self {
        FieldOptions {
            n_rho: 256,
            n_theta: 256,
            oversample: 4,
            fit_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
    pub rho_max: f64,
}

/// Ordinary least squares.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    (slope, intercept, 1.0 - ss_res / syy)
}

/// `S±` on the grid `ρ_i = i·ρ₀_min/n_ρ`, `θ_j = 2πj/n_θ`.
#[derive(Debug, Clone, Serialize)]
pub struct CharField {
    pub rho: Vec<f64>,
    pub theta: Vec<f64>,
    /// Indexed `[i][j]`.
    pub s_plus: Vec<Vec<f64>>,
    pub s_minus: Vec<Vec<f64>>,
    pub delta_tilde: Vec<Vec<f64>>,
    /// Least-squares fit of `−Δ̃` against `ρ` near the ergosphere.
    pub c1: LinearFit,
    /// Smallest `ρ` on the horizon.
    pub rho0_min: f64,
    /// Largest `Δ̃` over rows with `ρ > 0` (must be negative).
    pub max_delta_tilde_interior: f64,
    /// Largest `|Δ̃|` on the `ρ = 0` row.
    pub max_delta_tilde_boundary: f64,
}

/// Periodic-equivariant resampling: given launch labels `labels` and their
/// positions `ends` on one row, returns the label at each of `targets`.
fn resample(labels: &[f64], ends: &[f64], targets: &[f64], rho: f64) -> Result<Vec<f64>, CharError> {
    let k = ends.len();
    for i in 0..k {
        let next = if i + 1 < k { ends[i + 1] } else { ends[0] + TAU };
        if !(next > ends[i]) {
            return Err(CharError::LevelCurvesCrossed { rho });
        }
    }
    // label − position is 2π-periodic in position
    let off = |i: isize| -> (f64, f64) {
        let w = i.div_euclid(k as isize);
        let r = i.rem_euclid(k as isize) as usize;
        (ends[r] + TAU * w as f64, labels[r] - ends[r])
    };
    Ok(targets
        .iter()
        .map(|&t| {
            let w = ((t - ends[0]) / TAU).floor();
            let tt = t - TAU * w;
            let i = (ends.partition_point(|&e| e <= tt).max(1) - 1) as isize;
            let (x0, f0) = off(i);
            let (x1, f1) = off(i + 1);
            let (xm, fm) = off(i - 1);
            let (xp, fp) = off(i + 2);
            let d0 = (f1 - fm) / (x1 - xm);
            let d1 = (fp - f0) / (xp - x0);
            let (f, _) = hermite(f0, d0, f1, d1, x1 - x0, (tt - x0) / (x1 - x0));
            t + f
        })
        .collect())
}

/// Launches `oversample·n_θ` level curves of each family and resamples their
/// labels onto the grid.
pub fn build_char_field(chart: &CollarChart, horizon: &Horizon, opts: &FieldOptions) -> Result<CharField, CharError> {
    let rho0_min = horizon
        .points
        .iter()
        .map(|p| chart.metric.spatial_det(p).map(|d| -d))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let rows: Vec<f64> = (0..opts.n_rho)
        .map(|i| rho0_min * i as f64 / opts.n_rho as f64)
        .collect();
    let theta: Vec<f64> = (0..opts.n_theta).map(|j| TAU * j as f64 / opts.n_theta as f64).collect();
    let k = opts.n_theta * opts.oversample.max(1);
    let labels: Vec<f64> = (0..k).map(|i| TAU * i as f64 / k as f64).collect();

    let field = |family: CharFamily| -> Result<Vec<Vec<f64>>, CharError> {
        let traces: Vec<Vec<f64>> = labels
            .par_iter()
            .map(|&t0| trace_rows(chart, t0, family, &rows))
            .collect::<Result<_, _>>()?;
        let mut grid = vec![theta.clone()];
        for (i, &rho) in rows.iter().enumerate().skip(1) {
            let ends: Vec<f64> = traces.iter().map(|t| t[i]).collect();
            grid.push(resample(&labels, &ends, &theta, rho)?);
        }
        Ok(grid)
    };
    let s_plus = field(CharFamily::Plus)?;
    let s_minus = field(CharFamily::Minus)?;

    let delta_tilde: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&rho| {
            theta
                .iter()
                .map(|&t| chart.pulled_back(rho, t).map(|pb| pb.delta_tilde))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<_, _>>()?;
    let max_delta_tilde_interior = delta_tilde[1..]
        .iter()
        .flatten()
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let max_delta_tilde_boundary = delta_tilde[0].iter().fold(0.0f64, |a, &b| a.max(b.abs()));

    let rho_max = opts.fit_fraction * rho0_min;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, &rho) in rows.iter().enumerate().skip(1) {
        if rho <= rho_max {
            for &d in &delta_tilde[i] {
                xs.push(rho);
                ys.push(-d);
            }
        }
    }
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    Ok(CharField {
        rho: rows,
        theta,
        s_plus,
        s_minus,
        delta_tilde,
        c1: LinearFit {
            slope,
            intercept,
            r_squared,
            points: xs.len(),
            rho_max,
        },
        rho0_min,
        max_delta_tilde_interior,
        max_delta_tilde_boundary,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FoldReport {
    pub pass: bool,
    /// Sign of the discrete Jacobian on unfolded cells.
    pub sign: f64,
    pub positive: usize,
    pub negative: usize,
    pub zero: usize,
    /// `(i, j)` of offending cells, at most 32.
    pub fold_cells: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonImage {
    pub rho: f64,
    pub y1_min: f64,
    pub y1_max: f64,
    pub y2_min: f64,
    pub y2_max: f64,
}

/// `y₁ = (S⁺ + S⁻)/2`, `y₂ = (S⁺ − S⁻)/2` on the field grid.
#[derive(Debug, Clone, Serialize)]
pub struct HalfPlaneMap {
    pub y1: Vec<Vec<f64>>,
    pub y2: Vec<Vec<f64>>,
    pub fold: FoldReport,
    /// Image of the grid row nearest the horizon.
    pub horizon_image: HorizonImage,
}

pub fn half_plane_map(field: &CharField) -> HalfPlaneMap {
    let zip = |f: fn(f64, f64) -> f64| -> Vec<Vec<f64>> {
        field
            .s_plus
            .iter()
            .zip(&field.s_minus)
            .map(|(p, m)| p.iter().zip(m).map(|(&a, &b)| f(a, b)).collect())
            .collect()
    };
    let y1 = zip(|a, b| 0.5 * (a + b));
    let y2 = zip(|a, b| 0.5 * (a - b));
    let (nr, nt) = (y1.len(), field.theta.len());
    let (mut pos, mut neg, mut zero) = (0, 0, 0);
    let mut dets = Vec::with_capacity(nr * nt);
    for i in 0..nr.saturating_sub(1) {
        for j in 0..nt {
            let (jn, shift) = if j + 1 < nt { (j + 1, 0.0) } else { (0, TAU) };
            let a = [y1[i + 1][j] - y1[i][j], y2[i + 1][j] - y2[i][j]];
            let b = [y1[i][jn] + shift - y1[i][j], y2[i][jn] - y2[i][j]];
            let d = a[0] * b[1] - a[1] * b[0];
            match d.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => pos += 1,
                Some(std::cmp::Ordering::Less) => neg += 1,
                _ => zero += 1,
            }
            dets.push((i, j, d));
        }
    }
    let sign = if pos >= neg { 1.0 } else { -1.0 };
    let fold_cells: Vec<[usize; 2]> = dets
        .iter()
        .filter(|(_, _, d)| !(d * sign > 0.0))
        .take(32)
        .map(|&(i, j, _)| [i, j])
        .collect();
    let last = nr - 1;
    let mm = |v: &[f64]| v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let (y1_min, y1_max) = mm(&y1[last]);
    let (y2_min, y2_max) = mm(&y2[last]);
    HalfPlaneMap {
        fold: FoldReport {
            pass: fold_cells.is_empty(),
            sign,
            positive: pos,
            negative: neg,
            zero,
            fold_cells,
        },
        horizon_image: HorizonImage {
            rho: field.rho[last],
            y1_min,
            y1_max,
            y2_min,
            y2_max,
        },
        y1,
        y2,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportReport {
    pub family: CharFamily,
    pub start: [f64; 2],
    pub s_start: f64,
    pub samples: usize,
    pub max_drift: f64,
    /// Time reached before leaving the band.
    pub time: f64,
}

/// Launches the zero-frequency null geodesic whose covector is `dS±` at
/// chart point `(ρ, θ)` and measures how much `S±` changes along it.
///
/// The ray is followed until `t_max` or until it leaves
/// `rho_band.0 < ρ < rho_band.1`.
pub fn transport_drift(
    chart: &CollarChart,
    family: CharFamily,
    start: [f64; 2],
    t_max: f64,
    rho_band: (f64, f64),
) -> Result<TransportReport, CharError> {
    let m = chart.metric();
    let x = chart.forward(start[0], start[1])?;
    let pb = chart.pulled_back_at(&x)?;
    let (mp, mm) = mu_pm(&pb.matrix())?;
    let mu = if family == CharFamily::Plus { mp } else { mm };
    let (j, g) = chart.jacobian(&x)?;
    let xi = [mu * j[0][0] + j[1][0], mu * j[0][1] + j[1][1]];
    let b = g.ts(0) * xi[0] + g.ts(1) * xi[1];
    let geo_family = if b > 0.0 { Family::Plus } else { Family::Minus };
    let init = GeodesicState {
        x0: 0.0,
        x,
        xi,
        family: geo_family,
    };
    let band = |p: &[f64; 2]| m.spatial_det(p).map_or(false, |d| -d > rho_band.0 && -d < rho_band.1);
    let opts = FlowOptions {
        domain: Some(&band),
        rtol: 1e-11,
        atol: 1e-13,
        ..FlowOptions::default()
    };
    let path = flow(m, &init, Direction::Forward, t_max, &opts)?;
    let s0 = evaluate_s(chart, family, start[0], start[1])?;
    let stride = (path.samples.len() / 24).max(1);
    let mut max_drift = 0.0f64;
    let mut samples = 0;
    for s in path.samples.iter().step_by(stride).chain(std::iter::once(path.last())) {
        if !band(&s.x) {
            continue;
        }
        let [rho, theta] = chart.inverse(&s.x)?;
        let v = evaluate_s(chart, family, rho, theta)?;
        let d = (v - s0 + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        max_drift = max_drift.max(d.abs());
        samples += 1;
    }
    Ok(TransportReport {
        family,
        start,
        s_start: s0,
        samples,
        max_drift,
        time: path.last().x0 - path.samples[0].x0,
    })
}
