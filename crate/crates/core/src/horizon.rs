//! The event horizon inside a non-characteristic ergosphere.
//!
//! Inside the ergoregion the spatial form `Σ g^{jk} ξ_j ξ_k` is indefinite
//! and has two null covector lines at every point. Zero-frequency rays
//! (`ξ₀ = 0`) moving along them are the projections of null geodesics, and
//! the horizon is the closed one among them: the `(−)` family spirals onto it
//! as `x₀ → −∞`. It is located as a fixed point of the Poincaré return map
//! on a ray ("section") leaving the ergosphere seed at angle `θ*`, with
//! section coordinate = distance from the seed.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::ergosphere::{ray_root, Classification, ErgoError, ErgosphereCurve, Orientation};
use crate::geodesics::{
    flow, flow_observed, solve_xi0, Direction, Family, FlowOptions, GeoError, GeodesicState,
    PhasePoint,
};
use crate::metric::{sym2_eigenvalues, sym2_eigenvector, MetricError, SpacetimeMetric};
use crate::ode::{locate_crossing, Control, Step};
use crate::roots::brent;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HorizonError {
    #[error("Schwarzschild-type: horizon = ergosphere")]
    SchwarzschildType,
    #[error("mixed ergosphere (partly characteristic) is not supported")]
    Mixed,
    #[error("trajectory from ρ = {rho} left the ergoregion before returning to the section")]
    ExitedErgoregion { rho: f64 },
    #[error("trajectory from ρ = {rho} entered the trapped core before returning to the section")]
    EnteredCore { rho: f64 },
    #[error("angle about the seed is not monotone along the trajectory from ρ = {rho}; choose another section")]
    NonMonotoneAngle { rho: f64 },
    #[error("trajectory from ρ = {rho} did not return within the time budget")]
    NoReturn { rho: f64 },
    #[error(
        "bracket [{lo}, {hi}] is invalid: return-map displacement {g_lo} / {g_hi} does not change sign; \
         widen or move the bracket inside (core, ergosphere)"
    )]
    BadBracket { lo: f64, hi: f64, g_lo: f64, g_hi: f64 },
    #[error("bracket [{lo}, {hi}] must lie inside ({core}, {ergo}) along the section")]
    BracketOutsideStrip { lo: f64, hi: f64, core: f64, ergo: f64 },
    #[error("fixed-point iteration failed: residual {residual} above tolerance {tol}")]
    NotConverged { residual: f64, tol: f64 },
    #[error("probe region straddles the ergosphere (Δ changes sign inside it)")]
    RegionStraddlesErgosphere,
    #[error(transparent)]
    Geo(#[from] GeoError),
    #[error(transparent)]
    Ergo(#[from] ErgoError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, Copy)]
pub struct HorizonOptions {
    pub section_angle: f64,
    /// Section distances bracketing the fixed point; default `(0.55, 0.97)`
    /// of the ergosphere radius on the section.
    pub bracket: Option<(f64, f64)>,
    /// Target `|P(ρ*) − ρ*|`.
    pub tol: f64,
    /// Angles at which the final cycle is sampled.
    pub n_samples: usize,
    /// Trajectories closer than this to the seed count as trapped; default
    /// half the smallest ergosphere radius.
    pub core_radius: Option<f64>,
    pub rtol: f64,
    pub atol: f64,
    /// Time budget for one revolution.
    pub max_time: f64,
    /// When positive, scan this many bracket subintervals for further fixed
    /// points.
    pub candidate_scan: usize,
}

impl Default for HorizonOptions {
    fn default() -> Self {
        HorizonOptions {
            section_angle: 0.0,
            bracket: None,
            tol: 1e-9,
            n_samples: 256,
            core_radius: None,
            rtol: 1e-11,
            atol: 1e-13,
            max_time: 1e3,
            candidate_scan: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnIterate {
    pub rho: f64,
    pub returned: f64,
    /// +1 for counter-clockwise winding about the seed, −1 otherwise.
    pub winding: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReturnMapRecord {
    pub section_angle: f64,
    /// Every return-map evaluation made by the root finder, in order.
    pub iterates: Vec<ReturnIterate>,
    pub converged: bool,
    pub fixed_point: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Horizon {
    pub seed: [f64; 2],
    /// Sample angles about the seed, increasing in `[0, 2π)`.
    pub angles: Vec<f64>,
    /// `ρ₀(θ)`: distance from the seed at each angle.
    pub radii: Vec<f64>,
    pub points: Vec<[f64; 2]>,
    pub record: ReturnMapRecord,
    /// `|P(ρ*) − ρ*|` of the traced cycle.
    pub residual: f64,
    /// All fixed points found by the optional bracket scan.
    pub candidates: Vec<f64>,
}

impl Horizon {
    /// `ρ₀` at an arbitrary angle, by periodic linear interpolation.
    pub fn radius_at(&self, angle: f64) -> f64 {
        periodic_interp(&self.angles, &self.radii, angle)
    }
}

pub(crate) fn periodic_interp(angles: &[f64], values: &[f64], angle: f64) -> f64 {
    let n = angles.len();
    let a = angle.rem_euclid(TAU);
    let k = angles.partition_point(|&t| t <= a);
    let (i0, i1) = if k == 0 || k == n { (n - 1, 0) } else { (k - 1, k) };
    let (t0, mut t1) = (angles[i0], angles[i1]);
    let mut a = a;
    if t1 <= t0 {
        t1 += TAU;
        if a < t0 {
            a += TAU;
        }
    }
    let w = (a - t0) / (t1 - t0);
    values[i0] * (1.0 - w) + values[i1] * w
}

/// The two unit null covectors of an indefinite 2×2 spatial block.
pub fn null_covectors(m: &SpacetimeMetric<2>, p: [f64; 2]) -> Result<[[f64; 2]; 2], HorizonError> {
    let g = m.eval_inverse_metric(&p)?;
    let s = g.spatial();
    let (l1, l2) = sym2_eigenvalues(&s);
    if !(l1 > 0.0 && l2 < 0.0) {
        return Err(HorizonError::ExitedErgoregion { rho: f64::NAN });
    }
    let u1 = sym2_eigenvector(&s, l1);
    let u2 = [-u1[1], u1[0]];
    let (a, b) = ((-l2).sqrt(), l1.sqrt());
    let n = (a * a + b * b).sqrt();
    Ok([
        [(a * u1[0] + b * u2[0]) / n, (a * u1[1] + b * u2[1]) / n],
        [(a * u1[0] - b * u2[0]) / n, (a * u1[1] - b * u2[1]) / n],
    ])
}

/// Zero-frequency `(−)` state at an interior point: of the two null lines,
/// the one whose velocity has the larger outward component relative to the
/// seed, with the covector sign chosen so that `ξ₀ = 0` is the smaller root.
pub fn minus_state(m: &SpacetimeMetric<2>, seed: [f64; 2], p: [f64; 2]) -> Result<GeodesicState<2>, HorizonError> {
    let g = m.eval_inverse_metric(&p)?;
    let out = [p[0] - seed[0], p[1] - seed[1]];
    let mut best: Option<([f64; 2], f64)> = None;
    for n in null_covectors(m, p)? {
        let b = g.ts(0) * n[0] + g.ts(1) * n[1];
        let gn = [
            g.ss(0, 0) * n[0] + g.ss(0, 1) * n[1],
            g.ss(1, 0) * n[0] + g.ss(1, 1) * n[1],
        ];
        let radial = (gn[0] * out[0] + gn[1] * out[1]) / b;
        if best.map_or(true, |(_, r)| radial > r) {
            best = Some((if b > 0.0 { [-n[0], -n[1]] } else { n }, radial));
        }
    }
    let xi = best.expect("two null covectors").0;
    Ok(GeodesicState {
        x0: 0.0,
        x: p,
        xi,
        family: Family::Minus,
    })
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(TAU) - PI
}

struct Tracer<'a> {
    m: &'a SpacetimeMetric<2>,
    seed: [f64; 2],
    core: f64,
    opts: &'a HorizonOptions,
}

impl Tracer<'_> {
    fn angle(&self, x: &[f64; 2]) -> f64 {
        (x[1] - self.seed[1]).atan2(x[0] - self.seed[0])
    }

    fn point(&self, section: f64, rho: f64) -> [f64; 2] {
        [
            self.seed[0] + rho * section.cos(),
            self.seed[1] + rho * section.sin(),
        ]
    }

    /// Follows the backward `(−)` ray from the section at distance `rho`
    /// and records where its unwrapped angle has advanced by each of
    /// `offsets` (increasing, in `(0, 2π]`). Returns the crossing points and
    /// the winding sign.
    fn trace(&self, section: f64, rho: f64, offsets: &[f64]) -> Result<(Vec<[f64; 2]>, f64), HorizonError> {
        let m = self.m;
        let init = minus_state(m, self.seed, self.point(section, rho))?;
        let mut unwrapped = 0.0f64;
        let mut winding = 0.0f64;
        let mut hits: Vec<[f64; 2]> = Vec::with_capacity(offsets.len());
        let mut err: Option<HorizonError> = None;
        let fopts = FlowOptions {
            rtol: self.opts.rtol,
            atol: self.opts.atol,
            record: false,
            ..FlowOptions::default()
        };
        let mut observer = |step: &Step<PhasePoint<2>>| {
            let a0 = self.angle(&step.y0.x);
            let da = wrap(self.angle(&step.y1.x) - a0);
            if winding == 0.0 && da != 0.0 {
                winding = da.signum();
            }
            if da * winding < -1e-12 {
                err = Some(HorizonError::NonMonotoneAngle { rho });
                return Control::Stop;
            }
            let start = unwrapped;
            unwrapped += da;
            while hits.len() < offsets.len() && unwrapped * winding >= offsets[hits.len()] {
                let target = offsets[hits.len()];
                let g = |_t: f64, y: &PhasePoint<2>| (start + wrap(self.angle(&y.x) - a0)) * winding - target;
                let (_, y) = locate_crossing(step, g, start * winding - target, 200);
                hits.push(y.x);
            }
            if hits.len() == offsets.len() {
                return Control::Stop;
            }
            let x = step.y1.x;
            if (x[0] - self.seed[0]).hypot(x[1] - self.seed[1]) < self.core {
                err = Some(HorizonError::EnteredCore { rho });
                return Control::Stop;
            }
            if m.spatial_det(&x).map_or(true, |d| d > 0.0) {
                err = Some(HorizonError::ExitedErgoregion { rho });
                return Control::Stop;
            }
            Control::Continue
        };
        let path = flow_observed(m, &init, Direction::Backward, self.opts.max_time, &fopts, &mut observer)?;
        if let Some(e) = err {
            return Err(e);
        }
        if hits.len() < offsets.len() {
            return Err(match path.termination {
                crate::geodesics::Termination::LeftDomain => HorizonError::EnteredCore { rho },
                _ => HorizonError::NoReturn { rho },
            });
        }
        Ok((hits, winding))
    }

    fn dist(&self, x: [f64; 2]) -> f64 {
        (x[0] - self.seed[0]).hypot(x[1] - self.seed[1])
    }

    fn return_map(&self, section: f64, rho: f64) -> Result<ReturnIterate, HorizonError> {
        let (hits, winding) = self.trace(section, rho, &[TAU])?;
        Ok(ReturnIterate {
            rho,
            returned: self.dist(hits[0]),
            winding,
        })
    }
}

fn require_case_b(curve: &ErgosphereCurve) -> Result<(), HorizonError> {
    match curve.classification {
        Classification::NonCharacteristic => Ok(()),
        Classification::Characteristic => Err(HorizonError::SchwarzschildType),
        Classification::Mixed => Err(HorizonError::Mixed),
    }
}

fn tracer<'a>(
    m: &'a SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    opts: &'a HorizonOptions,
) -> Result<(Tracer<'a>, f64, (f64, f64)), HorizonError> {
    require_case_b(curve)?;
    let core = opts.core_radius.unwrap_or(0.5 * curve.min_radius());
    let ergo = ray_root(m, curve.seed, opts.section_angle, None, curve.tol)?;
    let (lo, hi) = opts.bracket.unwrap_or((0.55 * ergo, 0.97 * ergo));
    if !(core < lo && lo < hi && hi < ergo) {
        return Err(HorizonError::BracketOutsideStrip { lo, hi, core, ergo });
    }
    Ok((
        Tracer {
            m,
            seed: curve.seed,
            core,
            opts,
        },
        ergo,
        (lo, hi),
    ))
}

/// One Poincaré return from section distance `rho`.
pub fn poincare_return(
    m: &SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    rho: f64,
    opts: &HorizonOptions,
) -> Result<ReturnIterate, HorizonError> {
    require_case_b(curve)?;
    let core = opts.core_radius.unwrap_or(0.5 * curve.min_radius());
    let t = Tracer {
        m,
        seed: curve.seed,
        core,
        opts,
    };
    t.return_map(opts.section_angle, rho)
}

/// Plain iteration `ρ, P(ρ), P(P(ρ)), …` (`count` returns).
pub fn iterate_return(
    m: &SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    rho: f64,
    count: usize,
    opts: &HorizonOptions,
) -> Result<Vec<f64>, HorizonError> {
    let mut out = vec![rho];
    let mut r = rho;
    for _ in 0..count {
        r = poincare_return(m, curve, r, opts)?.returned;
        out.push(r);
    }
    Ok(out)
}

/// Locates the horizon as the fixed point of the return map.
///
/// The displacement `g(ρ) = P(ρ) − ρ` must change sign over the bracket;
/// its root is found with Brent's method (a bisection-safeguarded secant),
/// then one full backward revolution from the fixed point is sampled at
/// `n_samples` equally spaced angles.
pub fn find_limit_cycle(
    m: &SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    opts: &HorizonOptions,
) -> Result<Horizon, HorizonError> {
    let (t, _ergo, (lo, hi)) = tracer(m, curve, opts)?;
    let section = opts.section_angle;
    let iterates = RefCell::new(Vec::new());
    let failure = RefCell::new(None);
    let g = |rho: f64| match t.return_map(section, rho) {
        Ok(it) => {
            let d = it.returned - it.rho;
            iterates.borrow_mut().push(it);
            d
        }
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let (g_lo, g_hi) = (g(lo), g(hi));
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    if g_lo.signum() == g_hi.signum() {
        return Err(HorizonError::BadBracket { lo, hi, g_lo, g_hi });
    }
    let root = brent(g, lo, hi, 0.1 * opts.tol);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let rho_star = root.map_err(|_| HorizonError::NotConverged {
        residual: f64::NAN,
        tol: opts.tol,
    })?;

    let n = opts.n_samples.max(16);
    let offsets: Vec<f64> = (1..=n).map(|k| TAU * k as f64 / n as f64).collect();
    let (hits, winding) = t.trace(section, rho_star, &offsets)?;
    let residual = (t.dist(hits[n - 1]) - rho_star).abs();
    let mut samples: Vec<(f64, [f64; 2])> = hits
        .iter()
        .enumerate()
        .map(|(k, &p)| ((section + winding * offsets[k]).rem_euclid(TAU), p))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let candidates = if opts.candidate_scan > 0 {
        scan_candidates(&t, section, lo, hi, opts.candidate_scan, opts.tol)?
    } else {
        Vec::new()
    };
    let converged = residual < 10.0 * opts.tol.max(1e-9);
    Ok(Horizon {
        seed: curve.seed,
        angles: samples.iter().map(|s| s.0).collect(),
        radii: samples.iter().map(|s| t.dist(s.1)).collect(),
        points: samples.iter().map(|s| s.1).collect(),
        record: ReturnMapRecord {
            section_angle: section,
            iterates: iterates.into_inner(),
            converged,
            fixed_point: rho_star,
        },
        residual,
        candidates,
    })
}

fn scan_candidates(t: &Tracer, section: f64, lo: f64, hi: f64, n: usize, tol: f64) -> Result<Vec<f64>, HorizonError> {
    let grid: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let disp: Vec<f64> = grid
        .par_iter()
        .map(|&r| t.return_map(section, r).map(|it| it.returned - it.rho))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for k in 0..n {
        if disp[k] == 0.0 {
            out.push(grid[k]);
        } else if disp[k].signum() != disp[k + 1].signum() {
            let g = |r: f64| t.return_map(section, r).map_or(f64::NAN, |it| it.returned - it.rho);
            if let Ok(r) = brent(g, grid[k], grid[k + 1], 0.1 * tol) {
                out.push(r);
            }
        }
    }
    Ok(out)
}

/// A disk-shaped probe region.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Disk {
    pub center: [f64; 2],
    pub radius: f64,
}

impl Disk {
    pub fn contains(&self, x: &[f64; 2]) -> bool {
        (x[0] - self.center[0]).hypot(x[1] - self.center[1]) < self.radius
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrappedReport {
    pub region: Disk,
    pub launches: usize,
    /// Fraction of forward-time rays whose last state is inside the region.
    pub forward_fraction: f64,
    /// The same under time reversal (white-hole test).
    pub backward_fraction: f64,
    pub time_budget: f64,
    /// Black hole if forward trapping is complete, white hole if backward
    /// trapping is, indefinite otherwise.
    pub verdict: Orientation,
}

/// Launches both families, with several covector directions each, from
/// `n_samples` points just inside the region boundary and reports how many
/// are still inside after `time_budget` in each time direction.
///
/// Rays that end inside the region on a metric singularity or a collapsed
/// step count as having stayed.
pub fn trapped_probe(
    m: &SpacetimeMetric<2>,
    region: Disk,
    n_samples: usize,
    time_budget: f64,
) -> Result<TrappedReport, HorizonError> {
    const DIRECTIONS: usize = 8;
    // Δ must keep one sign over the region
    let mut signs = [false; 2];
    for i in 0..=16 {
        for k in 0..32 {
            let r = region.radius * i as f64 / 16.0;
            let a = TAU * k as f64 / 32.0;
            let p = [region.center[0] + r * a.cos(), region.center[1] + r * a.sin()];
            if let Ok(d) = m.spatial_det(&p) {
                signs[(d > 0.0) as usize] = true;
            }
        }
    }
    if signs[0] && signs[1] {
        return Err(HorizonError::RegionStraddlesErgosphere);
    }
    let mut launches = Vec::new();
    for i in 0..n_samples {
        let a = TAU * (i as f64 + 0.5) / n_samples as f64;
        let r = region.radius * (1.0 - 1e-9);
        let p = [region.center[0] + r * a.cos(), region.center[1] + r * a.sin()];
        for k in 0..DIRECTIONS {
            let b = TAU * k as f64 / DIRECTIONS as f64;
            let xi = [b.cos(), b.sin()];
            if solve_xi0(m, &p, &xi).is_err() {
                continue;
            }
            for fam in [Family::Plus, Family::Minus] {
                launches.push(GeodesicState {
                    x0: 0.0,
                    x: p,
                    xi,
                    family: fam,
                });
            }
        }
    }
    let fopts = FlowOptions {
        record: false,
        max_steps: 20_000,
        rtol: 1e-9,
        atol: 1e-11,
        ..FlowOptions::default()
    };
    let stayed = |dir: Direction| -> usize {
        launches
            .par_iter()
            .filter(|s| {
                flow(m, s, dir, time_budget, &fopts)
                    .map(|g| region.contains(&g.last().x))
                    .unwrap_or(false)
            })
            .count()
    };
    let n = launches.len().max(1) as f64;
    let forward_fraction = stayed(Direction::Forward) as f64 / n;
    let backward_fraction = stayed(Direction::Backward) as f64 / n;
    let verdict = if forward_fraction == 1.0 && backward_fraction < 1.0 {
        Orientation::BlackHole
    } else if backward_fraction == 1.0 && forward_fraction < 1.0 {
        Orientation::WhiteHole
    } else {
        Orientation::Indefinite
    };
    Ok(TrappedReport {
        region,
        launches: launches.len(),
        forward_fraction,
        backward_fraction,
        time_budget,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergosphere::trace_ergosphere;
    use crate::metric::builtin::acoustic_vortex;

    fn curve(a: f64, b: f64) -> (SpacetimeMetric<2>, ErgosphereCurve) {
        let m = acoustic_vortex(a, b).unwrap();
        let c = trace_ergosphere(&m, [0.0, 0.0], 64, 1e-12).unwrap();
        (m, c)
    }

    #[test]
    fn return_map_contracts_toward_unit_circle() {
        let (m, c) = curve(-1.0, 1.0);
        let o = HorizonOptions::default();
        let it = poincare_return(&m, &c, 1.2, &o).unwrap();
        assert!((it.returned - 1.0).abs() < 0.2 * 0.5);
        let fixed = poincare_return(&m, &c, 1.0, &o).unwrap();
        assert!((fixed.returned - 1.0).abs() < 1e-6);
    }

    #[test]
    fn acoustic_horizon_is_unit_circle() {
        let (m, c) = curve(-1.0, 1.0);
        let h = find_limit_cycle(&m, &c, &HorizonOptions::default()).unwrap();
        assert_eq!(h.radii.len(), 256);
        for r in &h.radii {
            assert!((r - 1.0).abs() < 1e-3, "{r}");
        }
    }

    #[test]
    fn schwarzschild_type_is_refused() {
        let (m, c) = curve(-1.0, 0.0);
        assert_eq!(
            find_limit_cycle(&m, &c, &HorizonOptions::default()).unwrap_err(),
            HorizonError::SchwarzschildType
        );
    }

    #[test]
    fn periodic_interpolation_wraps() {
        let angles = [0.5, 2.0, 5.0];
        let values = [1.0, 2.0, 3.0];
        assert_eq!(periodic_interp(&angles, &values, 2.0), 2.0);
        let mid = periodic_interp(&angles, &values, 0.0);
        let w = (0.0 + TAU - 5.0) / (0.5 + TAU - 5.0);
        assert!((mid - (3.0 * (1.0 - w) + 1.0 * w)).abs() < 1e-12);
    }
}
