//! Null bicharacteristics of `H = Σ g^{jk} ξ_j ξ_k`, parameterized by time.
//!
//! Writing the Hamiltonian as a quadratic in the frequency,
//! `H = g^{00} ξ₀² + 2 b ξ₀ + c` with `b = Σ g^{0j} ξ_j` and
//! `c = Σ g^{jk} ξ_j ξ_k`, every spatial covector with `D = b² − g^{00} c ≥ 0`
//! has two null completions `ξ₀±`. The `Plus` family takes the larger root.
//! Along a ray
//!
//! ```text
//! dx/dx₀ = H_ξ / H_ξ₀        dξ/dx₀ = −H_x / H_ξ₀        H_ξ₀ = ±2√D
//! ```
//!
//! `ξ₀` is re-solved from `(x, ξ)` at every evaluation, so the integrated
//! state stays exactly on the null cone; since the metric is stationary the
//! true `ξ₀` is conserved, and its observed drift is the honest error gauge.

use serde::Serialize;
use thiserror::Error;

use crate::ergosphere::{ray_root, vertex_at, ErgoError, ErgosphereCurve};
use crate::metric::{Components, MetricError, SpacetimeMetric};
use crate::ode::{self, Control, Options, Outcome, State, Step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Plus,
    Minus,
}

impl Family {
    pub fn sign(self) -> f64 {
        match self {
            Family::Plus => 1.0,
            Family::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxTime,
    LeftDomain,
    EnteredTrapped,
    StepFailure,
    /// An observer ended the run.
    Stopped,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    #[error("no null covector with this spatial part (discriminant {disc})")]
    NoNullCovector { disc: f64 },
    #[error("∂H/∂ξ₀ vanishes: the ray is not parameterizable by time")]
    NotTimeParameterizable,
    #[error("ergosphere is characteristic at angle {angle}: null rays are tangent there")]
    Tangency { angle: f64 },
    #[error("covector must be finite and non-zero")]
    BadCovector,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Ergo(#[from] ErgoError),
}

/// Position and spatial covector; the ODE state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasePoint<const N: usize> {
    pub x: [f64; N],
    pub xi: [f64; N],
}

impl<const N: usize> State for PhasePoint<N> {
    const LEN: usize = 2 * N;

    #[inline]
    fn get(&self, i: usize) -> f64 {
        if i < N {
            self.x[i]
        } else {
            self.xi[i - N]
        }
    }

    #[inline]
    fn from_fn(mut f: impl FnMut(usize) -> f64) -> Self {
        let x = std::array::from_fn(&mut f);
        let xi = std::array::from_fn(|i| f(i + N));
        PhasePoint { x, xi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeodesicState<const N: usize> {
    pub x0: f64,
    pub x: [f64; N],
    pub xi: [f64; N],
    pub family: Family,
}

impl<const N: usize> GeodesicState<N> {
    /// Validates that `ξ` has a null completion at `x`.
    pub fn new(
        m: &SpacetimeMetric<N>,
        x0: f64,
        x: [f64; N],
        xi: [f64; N],
        family: Family,
    ) -> Result<Self, GeoError> {
        if xi.iter().any(|v| !v.is_finite()) || xi.iter().all(|&v| v == 0.0) {
            return Err(GeoError::BadCovector);
        }
        solve_xi0(m, &x, &xi)?;
        Ok(GeodesicState { x0, x, xi, family })
    }

    pub fn xi0(&self, m: &SpacetimeMetric<N>) -> Result<f64, GeoError> {
        let (p, q) = solve_xi0(m, &self.x, &self.xi)?;
        Ok(match self.family {
            Family::Plus => p,
            Family::Minus => q,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample<const N: usize> {
    pub x0: f64,
    pub x: [f64; N],
    pub xi: [f64; N],
    pub xi0: f64,
    /// `H` evaluated with the re-solved `ξ₀`.
    pub h: f64,
}

#[derive(Debug, Clone)]
pub struct NullGeodesic<const N: usize> {
    pub samples: Vec<Sample<N>>,
    pub family: Family,
    pub direction: Direction,
    pub termination: Termination,
    /// Why integration ended early, when it did.
    pub failure: Option<String>,
    pub max_abs_h: f64,
    /// `max |H|` per unit of elapsed time (at least one unit).
    pub h_drift_rate: f64,
    /// `max |ξ₀(x₀) − ξ₀(0)|`.
    pub xi0_drift: f64,
    pub steps: usize,
}

impl<const N: usize> NullGeodesic<N> {
    pub fn last(&self) -> &Sample<N> {
        self.samples.last().expect("a geodesic always holds its initial sample")
    }

    pub fn final_state(&self) -> GeodesicState<N> {
        let s = self.last();
        GeodesicState {
            x0: s.x0,
            x: s.x,
            xi: s.xi,
            family: self.family,
        }
    }
}

pub type Predicate<'a, const N: usize> = &'a (dyn Fn(&[f64; N]) -> bool + Sync);

#[derive(Clone, Copy)]
pub struct FlowOptions<'a, const N: usize> {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Stop with `EnteredTrapped` once this holds.
    pub trapped: Option<Predicate<'a, N>>,
    /// Stop with `LeftDomain` once this fails.
    pub domain: Option<Predicate<'a, N>>,
    /// Keep every accepted step (otherwise only the ends).
    pub record: bool,
}

impl<const N: usize> Default for FlowOptions<'_, N> {
    fn default() -> Self {
        FlowOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 200_000,
            trapped: None,
            domain: None,
            record: true,
        }
    }
}

/// The two roots `(ξ₀⁺, ξ₀⁻)`, `ξ₀⁺ ≥ ξ₀⁻`, of `H(x, ξ₀, ξ) = 0`.
pub fn solve_xi0<const N: usize>(
    m: &SpacetimeMetric<N>,
    p: &[f64; N],
    xi: &[f64; N],
) -> Result<(f64, f64), GeoError> {
    let g = m.eval_inverse_metric(p)?;
    let (b, c) = bc(&g, xi);
    roots(g.tt(), b, c)
}

fn bc<const N: usize>(g: &Components<f64, N>, xi: &[f64; N]) -> (f64, f64) {
    let b = (0..N).map(|j| g.ts(j) * xi[j]).sum();
    (b, g.spatial_form(xi))
}

/// Roots of `a t² + 2 b t + c`, `a > 0`, without cancellation.
fn roots(a: f64, b: f64, c: f64) -> Result<(f64, f64), GeoError> {
    let disc = b * b - a * c;
    if !(disc >= 0.0) {
        return Err(GeoError::NoNullCovector { disc });
    }
    let sq = disc.sqrt();
    if b > 0.0 {
        let lo = (-b - sq) / a;
        Ok((c / (-b - sq), lo))
    } else if b < 0.0 || sq > 0.0 {
        let hi = (-b + sq) / a;
        Ok((hi, c / (-b + sq)))
    } else {
        Ok((0.0, 0.0))
    }
}

/// `H = g^{00} ξ₀² + 2 ξ₀ Σ g^{0j} ξ_j + Σ g^{jk} ξ_j ξ_k`.
pub fn hamiltonian<const N: usize>(
    m: &SpacetimeMetric<N>,
    p: &[f64; N],
    xi0: f64,
    xi: &[f64; N],
) -> Result<f64, GeoError> {
    let g = m.eval_inverse_metric(p)?;
    let (b, c) = bc(&g, xi);
    Ok(g.tt() * xi0 * xi0 + 2.0 * b * xi0 + c)
}

/// Right-hand side of the time-parameterized flow, plus `(ξ₀, H)`.
fn rhs<const N: usize>(
    m: &SpacetimeMetric<N>,
    family: Family,
    y: &PhasePoint<N>,
) -> Result<(PhasePoint<N>, f64, f64), GeoError> {
    let jet = m.eval_jet(&y.x)?;
    let g = jet.values();
    let xi = &y.xi;
    let (b, c) = bc(&g, xi);
    let (plus, minus) = roots(g.tt(), b, c)?;
    let xi0 = match family {
        Family::Plus => plus,
        Family::Minus => minus,
    };
    let h_xi0 = 2.0 * (g.tt() * xi0 + b);
    let scale = b.abs() + (g.tt() * c.abs()).sqrt();
    if h_xi0.abs() <= 1e-13 * scale || h_xi0 == 0.0 {
        return Err(GeoError::NotTimeParameterizable);
    }
    let mut dx = [0.0; N];
    let mut dxi = [0.0; N];
    for j in 0..N {
        let mut gx = g.ts(j) * xi0;
        for k in 0..N {
            gx += g.ss(j, k) * xi[k];
        }
        dx[j] = 2.0 * gx / h_xi0;
    }
    for l in 0..N {
        let mut hx = jet.tt().eps[l] * xi0 * xi0;
        for j in 0..N {
            hx += 2.0 * xi0 * jet.ts(j).eps[l] * xi[j];
            for k in 0..N {
                hx += jet.ss(j, k).eps[l] * xi[j] * xi[k];
            }
        }
        dxi[l] = -hx / h_xi0;
    }
    let h = g.tt() * xi0 * xi0 + 2.0 * b * xi0 + c;
    Ok((PhasePoint { x: dx, xi: dxi }, xi0, h))
}

/// Coordinate velocity `dx/dx₀` of the state.
pub fn velocity<const N: usize>(m: &SpacetimeMetric<N>, s: &GeodesicState<N>) -> Result<[f64; N], GeoError> {
    Ok(rhs(m, s.family, &PhasePoint { x: s.x, xi: s.xi })?.0.x)
}

/// Integrates from `init` for `t_max` units of time in `direction`.
pub fn flow<const N: usize>(
    m: &SpacetimeMetric<N>,
    init: &GeodesicState<N>,
    direction: Direction,
    t_max: f64,
    opts: &FlowOptions<N>,
) -> Result<NullGeodesic<N>, GeoError> {
    flow_observed(m, init, direction, t_max, opts, |_| Control::Continue)
}

/// [`flow`] with an observer that sees every accepted step of the phase
/// state and may stop the run (termination `Stopped`).
pub fn flow_observed<const N: usize>(
    m: &SpacetimeMetric<N>,
    init: &GeodesicState<N>,
    direction: Direction,
    t_max: f64,
    opts: &FlowOptions<N>,
    mut observer: impl FnMut(&Step<PhasePoint<N>>) -> Control,
) -> Result<NullGeodesic<N>, GeoError> {
    let family = init.family;
    let y0 = PhasePoint {
        x: init.x,
        xi: init.xi,
    };
    let (_, xi0_start, h0) = rhs(m, family, &y0)?;
    let mut samples = vec![Sample {
        x0: init.x0,
        x: init.x,
        xi: init.xi,
        xi0: xi0_start,
        h: h0,
    }];
    let mut max_abs_h = h0.abs();
    let mut xi0_drift = 0.0f64;
    let mut why: Option<Termination> = None;
    let t_end = init.x0 + direction.sign() * t_max;
    let ode_opts = Options {
        max_steps: opts.max_steps,
        ..Options::tol(opts.rtol, opts.atol)
    };
    let sol = ode::integrate(
        |_t, y: &PhasePoint<N>| rhs(m, family, y).map(|r| r.0),
        init.x0,
        y0,
        t_end,
        &ode_opts,
        |step| {
            let y = step.y1;
            let (xi0, h) = match rhs(m, family, &y) {
                Ok((_, xi0, h)) => (xi0, h),
                Err(_) => (f64::NAN, f64::NAN),
            };
            max_abs_h = max_abs_h.max(h.abs());
            xi0_drift = xi0_drift.max((xi0 - xi0_start).abs());
            let sample = Sample {
                x0: step.t1,
                x: y.x,
                xi: y.xi,
                xi0,
                h,
            };
            if opts.record || samples.len() == 1 {
                samples.push(sample);
            } else {
                *samples.last_mut().unwrap() = sample;
            }
            if opts.trapped.is_some_and(|t| t(&y.x)) {
                why = Some(Termination::EnteredTrapped);
                return Control::Stop;
            }
            if opts.domain.is_some_and(|d| !d(&y.x)) {
                why = Some(Termination::LeftDomain);
                return Control::Stop;
            }
            if observer(step) == Control::Stop {
                why = Some(Termination::Stopped);
                return Control::Stop;
            }
            Control::Continue
        },
    );
    let (termination, failure) = match sol.outcome {
        Outcome::Completed => (Termination::MaxTime, None),
        Outcome::Stopped => (why.unwrap_or(Termination::Stopped), None),
        Outcome::StepCollapse => (Termination::StepFailure, Some("step size collapsed".to_string())),
        Outcome::MaxSteps => (Termination::StepFailure, Some("step budget exhausted".to_string())),
        Outcome::RhsFailed(GeoError::Metric(e)) => (Termination::LeftDomain, Some(e.to_string())),
        Outcome::RhsFailed(e) => (Termination::StepFailure, Some(e.to_string())),
    };
    let elapsed = (samples.last().unwrap().x0 - init.x0).abs().max(1.0);
    Ok(NullGeodesic {
        samples,
        family,
        direction,
        termination,
        failure,
        max_abs_h,
        h_drift_rate: max_abs_h / elapsed,
        xi0_drift,
        steps: sol.accepted,
    })
}

/// A zero-frequency state on the ergosphere at ray angle `theta0`.
///
/// The spatial covector is the unit kernel vector `±e` of the spatial block,
/// so `ξ₀ = 0` solves the null condition; the sign is chosen so that zero is
/// the requested family's root. The coordinate velocity vanishes at launch:
/// the ray touches the ergosphere at a cusp and enters the ergoregion in
/// either time direction.
pub fn launch_from_ergosphere(
    m: &SpacetimeMetric<2>,
    curve: &ErgosphereCurve,
    theta0: f64,
    family: Family,
) -> Result<GeodesicState<2>, GeoError> {
    let s = ray_root(m, curve.seed, theta0, None, curve.tol)?;
    let p = [
        curve.seed[0] + s * theta0.cos(),
        curve.seed[1] + s * theta0.sin(),
    ];
    let v = vertex_at(m, p, theta0)?;
    if v.char_form_normalized <= curve.char_tol {
        return Err(GeoError::Tangency { angle: theta0 });
    }
    let g = m.eval_inverse_metric(&p)?;
    let e = v.null_vector;
    let b = g.ts(0) * e[0] + g.ts(1) * e[1];
    if b == 0.0 {
        return Err(GeoError::NotTimeParameterizable);
    }
    // roots are {0, −2b/g00}: zero is the larger one iff b > 0
    let sign = b.signum() * family.sign();
    Ok(GeodesicState {
        x0: 0.0,
        x: p,
        xi: [sign * e[0], sign * e[1]],
        family,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ergosphere::trace_ergosphere;
    use crate::metric::builtin::{acoustic_vortex, minkowski};
    use approx::assert_relative_eq;

    #[test]
    fn light_cone_roots() {
        let (p, q) = solve_xi0(&minkowski::<2>(), &[0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!((p, q), (1.0, -1.0));
    }

    #[test]
    fn radial_acoustic_roots() {
        let m = acoustic_vortex(-1.0, 0.0).unwrap();
        let (p, q) = solve_xi0(&m, &[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_relative_eq!(p, 2.0, epsilon = 1e-15);
        assert_eq!(q, 0.0);
    }

    #[test]
    fn negative_discriminant_is_rejected() {
        // With g⁰⁰ > 0 and Lorentzian signature D is positive definite in ξ,
        // so only a wrong-signature table can fail.
        let text = "[metric]\nkind = \"custom\"\nn = 2\n[components]\n\
                    g00 = \"1\"\ng01 = \"0\"\ng02 = \"0\"\ng11 = \"1\"\ng12 = \"0\"\ng22 = \"-1\"\n";
        let m = crate::metric::config::parse_metric_config(text)
            .unwrap()
            .planar()
            .unwrap();
        assert!(matches!(
            solve_xi0(&m, &[0.0, 0.0], &[1.0, 0.0]),
            Err(GeoError::NoNullCovector { .. })
        ));
        assert!(solve_xi0(&m, &[0.0, 0.0], &[0.0, 1.0]).is_ok());
    }

    #[test]
    fn minkowski_straight_lines() {
        let m = minkowski::<2>();
        for (fam, dir) in [(Family::Plus, 1.0), (Family::Minus, -1.0)] {
            let s = GeodesicState::new(&m, 0.0, [0.0, 0.0], [1.0, 0.0], fam).unwrap();
            let g = flow(&m, &s, Direction::Forward, 3.0, &FlowOptions::default()).unwrap();
            assert_eq!(g.termination, Termination::MaxTime);
            let end = g.last();
            // ξ₀ = ±1 with ξ = (1, 0) moves along ∓x₁
            assert_relative_eq!(end.x[0], -dir * 3.0, epsilon = 1e-9);
            assert!(end.x[1].abs() < 1e-12);
        }
    }

    #[test]
    fn launch_requires_non_characteristic_curve() {
        let m = acoustic_vortex(-1.0, 0.0).unwrap();
        let c = trace_ergosphere(&m, [0.1, 0.0], 32, 1e-12).unwrap();
        assert!(matches!(
            launch_from_ergosphere(&m, &c, 0.0, Family::Plus),
            Err(GeoError::Tangency { .. })
        ));
    }

    #[test]
    fn launch_state_is_null_with_zero_frequency() {
        let m = acoustic_vortex(-1.0, 1.0).unwrap();
        let c = trace_ergosphere(&m, [0.1, 0.0], 32, 1e-12).unwrap();
        for fam in [Family::Plus, Family::Minus] {
            let s = launch_from_ergosphere(&m, &c, 0.0, fam).unwrap();
            assert!(s.xi0(&m).unwrap().abs() < 1e-12);
            assert!(hamiltonian(&m, &s.x, 0.0, &s.xi).unwrap().abs() < 1e-12);
            assert_relative_eq!(s.xi[0].hypot(s.xi[1]), 1.0, epsilon = 1e-14);
        }
    }
}
