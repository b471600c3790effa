//! Adaptive Dormand–Prince 5(4) integration with step observers.
//!
//! The integrator runs in either time direction (sign of `t_end − t0`). Every
//! accepted step is handed to an observer together with a cubic Hermite
//! interpolant, which is what event location is built on.

/// A fixed-length real state vector.
pub trait State: Copy {
    const LEN: usize;
    fn get(&self, i: usize) -> f64;
    fn from_fn(f: impl FnMut(usize) -> f64) -> Self;
}

impl<const M: usize> State for [f64; M] {
    const LEN: usize = M;
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i]
    }
    #[inline]
    fn from_fn(f: impl FnMut(usize) -> f64) -> Self {
        std::array::from_fn(f)
    }
}

/// Tolerances and limits.
#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude; chosen automatically when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    /// Steps smaller than this end the integration with `StepCollapse`.
    pub h_min: f64,
    pub max_steps: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            rtol: 1e-10,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            h_min: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

impl Options {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Options {
            rtol,
            atol,
            ..Options::default()
        }
    }
}

/// One accepted step.
#[derive(Debug, Clone, Copy)]
pub struct Step<Y> {
    pub t0: f64,
    pub y0: Y,
    pub f0: Y,
    pub t1: f64,
    pub y1: Y,
    pub f1: Y,
}

impl<Y: State> Step<Y> {
    /// Cubic Hermite interpolant through both ends and their derivatives.
    pub fn interpolate(&self, t: f64) -> Y {
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Y::from_fn(|i| {
            h00 * self.y0.get(i)
                + h10 * h * self.f0.get(i)
                + h01 * self.y1.get(i)
                + h11 * h * self.f1.get(i)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome<E> {
    /// `t_end` reached.
    Completed,
    /// The observer asked to stop.
    Stopped,
    /// The step size fell below `h_min` because of the error estimate.
    StepCollapse,
    MaxSteps,
    /// The right-hand side failed and no smaller step could avoid it.
    RhsFailed(E),
}

#[derive(Debug, Clone)]
pub struct Solution<Y, E> {
    pub t: f64,
    pub y: Y,
    pub outcome: Outcome<E>,
    pub accepted: usize,
    pub rejected: usize,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order minus embedded 4th-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn error_norm<Y: State>(err: &Y, y0: &Y, y1: &Y, o: &Options) -> f64 {
    let mut acc = 0.0;
    for i in 0..Y::LEN {
        let sc = o.atol + o.rtol * y0.get(i).abs().max(y1.get(i).abs());
        acc += (err.get(i) / sc).powi(2);
    }
    (acc / Y::LEN as f64).sqrt()
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_end`.
pub fn integrate<Y: State, E>(
    mut rhs: impl FnMut(f64, &Y) -> Result<Y, E>,
    t0: f64,
    y0: Y,
    t_end: f64,
    opts: &Options,
    mut observer: impl FnMut(&Step<Y>) -> Control,
) -> Solution<Y, E> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let sol = |t, y, outcome, accepted, rejected| Solution {
        t,
        y,
        outcome,
        accepted,
        rejected,
    };
    let mut f = match rhs(t, &y) {
        Ok(f) => f,
        Err(e) => return sol(t, y, Outcome::RhsFailed(e), 0, 0),
    };
    if t == t_end {
        return sol(t, y, Outcome::Completed, 0, 0);
    }
    let span = (t_end - t0).abs();
    let mut h = opts
        .h0
        .unwrap_or_else(|| initial_step(&y, &f, opts))
        .min(opts.h_max)
        .min(span);
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut last_rejected = false;
    loop {
        if accepted >= opts.max_steps {
            return sol(t, y, Outcome::MaxSteps, accepted, rejected);
        }
        let remaining = (t_end - t) * dir;
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;
        match try_step(&mut rhs, t, &y, &f, hs) {
            Ok((y1, f1, err)) => {
                let en = error_norm(&err, &y, &y1, opts);
                if en <= 1.0 {
                    let t1 = if last { t_end } else { t + hs };
                    let step = Step {
                        t0: t,
                        y0: y,
                        f0: f,
                        t1,
                        y1,
                        f1,
                    };
                    accepted += 1;
                    t = t1;
                    y = y1;
                    f = f1;
                    if observer(&step) == Control::Stop {
                        return sol(t, y, Outcome::Stopped, accepted, rejected);
                    }
                    if last {
                        return sol(t, y, Outcome::Completed, accepted, rejected);
                    }
                    let mut fac = if en == 0.0 { 5.0 } else { 0.9 * en.powf(-0.2) };
                    fac = fac.clamp(0.2, 5.0);
                    if last_rejected {
                        fac = fac.min(1.0);
                    }
                    h = (h * fac).min(opts.h_max);
                    last_rejected = false;
                } else {
                    rejected += 1;
                    last_rejected = true;
                    h *= (0.9 * en.powf(-0.2)).max(0.2);
                    if h < opts.h_min {
                        return sol(t, y, Outcome::StepCollapse, accepted, rejected);
                    }
                }
            }
            Err(e) => {
                rejected += 1;
                last_rejected = true;
                h *= 0.25;
                if h < opts.h_min {
                    return sol(t, y, Outcome::RhsFailed(e), accepted, rejected);
                }
            }
        }
    }
}

fn try_step<Y: State, E>(
    rhs: &mut impl FnMut(f64, &Y) -> Result<Y, E>,
    t: f64,
    y: &Y,
    f0: &Y,
    h: f64,
) -> Result<(Y, Y, Y), E> {
    let mut k = [*f0; 7];
    for s in 1..7 {
        let ys = Y::from_fn(|i| {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s) {
                acc += A[s][j] * kj.get(i);
            }
            y.get(i) + h * acc
        });
        k[s] = rhs(t + C[s] * h, &ys)?;
    }
    // stage 7 is evaluated at the 5th-order solution (FSAL)
    let y1 = Y::from_fn(|i| {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate().take(6) {
            acc += A[6][j] * kj.get(i);
        }
        y.get(i) + h * acc
    });
    let f1 = k[6];
    let err = Y::from_fn(|i| {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate() {
            acc += E[j] * kj.get(i);
        }
        h * acc
    });
    Ok((y1, f1, err))
}

fn initial_step<Y: State>(y: &Y, f: &Y, o: &Options) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..Y::LEN {
        let sc = o.atol + o.rtol * y.get(i).abs();
        d0 += (y.get(i) / sc).powi(2);
        d1 += (f.get(i) / sc).powi(2);
    }
    let n = Y::LEN as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.max(10.0 * o.h_min)
}

/// Locates a sign change of `g` inside a step by bisection on the
/// interpolant. `g0` and `g1` are `g` at the step ends and must differ in
/// sign. Returns the crossing time and interpolated state.
pub fn locate_crossing<Y: State>(
    step: &Step<Y>,
    g: impl Fn(f64, &Y) -> f64,
    g0: f64,
    iters: usize,
) -> (f64, Y) {
    let (mut a, mut b) = (step.t0, step.t1);
    let mut ga = g0;
    for _ in 0..iters {
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            break;
        }
        let gm = g(mid, &step.interpolate(mid));
        if gm == 0.0 {
            return (mid, step.interpolate(mid));
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    (t, step.interpolate(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn never<Y>(_: &Step<Y>) -> Control {
        Control::Continue
    }

    #[test]
    fn exponential_growth() {
        let sol = integrate(
            |_, y: &[f64; 1]| Ok::<_, ()>([y[0]]),
            0.0,
            [1.0],
            2.0,
            &Options::tol(1e-11, 1e-13),
            never,
        );
        assert_eq!(sol.outcome, Outcome::Completed);
        assert_eq!(sol.t, 2.0);
        assert!((sol.y[0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let sol = integrate(
            |_, y: &[f64; 2]| Ok::<_, ()>([y[1], -y[0]]),
            0.0,
            [0.0, 1.0],
            -3.0,
            &Options::tol(1e-11, 1e-13),
            never,
        );
        assert!((sol.y[0] - (-3f64).sin()).abs() < 1e-9);
        assert!((sol.y[1] - (-3f64).cos()).abs() < 1e-9);
    }

    #[test]
    fn observer_stops_and_crossing_is_located() {
        let mut crossing = None;
        let sol = integrate(
            |_, y: &[f64; 2]| Ok::<_, ()>([y[1], -y[0]]),
            0.0,
            [1.0, 0.0],
            10.0,
            &Options::tol(1e-10, 1e-12),
            |s| {
                if s.y0[0] > 0.0 && s.y1[0] <= 0.0 {
                    crossing = Some(locate_crossing(s, |_, y| y[0], s.y0[0], 100).0);
                    Control::Stop
                } else {
                    Control::Continue
                }
            },
        );
        assert_eq!(sol.outcome, Outcome::Stopped);
        assert!((crossing.unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn rhs_failure_is_reported() {
        // blows up at t = 1
        let sol = integrate(
            |t, _y: &[f64; 1]| if t < 1.0 { Ok([1.0 / (1.0 - t)]) } else { Err("past singularity") },
            0.0,
            [0.0],
            2.0,
            &Options::default(),
            never,
        );
        assert!(matches!(
            sol.outcome,
            Outcome::RhsFailed(_) | Outcome::StepCollapse
        ));
        assert!(sol.t < 1.0 && sol.t > 0.99);
    }
}
