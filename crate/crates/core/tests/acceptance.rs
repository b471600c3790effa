//! Acceptance checks. Runs as a plain binary (no libtest harness) so every
//! criterion prints one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use horizon_lab::axisym::kerr_ergosurfaces;
use horizon_lab::charcoords::{
    build_char_field, build_collar, half_plane_map, mu_pm, transport_drift, CharFamily, FieldOptions,
};
use horizon_lab::ergosphere::{trace_ergosphere, Classification, Orientation};
use horizon_lab::expr::{Expr, Scope};
use horizon_lab::geodesics::{flow, solve_xi0, Direction, Family, FlowOptions, GeodesicState, Termination};
use horizon_lab::horizon::{find_limit_cycle, HorizonOptions};
use horizon_lab::metric::builtin::{
    acoustic_vortex, gordon, gordon_radial, kerr_restricted, kerr_schild_3d, minkowski, schwarzschild_equatorial,
};
use horizon_lab::SpacetimeMetric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// `max |∇Δᵀ G ∇Δ| / (|∇Δ|² ‖G‖)` over `points`, with `∇Δ` from central
/// differences.
fn max_char_form(m: &SpacetimeMetric<2>, points: &[[f64; 2]]) -> f64 {
    let mut worst = 0.0f64;
    for p in points {
        let h = 1e-6 * p[0].abs().max(p[1].abs()).max(1.0);
        let d = |dx: f64, dy: f64| m.spatial_det(&[p[0] + dx, p[1] + dy]).unwrap();
        let g = [(d(h, 0.0) - d(-h, 0.0)) / (2.0 * h), (d(0.0, h) - d(0.0, -h)) / (2.0 * h)];
        let s = m.eval_inverse_metric(p).unwrap().spatial();
        let form = g[0] * (s[0][0] * g[0] + s[0][1] * g[1]) + g[1] * (s[1][0] * g[0] + s[1][1] * g[1]);
        let tr = s[0][0] + s[1][1];
        let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
        let norm = 0.5 * tr.abs() + (0.25 * tr * tr - det).max(0.0).sqrt();
        worst = worst.max(form.abs() / ((g[0] * g[0] + g[1] * g[1]) * norm));
    }
    worst
}

const ACOUSTIC: [(f64, f64); 3] = [(-1.0, 1.0), (-2.0, 1.0), (-1.0, 0.5)];

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_acoustic_ergosphere() -> Outcome {
    let mut worst = 0.0f64;
    let mut rays = usize::MAX;
    for (a, b) in ACOUSTIC {
        let m = acoustic_vortex(a, b).unwrap();
        let c = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
        let exact = a.hypot(b);
        rays = rays.min(c.vertices.len());
        for r in c.radii() {
            worst = worst.max((r - exact).abs());
        }
    }
    check(rays >= 256 && worst < 1e-6, format!("{rays} rays per case, max |r − √(A²+B²)| = {worst:.3e} (< 1e-6)"))
}

fn c2_acoustic_horizon() -> Outcome {
    let t = Instant::now();
    let mut worst = 0.0f64;
    let mut samples = usize::MAX;
    for (a, b) in ACOUSTIC {
        let m = acoustic_vortex(a, b).unwrap();
        let c = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
        let h = find_limit_cycle(&m, &c, &HorizonOptions::default()).map_err(|e| e.to_string())?;
        samples = samples.min(h.radii.len());
        for r in &h.radii {
            worst = worst.max((r - a.abs()).abs());
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        samples >= 256 && worst < 1e-3 && secs < 60.0,
        format!("{samples} angles per case, max |ρ₀ − |A|| = {worst:.3e} (< 1e-3), {secs:.2} s (< 60 s)"),
    )
}

fn c3_schwarzschild_type() -> Outcome {
    let cases = [
        ("acoustic A=-1 B=0", acoustic_vortex(-1.0, 0.0).unwrap()),
        ("schwarzschild m=1", schwarzschild_equatorial(1.0).unwrap()),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, m) in cases {
        let c = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
        let form = max_char_form(&m, &c.points());
        ok &= c.classification == Classification::Characteristic
            && c.orientation == Orientation::BlackHole
            && form < 1e-6;
        parts.push(format!("{name}: {:?}/{:?}, char form {form:.2e}", c.classification, c.orientation));
    }
    check(ok, parts.join("; "))
}

fn c4_gordon() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (alpha, n, c) in [(1.0, 1.5, 1.0), (0.8, 1.3, 1.2)] {
        let m = gordon_radial(alpha, n, c).unwrap();
        let curve = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
        let exact = alpha * n / c;
        let mut r_err = 0.0f64;
        let mut angle_err = 0.0f64;
        for v in &curve.vertices {
            let p = v.position;
            let r = p[0].hypot(p[1]);
            r_err = r_err.max((r - exact).abs());
            // w = −α x / r²
            let w = [-alpha * p[0] / (r * r), -alpha * p[1] / (r * r)];
            let g = v.delta_grad;
            let cos = -(g[0] * w[0] + g[1] * w[1]) / (g[0].hypot(g[1]) * w[0].hypot(w[1]));
            angle_err = angle_err.max(cos.clamp(-1.0, 1.0).acos());
        }
        let form = max_char_form(&m, &curve.points());
        ok &= r_err < 1e-6
            && angle_err < 1e-3
            && curve.classification == Classification::Characteristic
            && curve.orientation == Orientation::BlackHole;
        parts.push(format!(
            "α={alpha} n={n} c={c}: |r − αn/c| {r_err:.2e}, ∠(∇Δ, −w) {angle_err:.2e} rad, char form {form:.2e}, {:?}/{:?}",
            curve.classification, curve.orientation
        ));
    }
    check(ok, parts.join("; "))
}

fn c5_kerr() -> Outcome {
    let (m, a) = (1.0f64, 0.5f64);
    let s = kerr_ergosurfaces(m, a, 256).map_err(|e| e.to_string())?;
    let m2 = kerr_restricted(m, a).unwrap();
    let d = (m * m - a * a).sqrt();
    let mut worst_dev = 0.0f64;
    let mut worst_form = 0.0f64;
    for (surface, r) in [(&s.outer, m + d), (&s.inner, m - d)] {
        // normal distance to ρ²/(r²+a²) + z²/r² = 1, to first order
        for p in &surface.points {
            let (ea, eb) = (r * r + a * a, r * r);
            let f = p[0] * p[0] / ea + p[1] * p[1] / eb - 1.0;
            let grad = (2.0 * p[0] / ea).hypot(2.0 * p[1] / eb);
            worst_dev = worst_dev.max(f.abs() / grad);
        }
        worst_form = worst_form.max(max_char_form(&m2, &surface.points));
    }
    check(
        worst_dev < 1e-4 && worst_form < 1e-6,
        format!("m=1 a=0.5: max normal deviation {worst_dev:.2e} (< 1e-4), normalized char form {worst_form:.2e} (< 1e-6)"),
    )
}

struct Drift {
    h_rate: f64,
    xi0_rate: f64,
    round_trip: Option<f64>,
    complete: bool,
}

fn launch<const N: usize>(m: &SpacetimeMetric<N>, x: [f64; N], xi: [f64; N], family: Family) -> Option<Drift> {
    let init = GeodesicState::new(m, 0.0, x, xi, family).ok()?;
    let opts = FlowOptions {
        rtol: 1e-10,
        atol: 1e-12,
        record: false,
        ..FlowOptions::default()
    };
    let fwd = flow(m, &init, Direction::Forward, 1.0, &opts).ok()?;
    let elapsed = fwd.last().x0.max(1.0);
    let complete = fwd.termination == Termination::MaxTime;
    let round_trip = if complete {
        let back = flow(m, &fwd.final_state(), Direction::Backward, fwd.last().x0, &opts).ok()?;
        let e = back.last().x;
        Some((0..N).map(|i| (e[i] - x[i]).powi(2)).sum::<f64>().sqrt())
    } else {
        None
    };
    Some(Drift {
        h_rate: fwd.h_drift_rate,
        xi0_rate: fwd.xi0_drift / elapsed,
        round_trip,
        complete,
    })
}

fn planar_point(rng: &mut ChaCha8Rng, r: (f64, f64)) -> [f64; 2] {
    let (rad, t) = (rng.gen_range(r.0..r.1), rng.gen_range(0.0..TAU));
    [rad * t.cos(), rad * t.sin()]
}

fn unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    loop {
        let v: [f64; N] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

fn c6_null_conservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let planar: Vec<(&str, SpacetimeMetric<2>, (f64, f64))> = vec![
        ("minkowski", minkowski::<2>(), (0.0, 3.0)),
        ("acoustic", acoustic_vortex(-1.0, 1.0).unwrap(), (0.5, 3.0)),
        ("gordon_radial", gordon_radial(1.0, 1.5, 1.0).unwrap(), (1.2, 4.0)),
        ("schwarzschild", schwarzschild_equatorial(1.0).unwrap(), (1.0, 6.0)),
    ];
    let kerr2 = kerr_restricted(1.0, 0.5).unwrap();
    let kerr3 = kerr_schild_3d(1.0, 0.5).unwrap();
    let (mut h, mut xi0, mut rt) = (0.0f64, 0.0f64, 0.0f64);
    // rays that reach a singular core (vortex centre, |w| = c) before t = 1
    // end with |ξ| → ∞, where an absolute bound on the quadratic H means
    // nothing; they are redrawn and reported separately
    let (mut launched, mut singular, mut singular_h) = (0, 0, 0.0f64);
    while launched < 1000 {
        let family = if rng.gen_bool(0.5) { Family::Plus } else { Family::Minus };
        let which = launched % 6;
        let d = match which {
            0..=3 => {
                let (_, m, r) = &planar[which];
                let x = planar_point(&mut rng, *r);
                launch(m, x, unit(&mut rng), family)
            }
            4 => {
                let x = [rng.gen_range(0.2..3.0), rng.gen_range(0.3..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 }];
                launch(&kerr2, x, unit(&mut rng), family)
            }
            _ => {
                let x: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
                if x[2].abs() < 0.3 || x.iter().map(|v| v * v).sum::<f64>() < 1.0 {
                    continue;
                }
                launch(&kerr3, x, unit(&mut rng), family)
            }
        };
        let Some(d) = d else { continue };
        if !d.complete {
            singular += 1;
            singular_h = singular_h.max(d.h_rate);
            continue;
        }
        launched += 1;
        h = h.max(d.h_rate);
        xi0 = xi0.max(d.xi0_rate);
        rt = rt.max(d.round_trip.unwrap_or(f64::INFINITY));
    }
    check(
        h < 1e-8 && rt < 1e-7,
        format!(
            "{launched} unit-time launches: max |H| drift {h:.2e}/time (< 1e-8), round trip {rt:.2e} (< 1e-7), \
             ξ₀ drift {xi0:.2e}/time (diagnostic); {singular} redrawn rays reached a singular core (max |H| {singular_h:.1e} there)"
        ),
    )
}

fn ad_vs_fd<const N: usize>(m: &SpacetimeMetric<N>, rng: &mut ChaCha8Rng, sample: impl Fn(&mut ChaCha8Rng) -> [f64; N]) -> f64 {
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 100 {
        let x = sample(rng);
        let Ok(jet) = m.eval_jet(&x) else { continue };
        let h = 1e-3 * x.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        let at = |l: usize, s: f64| {
            let mut y = x;
            y[l] += s;
            m.eval_inverse_metric(&y)
        };
        let mut ok = true;
        for l in 0..N {
            let (Ok(p2), Ok(p1), Ok(m1), Ok(m2)) = (at(l, 2.0 * h), at(l, h), at(l, -h), at(l, -2.0 * h)) else {
                ok = false;
                break;
            };
            for j in 0..=N {
                for k in j..=N {
                    let fd = (-p2.get(j, k) + 8.0 * p1.get(j, k) - 8.0 * m1.get(j, k) + m2.get(j, k)) / (12.0 * h);
                    let ad = jet.partial(j, k, l);
                    worst = worst.max((ad - fd).abs() / fd.abs().max(1.0));
                }
            }
        }
        if ok {
            n += 1;
        }
    }
    worst
}

fn c7_ad_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let s2 = Scope::new(2);
    let e = |src: &str| Expr::parse(src, &s2).unwrap();
    let swirl = gordon(
        [e("(-0.6*x1 + 0.3*x2)/(x1^2 + x2^2)"), e("(-0.6*x2 - 0.3*x1)/(x1^2 + x2^2)")],
        e("1.4 + 0.1*x1/(1 + x1^2 + x2^2)"),
        1.0,
    )
    .unwrap();
    let planar: Vec<(&str, SpacetimeMetric<2>, (f64, f64))> = vec![
        ("minkowski", minkowski::<2>(), (0.0, 3.0)),
        ("acoustic", acoustic_vortex(-1.0, 1.0).unwrap(), (0.3, 3.0)),
        ("schwarzschild", schwarzschild_equatorial(1.0).unwrap(), (0.3, 6.0)),
        ("gordon_radial", gordon_radial(1.0, 1.5, 1.0).unwrap(), (1.1, 4.0)),
        ("gordon", swirl, (1.0, 4.0)),
    ];
    let mut parts = Vec::new();
    let mut worst = 0.0f64;
    for (name, m, r) in &planar {
        let w = ad_vs_fd(m, &mut rng, |g| planar_point(g, *r));
        worst = worst.max(w);
        parts.push(format!("{name} {w:.1e}"));
    }
    let kerr2 = kerr_restricted(1.0, 0.5).unwrap();
    let w = ad_vs_fd(&kerr2, &mut rng, |g| [g.gen_range(0.1..3.0), g.gen_range(0.1..2.0)]);
    worst = worst.max(w);
    parts.push(format!("kerr {w:.1e}"));
    let kerr3 = kerr_schild_3d(1.0, 0.5).unwrap();
    let w = ad_vs_fd(&kerr3, &mut rng, |g| {
        let x: [f64; 3] = std::array::from_fn(|_| g.gen_range(-3.0..3.0));
        if x[2].abs() < 0.1 {
            [x[0], x[1], 0.5]
        } else {
            x
        }
    });
    worst = worst.max(w);
    parts.push(format!("kerr_schild_3d {w:.1e}"));
    let w = ad_vs_fd(&minkowski::<3>(), &mut rng, |g| std::array::from_fn(|_| g.gen_range(-3.0..3.0)));
    worst = worst.max(w);
    parts.push(format!("minkowski3 {w:.1e}"));
    check(worst < 1e-6, format!("100 points per metric, max relative error {worst:.2e} (< 1e-6): {}", parts.join(", ")))
}

fn c8_char_field() -> Outcome {
    let m = acoustic_vortex(-1.0, 1.0).unwrap();
    let curve = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
    let h = find_limit_cycle(&m, &curve, &HorizonOptions::default()).map_err(|e| e.to_string())?;
    let depth = h
        .points
        .iter()
        .map(|p| -m.spatial_det(p).unwrap())
        .fold(f64::INFINITY, f64::min);
    let chart = build_collar(&m, &curve, depth, 64, 64).map_err(|e| e.to_string())?;
    let field = build_char_field(&chart, &h, &FieldOptions::default()).map_err(|e| e.to_string())?;
    let hp = half_plane_map(&field);
    let mut drift = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for k in 0..16 {
        let family = if k % 2 == 0 { CharFamily::Plus } else { CharFamily::Minus };
        let start = [rng.gen_range(0.02..0.9) * depth, rng.gen_range(0.0..TAU)];
        let r = transport_drift(&chart, family, start, 5.0, (1e-4, 0.995 * depth)).map_err(|e| e.to_string())?;
        drift = drift.max(r.max_drift);
    }
    let grid = (field.rho.len(), field.theta.len());
    check(
        drift < 1e-4 && field.c1.slope > 0.0 && field.c1.r_squared > 0.99 && hp.fold.pass && grid == (256, 256),
        format!(
            "{}×{} grid: transport drift {drift:.2e} (< 1e-4), C₁ = {:.4} with R² = {:.4} (> 0.99), fold check {} ({} cells)",
            grid.0,
            grid.1,
            field.c1.slope,
            field.c1.r_squared,
            if hp.fold.pass { "pass" } else { "fail" },
            hp.fold.positive + hp.fold.negative + hp.fold.zero
        ),
    )
}

fn c9_section_independence() -> Outcome {
    let mut worst = 0.0f64;
    for (a, b) in ACOUSTIC {
        let m = acoustic_vortex(a, b).unwrap();
        let c = trace_ergosphere(&m, [0.0, 0.0], 256, 1e-13).map_err(|e| e.to_string())?;
        let run = |section| {
            let o = HorizonOptions {
                section_angle: section,
                ..HorizonOptions::default()
            };
            find_limit_cycle(&m, &c, &o).map_err(|e| e.to_string())
        };
        let (h0, h90) = (run(0.0)?, run(FRAC_PI_2)?);
        for (t, r) in h90.angles.iter().zip(&h90.radii) {
            worst = worst.max((h0.radius_at(*t) - r).abs());
        }
    }
    check(worst < 1e-3, format!("θ* = 0 vs θ* = π/2, max pointwise gap {worst:.2e} (< 1e-3)"))
}

fn c10_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let metrics = [
        acoustic_vortex(-1.0, 1.0).unwrap(),
        schwarzschild_equatorial(1.0).unwrap(),
        gordon_radial(1.0, 1.5, 1.0).unwrap(),
        kerr_restricted(1.0, 0.5).unwrap(),
    ];
    let mut xi0_err = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        let m = &metrics[n % metrics.len()];
        let x = planar_point(&mut rng, (1.1, 5.0));
        let xi = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
        let (Ok(g), Ok((p, q))) = (m.eval_inverse_metric(&x), solve_xi0(m, &x, &xi)) else { continue };
        let g00 = g.tt();
        let b = g.ts(0) * xi[0] + g.ts(1) * xi[1];
        let c = g.spatial_form(&xi);
        let s = (b * b - g00 * c).sqrt();
        let (np, nm) = ((-b + s) / g00, (-b - s) / g00);
        let scale = (b.abs() + s) / g00;
        xi0_err = xi0_err.max((p - np).abs().max((q - nm).abs()) / scale);
        n += 1;
    }
    let mut mu_err = 0.0f64;
    let mut n = 0;
    while n < 10_000 {
        let (a, r, c): (f64, f64, f64) = (rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        if a * c - r * r >= 0.0 || a.abs() < 1e-3 {
            continue;
        }
        let (p, q) = mu_pm(&[[a, r], [r, c]]).map_err(|e| e.to_string())?;
        let s = (r * r - a * c).sqrt();
        let (np, nm) = ((-r + s) / a, (-r - s) / a);
        let scale = (r.abs() + s) / a.abs();
        mu_err = mu_err.max((p - np).abs().max((q - nm).abs()) / scale);
        n += 1;
    }
    check(
        xi0_err < 1e-12 && mu_err < 1e-12,
        format!("10000 inputs each: solve_xi0 {xi0_err:.2e}, mu_pm {mu_err:.2e} relative to root scale (< 1e-12)"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("acoustic ergosphere radius", c1_acoustic_ergosphere),
        ("acoustic horizon as limit cycle", c2_acoustic_horizon),
        ("Schwarzschild-type detection", c3_schwarzschild_type),
        ("Gordon radial preset", c4_gordon),
        ("Kerr restricted ergosurfaces", c5_kerr),
        ("null conservation", c6_null_conservation),
        ("AD vs finite differences", c7_ad_oracle),
        ("characteristic field", c8_char_field),
        ("return-map section independence", c9_section_independence),
        ("brute-force root oracles", c10_brute_force),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match result {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1} s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1} s]", i + 1)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
