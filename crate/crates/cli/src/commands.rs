use std::f64::consts::TAU;
use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use horizon_lab::axisym::{kerr_ergosurfaces, kerr_radii, verify_characteristic, KerrSurface};
use horizon_lab::charcoords::{
    build_char_field, build_collar, half_plane_map, integrate_level_curve, CharFamily, FieldOptions,
};
use horizon_lab::ergosphere::{ray_root, trace_ergosphere, trace_ergosphere_with, Classification, ErgosphereCurve};
use horizon_lab::export::{self, Path2};
use horizon_lab::geodesics::{flow, launch_from_ergosphere, velocity, Direction, Family, FlowOptions, GeodesicState};
use horizon_lab::horizon::{find_limit_cycle, Horizon, HorizonError, HorizonOptions};
use horizon_lab::metric::builtin::kerr_restricted;
use horizon_lab::SpacetimeMetric;

use crate::source::{pair, planar_metric};
use crate::{CharArgs, Command, ErgoArgs, GeodesicArgs, HorizonArgs, KerrArgs, OutputArgs};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    pub fn runtime(message: impl std::fmt::Display) -> Self {
        Failure { code: 1, message: message.to_string() }
    }

    pub fn unsupported(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

const MIXED: &str = "the ergosphere is mixed (characteristic on part of it only); downstream commands do not support this case";
const SCHWARZSCHILD: &str = "Schwarzschild-type: horizon = ergosphere (see `horizon-lab ergosphere` for the curve)";

pub fn run(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Ergosphere(a) => cmd_ergosphere(&a, true),
        Command::Classify(a) => cmd_ergosphere(&a, false),
        Command::Geodesic(a) => cmd_geodesic(&a),
        Command::Horizon(a) => cmd_horizon(&a),
        Command::Charcoords(a) => cmd_charcoords(&a),
        Command::Kerr(a) => cmd_kerr(&a),
    }
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be positive, got {v}")))
    }
}

fn resolution(name: &str, n: usize) -> Result<(), Failure> {
    if n >= 16 {
        Ok(())
    } else {
        Err(Failure::usage(format!("--{name} must be at least 16, got {n}")))
    }
}

fn out_dir(o: &OutputArgs) -> Result<&Path, Failure> {
    fs::create_dir_all(&o.out).map_err(|e| Failure::runtime(format!("{}: {e}", o.out.display())))?;
    Ok(&o.out)
}

fn write_csv(dir: &Path, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<(), Failure> {
    export::csv_file(&dir.join(name), header, rows).map_err(Failure::runtime)
}

fn write_json(dir: &Path, name: &str, v: &Value) -> Result<(), Failure> {
    export::json_file(&dir.join(name), v).map_err(Failure::runtime)
}

fn write_svg(dir: &Path, name: &str, paths: &[Path2]) -> Result<(), Failure> {
    fs::write(dir.join(name), export::svg(paths)).map_err(Failure::runtime)
}

fn ergo_summary(m: &SpacetimeMetric<2>, c: &ErgosphereCurve) -> Value {
    let r = c.radii();
    json!({
        "metric": m.provenance(),
        "seed": c.seed,
        "rays": c.vertices.len(),
        "tol": c.tol,
        "char_tol": c.char_tol,
        "classification": c.classification,
        "orientation": c.orientation,
        "mean_radius": c.mean_radius(),
        "min_radius": c.min_radius(),
        "max_radius": r.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "max_char_form_normalized": c.max_char_form_normalized(),
        "max_kernel_residual": c.vertices.iter().map(|v| v.kernel_residual).fold(0.0, f64::max),
    })
}

fn cmd_ergosphere(a: &ErgoArgs, full: bool) -> Result<(), Failure> {
    resolution("rays", a.rays)?;
    positive("tol", a.tol)?;
    positive("char-tol", a.char_tol)?;
    let m = planar_metric(&a.metric)?;
    let seed = pair("seed", &a.seed)?;
    let dir = out_dir(&a.output)?;
    let curve = trace_ergosphere_with(&m, seed, a.rays, a.tol, a.char_tol).map_err(Failure::runtime)?;
    if full {
        write_csv(dir, "ergosphere.csv", &export::ERGOSPHERE_HEADER, export::ergosphere_rows(&curve))?;
        if a.output.svg {
            let pts = curve.points();
            write_svg(dir, "ergosphere.svg", &[Path2 { points: &pts, closed: true, stroke: "black" }])?;
        }
    }
    write_json(dir, "summary.json", &ergo_summary(&m, &curve))?;
    println!(
        "classification: {}, orientation: {}",
        serde_json::to_value(curve.classification).unwrap().as_str().unwrap_or(""),
        serde_json::to_value(curve.orientation).unwrap().as_str().unwrap_or("")
    );
    if curve.classification == Classification::Mixed {
        return Err(Failure::unsupported(MIXED));
    }
    Ok(())
}

fn cmd_geodesic(a: &GeodesicArgs) -> Result<(), Failure> {
    positive("tol", a.tol)?;
    positive("time", a.time)?;
    let m = planar_metric(&a.metric)?;
    let family = match a.family.as_str() {
        "plus" => Family::Plus,
        "minus" => Family::Minus,
        f => return Err(Failure::usage(format!("--family must be plus or minus, got {f:?}"))),
    };
    let direction = match a.direction.as_str() {
        "forward" => Direction::Forward,
        "backward" => Direction::Backward,
        d => return Err(Failure::usage(format!("--direction must be forward or backward, got {d:?}"))),
    };
    let dir = out_dir(&a.output)?;
    let init = match (&a.x, a.launch) {
        (Some(x), _) => {
            let x = pair("x", x)?;
            let xi = pair("xi", &a.xi)?;
            GeodesicState::new(&m, 0.0, x, xi, family).map_err(Failure::runtime)?
        }
        (None, Some(angle)) => {
            resolution("rays", a.rays)?;
            let curve = trace_ergosphere(&m, pair("seed", &a.seed)?, a.rays, 1e-12).map_err(Failure::runtime)?;
            launch_from_ergosphere(&m, &curve, angle, family).map_err(Failure::runtime)?
        }
        (None, None) => return Err(Failure::usage("geodesic needs --x X1:X2 (with --xi) or --launch ANGLE")),
    };
    let opts = FlowOptions {
        rtol: a.tol,
        atol: 1e-2 * a.tol,
        ..FlowOptions::default()
    };
    let g = flow(&m, &init, direction, a.time, &opts).map_err(Failure::runtime)?;

    // distance from the straight line through the start along the initial
    // velocity (the chord when the start is a cusp)
    let x0 = g.samples[0].x;
    let mut d = velocity(&m, &init).unwrap_or([0.0, 0.0]);
    if d[0].hypot(d[1]) == 0.0 {
        let e = g.last().x;
        d = [e[0] - x0[0], e[1] - x0[1]];
    }
    let n = d[0].hypot(d[1]);
    let line_residual = if n > 0.0 {
        g.samples
            .iter()
            .map(|s| ((s.x[0] - x0[0]) * d[1] - (s.x[1] - x0[1]) * d[0]).abs() / n)
            .fold(0.0, f64::max)
    } else {
        0.0
    };
    write_csv(dir, "trajectory.csv", &export::TRAJECTORY_HEADER, export::trajectory_rows(&g))?;
    let report = json!({
        "metric": m.provenance(),
        "family": g.family,
        "direction": g.direction,
        "start": { "x": init.x, "xi": init.xi, "xi0": g.samples[0].xi0 },
        "time": a.time,
        "rtol": a.tol,
        "termination": g.termination,
        "failure": g.failure,
        "steps": g.steps,
        "samples": g.samples.len(),
        "final_time": g.last().x0,
        "max_abs_h": g.max_abs_h,
        "h_drift_rate": g.h_drift_rate,
        "xi0_drift": g.xi0_drift,
        "line_residual": line_residual,
    });
    write_json(dir, "run.json", &report)?;
    if a.output.svg {
        let pts: Vec<[f64; 2]> = g.samples.iter().map(|s| s.x).collect();
        write_svg(dir, "trajectory.svg", &[Path2 { points: &pts, closed: false, stroke: "black" }])?;
    }
    println!("termination: {:?}, max |H|: {:e}", g.termination, g.max_abs_h);
    Ok(())
}

struct HorizonRun {
    m: SpacetimeMetric<2>,
    curve: ErgosphereCurve,
    horizon: Horizon,
    opts: HorizonOptions,
}

fn run_horizon(a: &HorizonArgs) -> Result<HorizonRun, Failure> {
    resolution("rays", a.rays)?;
    resolution("samples", a.samples)?;
    positive("tol", a.tol)?;
    let m = planar_metric(&a.metric)?;
    let seed = pair("seed", &a.seed)?;
    let curve = trace_ergosphere(&m, seed, a.rays, 1e-12)
        .map_err(|e| Failure::runtime(format!("no usable ergoregion about the seed: {e}")))?;
    match curve.classification {
        Classification::Characteristic => return Err(Failure::unsupported(SCHWARZSCHILD)),
        Classification::Mixed => return Err(Failure::unsupported(MIXED)),
        Classification::NonCharacteristic => {}
    }
    let bracket = match &a.bracket {
        Some(b) => {
            let [lo, hi] = pair("bracket", b)?;
            Some((lo, hi))
        }
        None => None,
    };
    let opts = HorizonOptions {
        section_angle: a.section,
        bracket,
        tol: a.tol,
        n_samples: a.samples,
        candidate_scan: a.scan,
        ..HorizonOptions::default()
    };
    let horizon = find_limit_cycle(&m, &curve, &opts).map_err(|e| match e {
        HorizonError::SchwarzschildType => Failure::unsupported(SCHWARZSCHILD),
        HorizonError::Mixed => Failure::unsupported(MIXED),
        e @ (HorizonError::BadBracket { .. } | HorizonError::BracketOutsideStrip { .. }) => Failure::runtime(e),
        e => Failure::runtime(format!("{e} (try another --section or a narrower --bracket)")),
    })?;
    Ok(HorizonRun { m, curve, horizon, opts })
}

fn horizon_report(r: &HorizonRun) -> Value {
    let h = &r.horizon;
    let gap = h
        .angles
        .iter()
        .zip(&h.radii)
        .map(|(&t, &rad)| ray_root(&r.m, h.seed, t, None, 1e-12).map_or(f64::NAN, |e| e - rad))
        .fold(f64::INFINITY, f64::min);
    let mean = h.radii.iter().sum::<f64>() / h.radii.len() as f64;
    json!({
        "metric": r.m.provenance(),
        "seed": h.seed,
        "section_angles": [h.record.section_angle],
        "bracket": r.opts.bracket,
        "tol": r.opts.tol,
        "fixed_point": h.record.fixed_point,
        "iterations": h.record.iterates.len(),
        "iterates": h.record.iterates,
        "converged": h.record.converged,
        "residual": h.residual,
        "samples": h.radii.len(),
        "mean_radius": mean,
        "min_radius": h.radii.iter().cloned().fold(f64::INFINITY, f64::min),
        "max_radius": h.radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        "min_gap_to_ergosphere": gap,
        "candidates": h.candidates,
        "ergosphere_mean_radius": r.curve.mean_radius(),
    })
}

fn cmd_horizon(a: &HorizonArgs) -> Result<(), Failure> {
    let dir = out_dir(&a.output)?;
    let r = run_horizon(a)?;
    write_csv(dir, "horizon.csv", &export::HORIZON_HEADER, export::horizon_rows(&r.m, &r.horizon))?;
    write_json(dir, "report.json", &horizon_report(&r))?;
    if a.output.svg {
        let e = r.curve.points();
        write_svg(
            dir,
            "horizon.svg",
            &[
                Path2 { points: &e, closed: true, stroke: "black" },
                Path2 { points: &r.horizon.points, closed: true, stroke: "red" },
            ],
        )?;
    }
    println!("fixed point: {:.12}, residual: {:e}", r.horizon.record.fixed_point, r.horizon.residual);
    if r.horizon.candidates.len() > 1 {
        eprintln!("warning: {} fixed points in the bracket: {:?}", r.horizon.candidates.len(), r.horizon.candidates);
    }
    Ok(())
}

fn cmd_charcoords(a: &CharArgs) -> Result<(), Failure> {
    resolution("n-rho", a.n_rho)?;
    resolution("n-theta", a.n_theta)?;
    let dir = out_dir(&a.horizon.output)?;
    let r = run_horizon(&a.horizon)?;
    let depth = r
        .horizon
        .points
        .iter()
        .map(|p| r.m.spatial_det(p).map_or(f64::NAN, |d| -d))
        .fold(f64::INFINITY, f64::min);
    let chart = build_collar(&r.m, &r.curve, depth, 64, 64).map_err(Failure::runtime)?;
    let opts = FieldOptions {
        n_rho: a.n_rho,
        n_theta: a.n_theta,
        ..FieldOptions::default()
    };
    let field = build_char_field(&chart, &r.horizon, &opts).map_err(Failure::runtime)?;
    let hp = half_plane_map(&field);
    write_csv(dir, "field.csv", &export::FIELD_HEADER, export::field_rows(&field, &hp))?;
    let report = json!({
        "metric": r.m.provenance(),
        "grid": { "n_rho": a.n_rho, "n_theta": a.n_theta },
        "orientation": chart.orientation(),
        "rho0_min": field.rho0_min,
        "c1_fit": field.c1,
        "max_delta_tilde_interior": field.max_delta_tilde_interior,
        "max_abs_delta_tilde_boundary": field.max_delta_tilde_boundary,
        "fold_check": if hp.fold.pass { "pass" } else { "fail" },
        "fold": hp.fold,
        "horizon_image": hp.horizon_image,
        "depth_coordinate": "y2",
        "horizon": horizon_report(&r),
    });
    write_json(dir, "report.json", &report)?;
    if a.horizon.output.svg {
        let e = r.curve.points();
        let mut curves = Vec::new();
        for family in [CharFamily::Plus, CharFamily::Minus] {
            for k in 0..8 {
                let t0 = TAU * k as f64 / 8.0;
                let lc = integrate_level_curve(&chart, t0, family, field.rho[field.rho.len() - 1])
                    .map_err(Failure::runtime)?;
                let pts: Vec<[f64; 2]> = lc
                    .points
                    .iter()
                    .filter_map(|p| chart.forward(p[0], p[1]).ok())
                    .collect();
                curves.push((family, pts));
            }
        }
        let mut paths = vec![
            Path2 { points: &e, closed: true, stroke: "black" },
            Path2 { points: &r.horizon.points, closed: true, stroke: "red" },
        ];
        for (f, pts) in &curves {
            let stroke = if *f == CharFamily::Plus { "steelblue" } else { "darkorange" };
            paths.push(Path2 { points: pts, closed: false, stroke });
        }
        write_svg(dir, "charcoords.svg", &paths)?;
    }
    println!(
        "C1 slope: {:.6}, R²: {:.6}, fold check: {}",
        field.c1.slope,
        field.c1.r_squared,
        if hp.fold.pass { "pass" } else { "fail" }
    );
    if !hp.fold.pass {
        return Err(Failure::runtime(format!("fold detected at cells {:?}", hp.fold.fold_cells)));
    }
    Ok(())
}

fn surface_json(s: &KerrSurface, m2: &SpacetimeMetric<2>) -> Result<Value, Failure> {
    let c = verify_characteristic(m2, &s.points, [0.0, 0.0]).map_err(Failure::runtime)?;
    Ok(json!({
        "r": s.r,
        "semi_axis_rho": s.semi_axis_rho,
        "semi_axis_z": s.semi_axis_z,
        "samples": s.points.len(),
        "max_ellipse_deviation": s.max_ellipse_deviation,
        "max_abs_delta": s.max_abs_delta,
        "max_char_form_normalized": c.max_normalized,
        "orientation": c.orientation,
    }))
}

fn cmd_kerr(a: &KerrArgs) -> Result<(), Failure> {
    resolution("samples", a.samples)?;
    let dir = out_dir(&a.output)?;
    let s = kerr_ergosurfaces(a.m, a.a, a.samples).map_err(|e| Failure::usage(e.to_string()))?;
    let m2 = kerr_restricted(a.m, a.a).map_err(Failure::runtime)?;
    let (rp, rm) = kerr_radii(a.m, a.a).unwrap_or((f64::NAN, f64::NAN));
    write_csv(dir, "kerr_outer.csv", &export::KERR_HEADER, export::kerr_rows(&s.outer))?;
    write_csv(dir, "kerr_inner.csv", &export::KERR_HEADER, export::kerr_rows(&s.inner))?;
    let report = json!({
        "m": a.m,
        "a": a.a,
        "r_plus": rp,
        "r_minus": rm,
        "max_ellipse_deviation": s.outer.max_ellipse_deviation.max(s.inner.max_ellipse_deviation),
        "outer": surface_json(&s.outer, &m2)?,
        "inner": surface_json(&s.inner, &m2)?,
    });
    write_json(dir, "report.json", &report)?;
    if a.output.svg {
        write_svg(
            dir,
            "kerr.svg",
            &[
                Path2 { points: &s.outer.points, closed: true, stroke: "black" },
                Path2 { points: &s.inner.points, closed: true, stroke: "red" },
            ],
        )?;
    }
    println!(
        "r+ = {rp:.12}, r- = {rm:.12}, max ellipse deviation: {:e}",
        s.outer.max_ellipse_deviation.max(s.inner.max_ellipse_deviation)
    );
    Ok(())
}
