//! Metric selection from `--builtin`/`--config` and the parameter flags.

use std::fs;

use horizon_lab::metric::builtin::{acoustic_vortex, gordon_radial, kerr_restricted, minkowski, schwarzschild_equatorial};
use horizon_lab::metric::config::{parse_metric_config, AnyMetric};
use horizon_lab::SpacetimeMetric;

use crate::commands::Failure;
use crate::MetricArgs;

pub fn planar_metric(args: &MetricArgs) -> Result<SpacetimeMetric<2>, Failure> {
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        let any = parse_metric_config(&text).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
        return match any {
            AnyMetric::Planar(m) => Ok(m),
            AnyMetric::Spatial(_) => Err(Failure::usage(
                "this command needs a 2+1 metric (n = 2); use the kerr subcommand for 3+1 Kerr",
            )),
        };
    }
    let name = args.builtin.as_deref().unwrap_or_default();
    let given = [
        ("A", args.a_upper),
        ("B", args.b_upper),
        ("m", args.m),
        ("a", args.a),
        ("alpha", args.alpha),
        ("n-index", args.n_index),
        ("c", args.c),
    ];
    let (required, optional): (&[&str], &[&str]) = match name {
        "minkowski" => (&[], &[]),
        "acoustic" => (&["A", "B"], &[]),
        "schwarzschild" => (&["m"], &[]),
        "gordon_radial" => (&["alpha", "n-index"], &["c"]),
        "kerr" => (&["m", "a"], &[]),
        other => {
            return Err(Failure::usage(format!(
                "unknown builtin {other:?}; expected minkowski, acoustic, schwarzschild, gordon_radial or kerr"
            )))
        }
    };
    for (flag, v) in given {
        let used = required.contains(&flag) || optional.contains(&flag);
        if v.is_none() && required.contains(&flag) {
            return Err(Failure::usage(format!("builtin {name} requires --{flag}")));
        }
        if v.is_some() && !used {
            return Err(Failure::usage(format!("builtin {name} does not take --{flag}")));
        }
    }
    let p = |v: Option<f64>| v.unwrap_or_default();
    let m = match name {
        "minkowski" => Ok(minkowski::<2>()),
        "acoustic" => acoustic_vortex(p(args.a_upper), p(args.b_upper)),
        "schwarzschild" => schwarzschild_equatorial(p(args.m)),
        "gordon_radial" => gordon_radial(p(args.alpha), p(args.n_index), args.c.unwrap_or(1.0)),
        _ => kerr_restricted(p(args.m), p(args.a)),
    };
    m.map_err(|e| Failure::usage(e.to_string()))
}

pub fn pair(flag: &str, s: &str) -> Result<[f64; 2], Failure> {
    let bad = || Failure::usage(format!("--{flag} expects two numbers as X:Y, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok([a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?])
}
