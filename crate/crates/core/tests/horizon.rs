use horizon_lab::ergosphere::{trace_ergosphere, Orientation};
use horizon_lab::horizon::{
    find_limit_cycle, iterate_return, poincare_return, trapped_probe, Disk, HorizonError, HorizonOptions,
};
use horizon_lab::metric::builtin::{acoustic_vortex, minkowski};

fn acoustic(a: f64, b: f64) -> (horizon_lab::SpacetimeMetric<2>, horizon_lab::ergosphere::ErgosphereCurve) {
    let m = acoustic_vortex(a, b).unwrap();
    let c = trace_ergosphere(&m, [0.0, 0.0], 128, 1e-13).unwrap();
    (m, c)
}

#[test]
fn spiral_iterates_approach_monotonically() {
    let (m, c) = acoustic(-1.0, 1.0);
    let o = HorizonOptions::default();
    for start in [0.8, 1.3] {
        let it = iterate_return(&m, &c, start, 4, &o).unwrap();
        let gaps: Vec<f64> = it.iter().map(|r| (r - 1.0).abs()).collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "{it:?}");
        let steps: Vec<f64> = it.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        assert!(steps.windows(2).all(|w| w[1] < w[0]), "{steps:?}");
    }
}

#[test]
fn start_near_ergosphere_never_expands_past_it() {
    let (m, c) = acoustic(-1.0, 1.0);
    match poincare_return(&m, &c, 1.45, &HorizonOptions::default()) {
        Ok(it) => assert!(it.returned < 2f64.sqrt()),
        Err(e) => assert!(matches!(e, HorizonError::ExitedErgoregion { .. }), "{e}"),
    }
}

#[test]
fn horizon_lies_inside_ergoregion_and_reports_one_candidate() {
    let (m, c) = acoustic(-2.0, 1.0);
    let o = HorizonOptions { candidate_scan: 8, ..HorizonOptions::default() };
    let h = find_limit_cycle(&m, &c, &o).unwrap();
    assert!(h.radii.iter().all(|r| (r - 2.0).abs() < 1e-3));
    assert!(h.radii.iter().all(|&r| r < 5f64.sqrt()));
    assert_eq!(h.candidates.len(), 1);
    assert!(h.residual < 10.0 * o.tol);
    assert!(h.record.converged);
}

#[test]
fn bad_bracket_is_reported() {
    let (m, c) = acoustic(-1.0, 1.0);
    let o = HorizonOptions { bracket: Some((1.1, 1.3)), ..HorizonOptions::default() };
    assert!(matches!(find_limit_cycle(&m, &c, &o), Err(HorizonError::BadBracket { .. })));
}

#[test]
fn minkowski_has_no_ergoregion() {
    assert!(trace_ergosphere(&minkowski::<2>(), [0.0, 0.0], 64, 1e-12).is_err());
}

#[test]
fn trapped_probe_black_and_white_holes() {
    let region = Disk { center: [0.0, 0.0], radius: 0.5 };
    let (m, _) = acoustic(-1.0, 1.0);
    let r = trapped_probe(&m, region, 16, 5.0).unwrap();
    assert_eq!(r.forward_fraction, 1.0);
    assert_eq!(r.verdict, Orientation::BlackHole);

    let (w, _) = acoustic(1.0, 1.0);
    let r = trapped_probe(&w, region, 16, 5.0).unwrap();
    assert!(r.forward_fraction < 1.0);
    assert_eq!(r.backward_fraction, 1.0);
    assert_eq!(r.verdict, Orientation::WhiteHole);

    let r = trapped_probe(&minkowski::<2>(), region, 16, 5.0).unwrap();
    assert!(r.forward_fraction < 0.05, "{}", r.forward_fraction);

    let straddle = Disk { center: [0.0, 0.0], radius: 2.0 };
    assert!(matches!(trapped_probe(&m, straddle, 16, 1.0), Err(HorizonError::RegionStraddlesErgosphere)));
}
