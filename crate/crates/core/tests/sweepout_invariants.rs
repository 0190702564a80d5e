use freebdy::scenario::SweepoutKind;
use freebdy::sweepout::{
    almost_maximal_slices, generate_scenario_sweepout, precondition_sweepout, tighten_sweepout, width_estimate, StopReason,
    TightenConfig,
};
use freebdy::{DiscreteCurve, ExecMode, Point, PsiConfig, Scenario, Sweepout};
use std::f64::consts::PI;

fn small_config(l: usize, sweeps: usize, mode: ExecMode) -> TightenConfig {
    let mut cfg = TightenConfig::new(PsiConfig::new(l).unwrap());
    cfg.max_sweeps = sweeps;
    cfg.mode = mode;
    cfg
}

/// Horizontal chords of the disk bent upward by `bump·sin(πs)·sin(πt)`; the
/// family no longer contains a diameter.
fn bent_disk_sweepout(slices: usize, segments: usize, bump: f64) -> Sweepout {
    let s = Scenario::disk_circle();
    let curves = (0..=slices)
        .map(|i| {
            let t = i as f64 / slices as f64;
            let y = 16.0 * (PI * (t - 0.5)).sin();
            let half = (256.0 - y * y).max(0.0).sqrt();
            DiscreteCurve::from_fn(segments, true, |u| {
                Point::new(-half + 2.0 * half * u, y + bump * (PI * u).sin() * (PI * t).sin(), 0.0)
            })
        })
        .collect();
    Sweepout::new(curves, s.descriptor).unwrap()
}

#[test]
fn tightening_is_monotone_and_keeps_end_slices() {
    let s = Scenario::sphere_equator();
    let sw = generate_scenario_sweepout(SweepoutKind::Hemisphere, &s, 16, 256).unwrap();
    let cfg = small_config(16, 25, ExecMode::Sequential);
    let pre = precondition_sweepout(&sw, &s, &cfg.psi, cfg.mode).unwrap();
    assert!(pre.energies().iter().zip(sw.energies()).all(|(a, b)| *a <= b + 1e-9 * b.max(1.0)));
    let (out, report) = tighten_sweepout(&pre, &s, &cfg).unwrap();
    assert_eq!(out.slices[0], sw.slices[0]);
    assert_eq!(out.slices[16], sw.slices[16]);
    let w0 = report.width.history[0];
    assert!(report.width.history.windows(2).all(|w| w[1] <= w[0] + 1e-9 * w0));
    assert!(report.sweeps.iter().all(|r| r.max_energy_increase <= 1e-9));
    let analytic = report.analytic_width.unwrap();
    assert!(report.width.history.iter().all(|&w| w > 0.5 * analytic));
    assert!(report.sweeps.iter().all(|r| r.continuity_modulus.is_finite()));
    out.validate(&s).unwrap();
}

#[test]
fn sequential_and_parallel_tightening_agree_bitwise() {
    let s = Scenario::disk_circle();
    let sw = generate_scenario_sweepout(SweepoutKind::Disk, &s, 12, 128).unwrap();
    let seq = tighten_sweepout(&sw, &s, &small_config(16, 5, ExecMode::Sequential)).unwrap();
    let par = tighten_sweepout(&sw, &s, &small_config(16, 5, ExecMode::Parallel)).unwrap();
    assert_eq!(seq.0, par.0);
    assert_eq!(serde_json::to_string(&seq.1.sweeps).unwrap(), serde_json::to_string(&par.1.sweeps).unwrap());
}

#[test]
fn coarse_bent_family_stops_when_slices_drift_apart() {
    let s = Scenario::disk_circle();
    let cfg = small_config(16, 400, ExecMode::Parallel);
    let sw = precondition_sweepout(&bent_disk_sweepout(24, 256, 6.0), &s, &cfg.psi, cfg.mode).unwrap();
    let (out, report) = tighten_sweepout(&sw, &s, &cfg).unwrap();
    assert!(matches!(report.stop, StopReason::ContinuityLost { .. }), "{:?}", report.stop);
    assert!(out.continuity_modulus() <= report.continuity_limit);
    assert!(report.width.value > 0.95 * 1024.0, "width {}", report.width.value);
}

#[test]
fn fine_bent_family_tightens_towards_the_diameter_width() {
    let s = Scenario::disk_circle();
    let cfg = small_config(16, 400, ExecMode::Parallel);
    let sw = precondition_sweepout(&bent_disk_sweepout(96, 256, 6.0), &s, &cfg.psi, cfg.mode).unwrap();
    let w0 = width_estimate(&sw).value;
    assert!(w0 > 1024.0 * 1.05, "initial width {w0}");
    let (_, report) = tighten_sweepout(&sw, &s, &cfg).unwrap();
    let w = report.width.value;
    assert!((w - 1024.0).abs() / 1024.0 < 1e-2, "width {w} after {:?}", report.stop);
    let best = report.best.unwrap();
    assert!((best.length - 32.0).abs() < 0.32, "length {}", best.length);
    assert!(best.analytic_distance.unwrap() < 1.0);
}

#[test]
fn point_sweepout_has_zero_width() {
    let s = Scenario::disk_circle();
    let sw = generate_scenario_sweepout(SweepoutKind::Point, &s, 8, 32).unwrap();
    let (_, report) = tighten_sweepout(&sw, &s, &small_config(16, 10, ExecMode::Sequential)).unwrap();
    assert_eq!(report.width.value, 0.0);
    assert_eq!(report.stop, StopReason::AllPointCurves);
    assert!(!report.nontrivial());
    assert_eq!(almost_maximal_slices(&sw, 0.0).len(), 9);
}
