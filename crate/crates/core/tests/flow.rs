use std::f64::consts::PI;

use mcflab_core::flow::{
    flow_step, integrate_fixed, redistribute, run_flow, spacing_ratio, FlowConfig, FlowError,
    ShapeName, StopReason,
};
use mcflab_core::io::diagnostics_csv;
use mcflab_core::model::ModelSpace;
use mcflab_core::surface::{circle, ellipse, geodesic_circle, sphere};
use mcflab_core::verify::geodesic_radius_track;
use proptest::prelude::*;

fn circle_config(n: usize) -> FlowConfig {
    FlowConfig::new(ModelSpace::flat(2), ShapeName::Circle, vec![1.0], vec![n])
}

#[test]
fn geodesic_circle_step_follows_spherical_ode() {
    let model = ModelSpace::homogeneous(1.0);
    let rho = 0.5;
    let dt = 1e-5;
    let s = geodesic_circle(model, rho, 256).unwrap();
    let snaps = integrate_fixed(&s, dt, 1, 1).unwrap();
    let track = geodesic_radius_track(&snaps);
    // base curvature 3: geodesic curvature √3 cot(√3 ρ)
    let expected = dt * 3f64.sqrt() / (3f64.sqrt() * rho).tan();
    let got = track[0].1 - track[1].1;
    assert!((track[0].1 - rho).abs() < 1e-12);
    assert!((got - expected).abs() < 1e-7, "decrease {got} vs {expected}");
}

#[test]
fn material_ids_survive_steps() {
    let s = ellipse(2.0, 1.0, 64).unwrap();
    let n = flow_step(&s, 1e-4).unwrap();
    assert_eq!(n.as_curve().unwrap().ids, s.as_curve().unwrap().ids);
}

#[test]
fn shrinking_circle_extinction_time() {
    let traj = run_flow(&circle_config(128)).unwrap();
    assert_eq!(traj.stop, StopReason::HStop);
    assert!((traj.estimated_t - 0.5).abs() < 0.01, "T = {}", traj.estimated_t);
    assert_eq!(traj.rows().count(), traj.snapshots.len());
    let last = traj.rows().last().unwrap();
    assert_eq!(last.stop, Some(StopReason::HStop));
}

#[test]
fn shrinking_sphere_extinction_time() {
    let config = FlowConfig::new(ModelSpace::flat(3), ShapeName::Sphere, vec![1.0], vec![32, 64]);
    let traj = run_flow(&config).unwrap();
    assert!((traj.estimated_t - 0.25).abs() < 0.005, "T = {}", traj.estimated_t);
}

#[test]
fn ellipse_rounds_off() {
    let mut config = FlowConfig::new(ModelSpace::flat(2), ShapeName::Ellipse, vec![2.0, 1.0], vec![128]);
    config.stops.min_volume_fraction = 1e-6;
    config.cadence = 200;
    let traj = run_flow(&config).unwrap();
    assert_eq!(traj.stop, StopReason::HStop);
    let last = traj.rows().last().unwrap();
    assert!(last.collapse_ratio <= 1.05, "ratio {}", last.collapse_ratio);
}

#[test]
fn step_budget_and_volume_stops() {
    let mut c = circle_config(64);
    c.stops.max_steps = 25;
    let traj = run_flow(&c).unwrap();
    assert_eq!(traj.stop, StopReason::MaxSteps);
    assert_eq!(traj.steps, 25);
    assert_eq!(traj.last().step, 25);

    let mut c = circle_config(64);
    c.stops.min_volume_fraction = 0.5;
    let traj = run_flow(&c).unwrap();
    assert_eq!(traj.stop, StopReason::MinVolume);
    // the length has just dropped below half of 2π
    let len = traj.rows().last().unwrap().vol;
    assert!(len <= PI && len > 0.95 * PI, "length {len}");
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = circle_config(64);
    c.cfl = 0.0;
    assert!(matches!(run_flow(&c), Err(FlowError::Validation(m)) if m.contains("cfl")));
    let mut c = circle_config(8);
    c.cadence = 1;
    assert!(run_flow(&c).is_err());
}

#[test]
fn redistribution_is_flagged() {
    let mut c = FlowConfig::new(ModelSpace::flat(2), ShapeName::Ellipse, vec![3.0, 1.0], vec![64]);
    c.redistribute = true;
    c.cadence = 1;
    c.stops.max_steps = 4000;
    let traj = run_flow(&c).unwrap();
    assert!(traj.snapshots.iter().any(|s| s.redistributed));
    for s in &traj.snapshots {
        assert!(spacing_ratio(s.surface.as_curve().unwrap()) <= 1.2 + 1e-9);
    }
    c.redistribute = false;
    let plain = run_flow(&c).unwrap();
    assert!(plain.snapshots.iter().all(|s| !s.redistributed));
}

#[test]
fn redistribute_keeps_a_uniform_circle() {
    let s = circle(1.5, 64).unwrap();
    let r = redistribute(&s);
    for (a, b) in s.as_curve().unwrap().points.iter().zip(&r.as_curve().unwrap().points) {
        assert!((a - b).norm() < 1e-12);
    }
}

#[test]
fn runs_are_deterministic() {
    let mut c = FlowConfig::new(ModelSpace::flat(3), ShapeName::Ellipsoid, vec![2.0, 1.0, 1.0], vec![16, 32]);
    c.stops.max_steps = 300;
    let a = diagnostics_csv(&run_flow(&c).unwrap(), &c.deltas);
    let b = diagnostics_csv(&run_flow(&c).unwrap(), &c.deltas);
    assert_eq!(a, b);
}

#[test]
fn sphere_stays_round_under_steps() {
    let s = sphere(1.0, 24, 48).unwrap();
    let snaps = integrate_fixed(&s, 1e-4, 50, 50).unwrap();
    let r = &snaps[1].surface.as_graph().unwrap().r;
    let (lo, hi) = r.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi - lo < 1e-9, "spread {}", hi - lo);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn circle_step_matches_the_round_ode(r in 0.5f64..4.0, k in 0u32..4) {
        let dt = 1e-5 * 2f64.powi(k as i32);
        let s = circle(r, 64).unwrap();
        let n = flow_step(&s, dt).unwrap();
        let c = n.as_curve().unwrap();
        // the circle through three vertices of a regular polygon is the circle itself
        for p in &c.points {
            prop_assert!((p.norm() - (r - dt / r)).abs() < 1e-12 * r);
        }
    }
}
