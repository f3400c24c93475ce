use std::f64::consts::PI;

use mcflab_core::flow::{cfl_dt, integrate_fixed, run_flow, FlowConfig, ShapeName, Snapshot};
use mcflab_core::geometry::compute_geometry;
use mcflab_core::model::ModelSpace;
use mcflab_core::surface::{circle, ellipse, ellipsoid, sphere};
use mcflab_core::verify::{
    closed_form_window, integrated_volume_residuals, mp_scalar_run, mp_tensor_run,
    random_scalar_case, random_tensor_case, round_radius, simons_refinement_study,
    temporal_refinement_study, triple_residual, verify_a_norm_evolution, verify_h_evolution,
    verify_metric_evolution, verify_simons, verify_suite, verify_volume_evolution, Background,
    Equation, PolynomialTypeMap, Primitive, SuiteOptions, Term, Value, VerifyError, Window, M2,
};
use proptest::prelude::*;

fn round_config(name: ShapeName) -> FlowConfig {
    match name {
        ShapeName::Circle => FlowConfig::new(ModelSpace::flat(2), name, vec![1.0], vec![256]),
        ShapeName::Sphere => FlowConfig::new(ModelSpace::flat(3), name, vec![1.0], vec![64, 128]),
        _ => FlowConfig::new(ModelSpace::homogeneous(1.0), name, vec![0.5], vec![256]),
    }
}

fn power_map(rank: u8, terms: &[(f64, u32)]) -> PolynomialTypeMap {
    let terms = terms
        .iter()
        .map(|&(coeff, k)| Term {
            coeff,
            chain: vec![Primitive::Power(k)],
        })
        .collect();
    PolynomialTypeMap::new(rank, rank, terms).unwrap()
}

#[test]
fn closed_form_windows_meet_the_round_ceiling() {
    for name in [ShapeName::Circle, ShapeName::Sphere] {
        let config = round_config(name);
        let w = closed_form_window(&config, 0.01, 1e-5).unwrap();
        for rep in [
            verify_metric_evolution(&w, Window::all(), 1e-6).unwrap(),
            verify_h_evolution(&w, Window::all(), &config.model, 1e-6).unwrap(),
            verify_a_norm_evolution(&w, Window::all(), 1e-6).unwrap(),
        ] {
            assert!(rep.pass && rep.residual_max <= 1e-6, "{name:?} {}: {}", rep.equation, rep.residual_max);
        }
    }
}

#[test]
fn geodesic_circle_forms_agree() {
    let config = round_config(ShapeName::GeodesicCircle);
    let w = closed_form_window(&config, 0.01, 1e-5).unwrap();
    let h = verify_h_evolution(&w, Window::all(), &config.model, 1e-6).unwrap();
    assert!(h.pass, "{}", h.residual_max);
    assert!(h.form_gap.unwrap() <= 1e-12);
    let m = verify_metric_evolution(&w, Window::all(), 1e-6).unwrap();
    assert!(m.pass, "{}", m.residual_max);
}

#[test]
fn exact_round_radii() {
    let c = round_config(ShapeName::Circle);
    assert!((round_radius(&c, 0.32).unwrap().unwrap() - 0.6).abs() < 1e-15);
    assert_eq!(round_radius(&c, 0.6).unwrap(), None);
    let s = round_config(ShapeName::Sphere);
    assert!((round_radius(&s, 0.09).unwrap().unwrap() - 0.8).abs() < 1e-15);
    let e = FlowConfig::new(ModelSpace::flat(2), ShapeName::Ellipse, vec![2.0, 1.0], vec![64]);
    assert!(round_radius(&e, 0.0).is_err());
}

#[test]
fn volume_rates_on_round_data() {
    // dL/dt = -2π/r for the circle, dA/dt = -16π for the sphere
    for name in [ShapeName::Circle, ShapeName::Sphere] {
        let w = closed_form_window(&round_config(name), 0.05, 1e-5).unwrap();
        let (worst, _) = integrated_volume_residuals(&w).unwrap();
        assert!(worst < 1e-6, "{name:?} {worst}");
        assert!(verify_volume_evolution(&w, 0.02).unwrap().pass);
    }
}

#[test]
fn ellipse_volume_residual_along_a_run() {
    let mut c = FlowConfig::new(ModelSpace::flat(2), ShapeName::Ellipse, vec![2.0, 1.0], vec![128]);
    c.stops.max_steps = 2000;
    let traj = run_flow(&c).unwrap();
    let rep = verify_volume_evolution(&traj.snapshots, 0.02).unwrap();
    assert!(rep.pass && rep.residual_max < 0.02, "{}", rep.residual_max);
}

#[test]
fn ellipse_residuals_converge_at_first_order_in_time() {
    let s = ellipse(2.0, 1.0, 128).unwrap();
    let dt = cfl_dt(&s, &compute_geometry(&s).unwrap(), 0.2).unwrap();
    for eq in [Equation::Metric, Equation::MeanCurvature, Equation::ANorm, Equation::AreaElement] {
        let rep = temporal_refinement_study(eq, &s, dt, 4, None).unwrap();
        assert_eq!(rep.factors.len(), 2);
        for f in &rep.factors {
            assert!((f - 2.0).abs() <= 0.6, "{eq:?} factor {f}");
        }
        assert!(rep.pass);
    }
}

#[test]
fn simons_identity() {
    let round = verify_simons(&sphere(1.0, 64, 128).unwrap(), 1e-8).unwrap();
    assert!(round.pass && round.residual_max <= 1e-8, "{}", round.residual_max);
    let unit = verify_simons(&ellipsoid(2.0, 1.0, 1.0, 32, 64).unwrap(), 1.0).unwrap();
    let scaled = verify_simons(&ellipsoid(4.0, 2.0, 2.0, 32, 64).unwrap(), 1.0).unwrap();
    // residual has the units of curvature cubed
    assert!((unit.residual_max / scaled.residual_max - 8.0).abs() < 1e-6);
}

#[test]
fn simons_converges_at_second_order_in_space() {
    let levels: Vec<_> = [(32, 64), (64, 128), (128, 256)]
        .iter()
        .map(|&(a, b)| ellipsoid(2.0, 1.0, 1.0, a, b).unwrap())
        .collect();
    let rep = simons_refinement_study(&levels, (PI / 4.0, 3.0 * PI / 4.0), None).unwrap();
    assert!(rep.factors.iter().all(|f| *f >= 3.5), "{:?}", rep.factors);
    assert!(rep.pass);
}

#[test]
fn suite_on_a_circle_passes() {
    let reports = verify_suite(&round_config(ShapeName::Circle), &SuiteOptions::default()).unwrap();
    let names: Vec<_> = reports.iter().map(|r| r.equation.as_str()).collect();
    for eq in ["metric", "mean_curvature", "a_norm", "volume"] {
        assert!(names.contains(&eq), "{names:?}");
    }
    assert!(reports.iter().all(|r| r.pass), "{reports:?}");
}

#[test]
fn window_errors() {
    let config = round_config(ShapeName::Circle);
    let w = closed_form_window(&config, 0.01, 1e-5).unwrap();
    assert!(matches!(
        verify_metric_evolution(&w[..2], Window::all(), 1e-6),
        Err(VerifyError::WindowTooShort(2))
    ));
    assert!(matches!(
        verify_volume_evolution(&w[..1], 0.02),
        Err(VerifyError::WindowTooShort(1))
    ));
    let mut flagged = w.clone();
    flagged[1].redistributed = true;
    assert!(matches!(
        verify_metric_evolution(&flagged, Window::all(), 1e-6),
        Err(VerifyError::RedistributionInWindow)
    ));
    let other = Snapshot::new(2, 0.02, circle(1.0, 128).unwrap());
    assert!(matches!(
        triple_residual(Equation::Metric, [&w[0], &w[1], &other]),
        Err(VerifyError::MaterialMismatch)
    ));
}

#[test]
fn unsupported_models() {
    let config = round_config(ShapeName::GeodesicCircle);
    let w = closed_form_window(&config, 0.01, 1e-5).unwrap();
    assert!(matches!(
        verify_a_norm_evolution(&w, Window::all(), 1e-4),
        Err(VerifyError::UnsupportedModel(_))
    ));
    assert!(matches!(
        verify_simons(&circle(1.0, 64).unwrap(), 1e-8),
        Err(VerifyError::UnsupportedModel(_))
    ));
}

#[test]
fn ill_typed_maps_are_rejected() {
    let trace_to_tensor = PolynomialTypeMap::new(
        2,
        2,
        vec![Term {
            coeff: 1.0,
            chain: vec![Primitive::Trace],
        }],
    );
    assert!(matches!(trace_to_tensor, Err(VerifyError::IllTypedMap(_))));
    let bg = Background::from_surface(&sphere(1.0, 16, 32).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let tensor_map = power_map(2, &[(1.0, 2)]);
    assert!(matches!(
        mp_scalar_run(&bg, &vec![0.0; bg.len()], None, &tensor_map, 1, dt),
        Err(VerifyError::IllTypedMap(_))
    ));
}

#[test]
fn explicit_steps_above_the_diffusion_limit_are_rejected() {
    let bg = Background::from_surface(&sphere(1.0, 16, 32).unwrap()).unwrap();
    let limit = bg.diffusion_limit(None);
    let p = PolynomialTypeMap::zero(0);
    let err = mp_scalar_run(&bg, &vec![1.0; bg.len()], None, &p, 1, 2.0 * limit).unwrap_err();
    assert!(matches!(err, VerifyError::CflViolation { .. }));
    let s0 = vec![M2::identity(); bg.len()];
    assert!(matches!(
        mp_tensor_run(&bg, &s0, None, &PolynomialTypeMap::zero(2), 1, 2.0 * limit),
        Err(VerifyError::CflViolation { .. })
    ));
}

#[test]
fn zero_is_stationary_for_a_quadratic_reaction() {
    let bg = Background::from_surface(&ellipsoid(2.0, 1.0, 1.0, 16, 32).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let h = mp_scalar_run(&bg, &vec![0.0; bg.len()], None, &power_map(0, &[(1.0, 2)]), 50, dt).unwrap();
    assert!(h.fields.iter().flatten().all(|v| *v == 0.0));
}

#[test]
fn nonnegative_data_stays_nonnegative_under_linear_growth() {
    let bg = Background::from_surface(&ellipsoid(2.0, 1.0, 1.0, 16, 32).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let rho0: Vec<f64> = bg.positions.iter().map(|p| p.x.max(0.0)).collect();
    let h = mp_scalar_run(&bg, &rho0, None, &power_map(0, &[(1.0, 1)]), 100, dt).unwrap();
    assert!(h.min.iter().all(|m| *m >= 0.0));
}

#[test]
fn heat_flow_extremes_are_monotone_and_mass_is_conserved() {
    let bg = Background::from_surface(&sphere(1.0, 24, 48).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let rho0: Vec<f64> = bg.positions.iter().map(|p| 1.0 + p.z / p.norm()).collect();
    let h = mp_scalar_run(&bg, &rho0, None, &PolynomialTypeMap::zero(0), 200, dt).unwrap();
    for k in 1..h.max.len() {
        assert!(h.max[k] <= h.max[k - 1] + 1e-15);
        assert!(h.min[k] >= h.min[k - 1] - 1e-15);
    }
    assert!(h.max.last().unwrap() < &h.max[0]);
    let m0 = h.integral[0];
    assert!(h.integral.iter().all(|m| (m - m0).abs() <= 1e-8 * m0.abs()));
}

#[test]
fn metric_tensor_is_stationary() {
    let bg = Background::from_surface(&ellipsoid(2.0, 1.0, 1.0, 16, 32).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let s0 = vec![M2::identity(); bg.len()];
    let h = mp_tensor_run(&bg, &s0, None, &PolynomialTypeMap::zero(2), 50, dt).unwrap();
    for s in h.fields.last().unwrap() {
        assert!((s - M2::identity()).norm() < 1e-12);
    }
}

#[test]
fn tensor_square_growth_follows_the_scalar_comparison() {
    let bg = Background::from_surface(&sphere(1.0, 16, 32).unwrap()).unwrap();
    let dt = 0.5 * bg.diffusion_limit(None);
    let steps = 40;
    let s0 = vec![M2::identity(); bg.len()];
    let h = mp_tensor_run(&bg, &s0, None, &power_map(2, &[(1.0, 2)]), steps, dt).unwrap();
    // explicit Euler for s' = s², s(0) = 1
    assert_eq!(h.min_eigen.len(), steps + 1);
    let mut s = 1.0f64;
    for k in 1..=steps {
        s += dt * s * s;
        assert!(h.min_eigen[k] >= 1.0);
        assert!((h.min_eigen[k] - s).abs() < 1e-10 * s, "step {k}: {} vs {s}", h.min_eigen[k]);
    }
}

#[test]
fn evaluation_is_linear_in_coefficients() {
    let s = M2::new(2.0, 0.5, 0.5, 1.0);
    let one = power_map(2, &[(1.0, 2)]).evaluate(Value::Tensor(s));
    let three = power_map(2, &[(3.0, 2)]).evaluate(Value::Tensor(s));
    match (one, three) {
        (Value::Tensor(a), Value::Tensor(b)) => assert!((a * 3.0 - b).norm() < 1e-14),
        _ => panic!("rank changed"),
    }
    assert_eq!(PolynomialTypeMap::zero(0).evaluate(Value::Scalar(4.0)), Value::Scalar(0.0));
}

#[test]
fn fixed_steps_give_material_windows() {
    let s = ellipse(2.0, 1.0, 64).unwrap();
    let snaps = integrate_fixed(&s, 1e-4, 6, 2).unwrap();
    assert_eq!(snaps.len(), 4);
    assert!((snaps[3].t - 6e-4).abs() < 1e-18);
    assert!(triple_residual(Equation::MeanCurvature, [&snaps[0], &snaps[1], &snaps[2]]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_scalar_cases_keep_their_sign(seed in 0u64..10_000) {
        let bg = Background::from_surface(&ellipsoid(2.0, 1.0, 1.0, 16, 32).unwrap()).unwrap();
        let case = random_scalar_case(seed, &bg, 60).unwrap();
        let h = mp_scalar_run(&bg, &case.rho0, Some(&case.drift), &case.map, case.steps, case.dt).unwrap();
        prop_assert!(h.min.iter().all(|m| *m >= -1e-7));
    }

    #[test]
    fn random_tensor_cases_stay_semidefinite(seed in 0u64..10_000) {
        let bg = Background::from_surface(&ellipsoid(2.0, 1.0, 1.0, 16, 32).unwrap()).unwrap();
        let case = random_tensor_case(seed, &bg, 60).unwrap();
        let h = mp_tensor_run(&bg, &case.s0, Some(&case.drift), &case.map, case.steps, case.dt).unwrap();
        prop_assert!(h.min_eigen.iter().all(|m| *m >= -1e-7));
    }
}
