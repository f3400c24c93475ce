use std::f64::consts::PI;

use mcflab_core::diagnostics::{
    convexity_margin, diagnostics_row, epsilon_sharp, gradient_ratio, pinching_psi, ricci_myers,
    sobolev_conditions, DiagnosticsError,
};
use mcflab_core::geometry::{compute_geometry, total_volume};
use mcflab_core::model::ModelSpace;
use mcflab_core::surface::{circle, ellipse, ellipsoid, geodesic_circle, sphere, Vec3};
use proptest::prelude::*;

/// Principal curvatures of the spheroid with polar semi-axis `c` along z and
/// equatorial radius `a`, at the point `p` on the body.
fn spheroid_curvatures(a: f64, c: f64, p: Vec3) -> (f64, f64) {
    // meridian: (a sin u, c cos u); curvature a c / (a² cos² u + c² sin² u)^{3/2}
    let rho = (p.x * p.x + p.y * p.y).sqrt();
    let (s, co) = (rho / a, p.z / c);
    let q = a * a * co * co + c * c * s * s;
    let meridian = a * c / q.powf(1.5);
    // parallel: sin of the normal angle over the distance to the axis
    let parallel = c / (a * q.sqrt());
    (meridian.min(parallel), meridian.max(parallel))
}

#[test]
fn ellipsoid_pinching_matches_principal_curvature_oracle() {
    let delta = 0.1;
    let s = ellipsoid(2.0, 1.0, 1.0, 64, 128).unwrap();
    let f = compute_geometry(&s).unwrap();
    let (_, sup) = pinching_psi(&f, delta).unwrap();
    let fine = ellipsoid(2.0, 1.0, 1.0, 128, 256).unwrap();
    let g = fine.as_graph().unwrap();
    let mut oracle = f64::NEG_INFINITY;
    for i in 1..g.n_theta - 1 {
        for j in 0..g.n_phi {
            let (l1, l2) = spheroid_curvatures(1.0, 2.0, g.position(i, j));
            let h = l1 + l2;
            oracle = oracle.max(0.5 * (l1 - l2).powi(2) / h.powf(2.0 - delta));
        }
    }
    assert!((sup - oracle).abs() < 0.01 * oracle, "sup {sup} vs {oracle}");
}

#[test]
fn round_shapes_have_vanishing_pinching_and_gradient() {
    let sph = compute_geometry(&sphere(1.0, 64, 128).unwrap()).unwrap();
    for delta in [0.1, 0.25, 0.5] {
        assert!(pinching_psi(&sph, delta).unwrap().1.abs() < 1e-9);
    }
    assert!(gradient_ratio(&sph) < 1e-10);
    let c = compute_geometry(&circle(1.0, 256).unwrap()).unwrap();
    assert!(gradient_ratio(&c) < 1e-10);
    assert_eq!(pinching_psi(&c, 0.5).unwrap().1, 0.0);
}

#[test]
fn epsilon_and_margin() {
    let flat2 = ModelSpace::flat(2);
    let e = compute_geometry(&ellipse(2.0, 1.0, 256).unwrap()).unwrap();
    // n = 1 collapses the ratio to one
    assert!((epsilon_sharp(&e, &flat2).unwrap() - 1.0).abs() < 1e-12);
    let sph = compute_geometry(&sphere(1.0, 32, 64).unwrap()).unwrap();
    assert!((convexity_margin(&sph, &ModelSpace::flat(3)) - 4.0).abs() < 1e-8);
    let c = compute_geometry(&circle(2.0, 128).unwrap()).unwrap();
    // margin ‖H‖² λ_min = k³
    assert!((convexity_margin(&c, &flat2) - 0.125).abs() < 1e-12);
}

#[test]
fn zero_mean_curvature_is_reported() {
    // convex shapes never have a flat vertex, so zero one by hand
    let s = ellipse(2.0, 1.0, 64).unwrap();
    let mut f = compute_geometry(&s).unwrap();
    f.mean[5] = 0.0;
    assert!(matches!(
        pinching_psi(&f, 0.1),
        Err(DiagnosticsError::ZeroMeanCurvature { vertex: 5, .. })
    ));
    assert!(epsilon_sharp(&f, &ModelSpace::flat(2)).is_err());
    assert_eq!(gradient_ratio(&f), f64::INFINITY);
}

#[test]
fn ellipse_gradient_ratio_is_resolved() {
    let coarse = gradient_ratio(&compute_geometry(&ellipse(2.0, 1.0, 256).unwrap()).unwrap());
    let fine = gradient_ratio(&compute_geometry(&ellipse(2.0, 1.0, 512).unwrap()).unwrap());
    assert!(coarse > 0.0);
    assert!((coarse - fine).abs() < 0.01 * fine, "{coarse} vs {fine}");
}

#[test]
fn myers_on_round_spheres() {
    for r in [1.0, 0.5] {
        let s = sphere(r, 64, 128).unwrap();
        let f = compute_geometry(&s).unwrap();
        let m = ricci_myers(&s, &f);
        assert!((m.ricci_lb - 1.0 / (r * r)).abs() < 1e-9);
        assert!((m.myers_bound - PI * r).abs() < 1e-8);
        assert!((m.diameter - PI * r).abs() < 0.02 * PI * r, "diameter {}", m.diameter);
        assert!(m.ok);
    }
}

#[test]
fn myers_on_prolate_ellipsoid() {
    let s = ellipsoid(2.0, 1.0, 1.0, 64, 128).unwrap();
    let f = compute_geometry(&s).unwrap();
    let m = ricci_myers(&s, &f);
    assert!(m.diameter < m.myers_bound);
    // pole to pole along a meridian: half the perimeter of the (2, 1) ellipse
    let dense = ellipse(2.0, 1.0, 100_000).unwrap();
    let half = 0.5 * total_volume(&dense);
    assert!((m.diameter - half).abs() < 0.02 * half, "{} vs {half}", m.diameter);
}

#[test]
fn sobolev_flags_in_rows() {
    let flat = compute_geometry(&sphere(3.0, 16, 32).unwrap()).unwrap();
    let r = sobolev_conditions(&flat, &ModelSpace::flat(3), 0.5).unwrap();
    assert!(r.flag_1 && r.flag_2);
    // a geodesic circle of radius 0.8 is far longer than admissible
    let s = geodesic_circle(ModelSpace::homogeneous(1.0), 0.8, 64).unwrap();
    let f = compute_geometry(&s).unwrap();
    assert!(sobolev_conditions(&f, &s.model, 0.5).is_err());
    let row = diagnostics_row(0.0, 1e-3, &s, &f, &[0.1], 0.5);
    assert!(!row.sobolev_1 && !row.sobolev_2);
}

#[test]
fn sphere_row() {
    let s = sphere(1.0, 32, 64).unwrap();
    let f = compute_geometry(&s).unwrap();
    let row = diagnostics_row(0.0, 1e-3, &s, &f, &[0.1, 0.25], 0.5);
    assert!((row.collapse_ratio - 1.0).abs() < 1e-9);
    assert!((row.eigen_ratio - 1.0).abs() < 1e-9);
    assert!((row.h_max - 2.0).abs() < 1e-9);
    assert!((row.ricci_bound - 1.0).abs() < 1e-9);
    assert!((row.vol - 4.0 * PI).abs() < 0.005 * 4.0 * PI);
    assert_eq!(row.psi_sup.len(), 2);
    assert_eq!(row.stop, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pinching_scales_with_a_power_of_the_mean_curvature(scale in 0.3f64..3.0) {
        // ψ_δ scales as ‖H‖^δ: the ratio of sups is scale^(-δ)
        let delta = 0.25;
        let a = compute_geometry(&ellipsoid(2.0, 1.0, 1.0, 24, 48).unwrap()).unwrap();
        let b = compute_geometry(&ellipsoid(2.0 * scale, scale, scale, 24, 48).unwrap()).unwrap();
        let sa = pinching_psi(&a, delta).unwrap().1;
        let sb = pinching_psi(&b, delta).unwrap().1;
        prop_assert!((sb / sa - scale.powf(-delta)).abs() < 1e-9);
        prop_assert!((gradient_ratio(&a) - gradient_ratio(&b)).abs() < 1e-9 * gradient_ratio(&a));
    }
}
