use std::f64::consts::PI;

use mcflab_core::model::{
    ambient_exposure, curly_r, oneill_composed_trace, oneill_trace_xi, ModelError, ModelSpace,
};
use nalgebra::Matrix3;
use proptest::prelude::*;

/// Integrability tensor `A_ξ` on the total-space frame `(e, ξ, V)` with `e, ξ`
/// horizontal and `V` vertical, from `A_e ξ = aV`, alternation on horizontal
/// pairs and skew-adjointness.
fn a_xi(a: f64) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    // A_ξ e = -A_e ξ = -aV
    m[(2, 0)] = -a;
    // ⟨A_ξ V, e⟩ = -⟨V, A_ξ e⟩ = a
    m[(0, 2)] = a;
    m
}

fn frame_trace(a: f64) -> f64 {
    let sq = a_xi(a) * a_xi(a);
    // horizontal directions only
    sq[(0, 0)] + sq[(1, 1)]
}

#[test]
fn trace_matches_frame_computation() {
    for a in [1.0, 0.5, 2.0] {
        let got = oneill_trace_xi(&ModelSpace::homogeneous(a), 1).unwrap();
        assert!((got - frame_trace(a)).abs() < 1e-15, "a = {a}");
    }
    assert_eq!(oneill_trace_xi(&ModelSpace::homogeneous(1.0), 1).unwrap(), -1.0);
    assert_eq!(oneill_trace_xi(&ModelSpace::homogeneous(0.5), 1).unwrap(), -0.25);
    assert_eq!(oneill_trace_xi(&ModelSpace::flat(3), 2).unwrap(), 0.0);
}

#[test]
fn composed_trace_on_unit_curvature_circle() {
    let m = ModelSpace::homogeneous(1.0);
    let lambdas = vec![vec![1.0]; 8];
    let got = oneill_composed_trace(&m, 1, &lambdas).unwrap();
    // (A_ξ)² restricted to the tangent line composed with A = k
    let oracle = frame_trace(1.0) * 1.0;
    assert!(got.iter().all(|v| (v - oracle).abs() < 1e-15));
    let zero = oneill_composed_trace(&ModelSpace::homogeneous(0.0), 1, &lambdas).unwrap();
    assert!(zero.iter().all(|v| *v == 0.0));
    let flat = oneill_composed_trace(&ModelSpace::flat(3), 2, &[vec![1.0, 3.0]]).unwrap();
    assert_eq!(flat, vec![0.0]);
}

#[test]
fn correction_form_vanishes_in_catalogued_models() {
    for (m, n) in [(ModelSpace::flat(3), 2), (ModelSpace::homogeneous(1.0), 1)] {
        let r = curly_r(&m, n, 5).unwrap();
        assert!(r.form.iter().flatten().all(|v| *v == 0.0));
        assert!(r.trace.iter().all(|v| *v == 0.0));
    }
    assert!(matches!(
        curly_r(&ModelSpace::homogeneous(1.0), 2, 5),
        Err(ModelError::UnsupportedModel(_))
    ));
}

#[test]
fn exposure_constants() {
    let f = ambient_exposure(&ModelSpace::flat(2));
    assert_eq!((f.l, f.k, f.max_sectional), (0.0, 0.0, 0.0));
    assert_eq!(f.injectivity_radius, f64::INFINITY);
    for a in [1.0f64, 2.0] {
        let e = ambient_exposure(&ModelSpace::homogeneous(a));
        // sectional curvature 3|A_X Y|² of the flat total space
        let kbar = 3.0 * frame_trace(a).abs();
        assert_eq!(e.l, 0.0);
        assert!((e.k - a * a).abs() < 1e-15);
        assert!((e.max_sectional - kbar).abs() < 1e-12);
        assert!((e.injectivity_radius - PI / kbar.sqrt()).abs() < 1e-12);
    }
}

#[test]
fn wrong_dimension_is_rejected() {
    assert!(matches!(
        oneill_trace_xi(&ModelSpace::homogeneous(1.0), 2),
        Err(ModelError::DimensionMismatch { expected: 1, got: 2 })
    ));
    assert!(oneill_trace_xi(&ModelSpace::flat(3), 1).is_err());
}

proptest! {
    #[test]
    fn trace_scales_with_the_square_of_the_magnitude(a in 0.0f64..5.0) {
        let t = oneill_trace_xi(&ModelSpace::homogeneous(a), 1).unwrap();
        prop_assert!((t + a * a).abs() <= 1e-12 * (1.0 + a * a));
        let e = ambient_exposure(&ModelSpace::homogeneous(a));
        prop_assert!((e.max_sectional - 3.0 * e.k).abs() <= 1e-12 * (1.0 + e.k));
    }
}
