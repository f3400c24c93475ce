use std::fs;
use std::time::SystemTime;

use mcflab_core::flow::{run_flow, FlowConfig, ShapeName};
use mcflab_core::io::{
    diagnostics_csv, emit, fmt_float, parse_config, parse_config_str, read_summary,
    render_report, sha256_hex, stale_digests, EmitOptions, IoError, DIAGNOSTICS_FILE,
    SNAPSHOTS_FILE, SUMMARY_FILE,
};
use mcflab_core::model::ModelSpace;
use mcflab_core::verify::{verify_suite, SuiteOptions};
use proptest::prelude::*;

const MINIMAL: &str = r#"{"model":{"kind":"flat","dim":3},"shape":{"name":"sphere","params":[1.0]},"resolution":[64,128]}"#;

fn with_key(extra: &str) -> String {
    format!("{},{extra}}}", &MINIMAL[..MINIMAL.len() - 1])
}

fn small_sphere() -> FlowConfig {
    let mut c = FlowConfig::new(ModelSpace::flat(3), ShapeName::Sphere, vec![1.0], vec![16, 32]);
    c.stops.max_steps = 40;
    c
}

#[test]
fn minimal_config_takes_defaults() {
    let c = parse_config_str(MINIMAL).unwrap();
    let expected = FlowConfig::new(ModelSpace::flat(3), ShapeName::Sphere, vec![1.0], vec![64, 128]);
    assert_eq!(c, expected);
    assert_eq!(c.cfl, 0.2);
    assert_eq!(c.deltas, vec![0.1, 0.25, 0.5]);
    assert_eq!(c.stops.h_factor, 50.0);
}

#[test]
fn invalid_values_name_the_invariant() {
    match parse_config_str(&with_key(r#""cfl":0"#)) {
        Err(IoError::Validation(m)) => assert!(m.contains("cfl"), "{m}"),
        other => panic!("{other:?}"),
    }
    match parse_config_str(&with_key(r#""deltas":[0.7]"#)) {
        Err(IoError::Validation(m)) => assert!(m.contains("deltas"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_and_malformed_keys_are_parse_errors() {
    match parse_config_str(&with_key(r#""stops":{"h_factr":3}"#)) {
        Err(IoError::Parse { path, .. }) => assert_eq!(path, "stops.h_factr"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_config_str("{"), Err(IoError::Parse { .. })));
    assert!(matches!(
        parse_config(std::path::Path::new("/nonexistent/config.json")),
        Err(IoError::Io { .. })
    ));
}

#[test]
fn bare_integer_resolution_is_accepted() {
    let text = r#"{"model":{"kind":"flat","dim":2},"shape":{"name":"circle","params":[1.0]},"resolution":64}"#;
    assert_eq!(parse_config_str(text).unwrap().resolution, vec![64]);
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let mut c = FlowConfig::new(ModelSpace::flat(2), ShapeName::Ellipse, vec![2.0, 1.0], vec![64]);
    c.deltas = vec![0.2];
    c.redistribute = true;
    fs::write(&path, serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(parse_config(&path).unwrap(), c);
}

#[test]
fn emit_writes_artifacts_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let c = small_sphere();
    let traj = run_flow(&c).unwrap();
    let manifest = emit(
        dir.path(),
        &c,
        Some(&traj),
        &[],
        SystemTime::now(),
        EmitOptions { snapshots: true },
    )
    .unwrap();
    for f in [DIAGNOSTICS_FILE, SNAPSHOTS_FILE, SUMMARY_FILE] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let csv = fs::read(dir.path().join(DIAGNOSTICS_FILE)).unwrap();
    assert_eq!(manifest.digests[DIAGNOSTICS_FILE], sha256_hex(&csv));
    assert!(stale_digests(&manifest, dir.path()).unwrap().is_empty());

    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<_> = lines.next().unwrap().split(',').collect();
    let first: Vec<_> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| first[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("t").parse::<f64>().unwrap(), 0.0);
    assert!((col("collapse_ratio").parse::<f64>().unwrap() - 1.0).abs() < 1e-9);

    let summary = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.manifest, manifest);
    assert_eq!(summary.final_row.as_ref(), traj.rows().last());
    assert_eq!(manifest.stop_reason.as_deref(), Some("max_steps"));

    fs::write(dir.path().join(DIAGNOSTICS_FILE), "tampered").unwrap();
    assert_eq!(stale_digests(&manifest, dir.path()).unwrap(), vec![DIAGNOSTICS_FILE.to_string()]);
}

#[test]
fn identical_runs_have_identical_digests() {
    let c = small_sphere();
    let a = diagnostics_csv(&run_flow(&c).unwrap(), &c.deltas);
    let b = diagnostics_csv(&run_flow(&c).unwrap(), &c.deltas);
    assert_eq!(sha256_hex(a.as_bytes()), sha256_hex(b.as_bytes()));
}

#[test]
fn verify_summary_holds_one_report_per_equation() {
    let dir = tempfile::tempdir().unwrap();
    let c = FlowConfig::new(ModelSpace::flat(2), ShapeName::Circle, vec![1.0], vec![128]);
    let reports = verify_suite(&c, &SuiteOptions::default()).unwrap();
    emit(dir.path(), &c, None, &reports, SystemTime::now(), EmitOptions::default()).unwrap();
    assert!(!dir.path().join(DIAGNOSTICS_FILE).exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
    let listed = json["reports"].as_array().unwrap();
    assert_eq!(listed.len(), reports.len());
    for r in listed {
        assert!(r["equation"].is_string());
        assert!(r["pass"].is_boolean());
        assert!(r["residual_max"].is_number());
    }
    let text = render_report(&read_summary(&dir.path().join(SUMMARY_FILE)).unwrap());
    assert!(text.contains("metric"));
}

proptest! {
    #[test]
    fn floats_survive_text(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(fmt_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}

#[test]
fn curve_summaries_with_infinite_bounds_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = FlowConfig::new(ModelSpace::flat(2), ShapeName::Circle, vec![1.0], vec![64]);
    c.stops.max_steps = 20;
    let traj = run_flow(&c).unwrap();
    assert_eq!(traj.rows().last().unwrap().myers_bound, f64::INFINITY);
    emit(dir.path(), &c, Some(&traj), &[], SystemTime::now(), EmitOptions::default()).unwrap();
    let summary = read_summary(&dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(summary.final_row.unwrap().myers_bound, f64::INFINITY);
}
