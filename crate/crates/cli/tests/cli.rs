use std::process::{Command, Output};

use serde_json::Value;

fn gjms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gjms")).args(args).output().expect("run gjms")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json report on stdout")
}

fn without_timestamp(mut v: Value) -> Value {
    v.as_object_mut().unwrap().remove("timestamp");
    v
}

#[test]
fn constants_for_the_paneitz_case() {
    let out = gjms(&["constants", "--n", "3", "--m", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert_eq!(r["pass"], true);
    assert_eq!(r["data"]["q_curvature"], "15/8");
    assert_eq!(r["data"]["polynomial"], serde_json::json!(["-15/16", "-1/2", "1"]));
    assert_eq!(r["data"]["in_laplacian"], "Δ^2 + (1/2)Δ - 15/16");
}

#[test]
fn report_keys_are_in_fixed_order() {
    let out = gjms(&["expand", "--n", "5", "--m", "3"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let keys = [
        "\"tool\"",
        "\"version\"",
        "\"timestamp\"",
        "\"command\"",
        "\"params\"",
        "\"seed\"",
        "\"pass\"",
        "\"checks\"",
        "\"artifacts\"",
        "\"data\"",
    ];
    let pos: Vec<usize> = keys.iter().map(|k| text.find(k).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
    // floats carry 17 significant digits
    assert!(text.contains("\"eps\": 1.0000000000000001e-1"));
}

#[test]
fn gamma_matches_closed_form() {
    let out = gjms(&["gamma", "--n", "3", "--m", "2", "--resolution", "128"]);
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let g = r["data"]["gamma"].as_f64().unwrap();
    assert!((g - 15.0 / (128.0 * std::f64::consts::PI)).abs() < 1e-8 * g);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["constants", "--n", "4", "--m", "3"][..],
        &["check-pohozaev", "--alpha", "1"],
        &["check-sobolev", "--n", "3", "--m", "3"],
        &["frobnicate"],
        &["constants", "--format", "xml"],
    ] {
        let out = gjms(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error"), "{args:?}");
    }
}

#[test]
fn failing_check_exits_one() {
    // demand a slack the suite cannot reach
    let out = gjms(&["check-sobolev", "--trials", "5", "--tol=-0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["pass"], false);
}

#[test]
fn seeded_suites_are_reproducible() {
    let args = ["check-sobolev", "--alpha", "3", "--trials", "40", "--seed", "42"];
    let a = without_timestamp(report(&gjms(&args)));
    let b = without_timestamp(report(&gjms(&args)));
    assert_eq!(a, b);
    assert_eq!(a["pass"], true);
    let c = without_timestamp(report(&gjms(&["check-sobolev", "--alpha", "3", "--trials", "40", "--seed", "1000"])));
    assert_ne!(a["data"]["min_slack"], c["data"]["min_slack"]);
}

#[test]
fn csv_format_lists_checks() {
    let out = gjms(&["expand", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,computed,reference,tolerance,kind,pass"));
    assert!(lines.next().unwrap().starts_with("polynomial_matches_eigenvalues,1.0000000000000000e0,"));
}

#[test]
fn out_writes_report_and_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let out = gjms(&["solve-ie", "--alpha", "3", "--eps", "0.3", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let r: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let files: Vec<&str> = r["artifacts"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(files, ["run.profile.csv", "run.trace.csv"]);
    let profile = std::fs::read_to_string(dir.path().join("run.profile.csv")).unwrap();
    assert!(profile.starts_with("r,value\n"));
}

#[test]
fn chain_and_pohozaev_pass_at_defaults() {
    let out = gjms(&["check-chain", "--trials", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["data"]["alpha"].as_f64(), Some(0.5));
    let out = gjms(&["check-pohozaev", "--alpha", "3", "--resolution", "128"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn help_describes_every_command() {
    let out = gjms(&["--help"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for cmd in [
        "constants",
        "expand",
        "gamma",
        "solve-ie",
        "minimize",
        "sweep-liouville",
        "sweep-compactness",
        "check-sobolev",
        "check-logsobolev",
        "check-pohozaev",
        "check-moving-plane",
        "check-chain",
        "all",
    ] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
