use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_openapprox"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("openapprox-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn decompose_clamped_identity() {
    let dir = scratch("decompose");
    let csv = dir.join("errors.csv");
    let out = bin(&[
        "decompose", "--fn", "min(x1,1.2)", "--domain", "grid1d:0:3:1025", "--coeffs", "harmonic", "--levels", "200",
        "--out-csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("level,sup_error,mean_error,frac_in_G"));
    assert_eq!(lines.count(), 200);
    let report = json(&out);
    assert_eq!(report["summary"]["violations"]["total"], 0);
    assert_eq!(report["dini"]["usc_certified_levels"], serde_json::json!([1]));
    assert_eq!(report["meta"]["tool"], "openapprox");
    assert!(report["meta"].get("wall_time_s").is_none());
}

#[test]
fn negative_function_exits_4() {
    let out = bin(&["decompose", "--fn", "x1-2"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("negative"));
    // A leading minus is an expression, not a flag.
    assert_eq!(bin(&["decompose", "--fn", "-x1"]).status.code(), Some(4));
    assert_eq!(bin(&["decompose", "--fn", "-x1^2 + 9", "--levels", "3"]).status.code(), Some(0));
}

#[test]
fn zero_function_has_zero_errors() {
    let dir = scratch("zero");
    let csv = dir.join("e.csv");
    let out = bin(&["decompose", "--fn", "0", "--out-csv", csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    for row in std::fs::read_to_string(&csv).unwrap().lines().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(&cells[1..], &["0e0", "0e0", "0"]);
    }
}

#[test]
fn config_errors_exit_2() {
    for args in [
        &["decompose", "--fn", "x1 + * 2"][..],
        &["decompose", "--fn", "x1", "--domain", "grid3d:0:1:4"],
        &["decompose", "--fn", "x1", "--coeffs", "power:p=2"],
        &["decompose", "--fn", "x1", "--levels", "0"],
        &["decompose", "--fn", "sqrt(x1 - 1)"],
        &["audit", "--coeffs", "power:p=1/2"],
        &["audit", "--vmax", "0"],
        &["compare", "--fn", "x1", "--dyadic-levels", "5..2"],
        &["smooth", "--fn", "x1", "--domain", "finite:/nonexistent.json"],
        &["decompose"],
    ] {
        let out = bin(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = bin(&["decompose", "--fn", "x1 + * 2"]);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("byte 5"), "{err}");
}

#[test]
fn audit_examples() {
    let out = bin(&["audit", "--coeffs", "harmonic", "--levels", "20", "--vmax", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let r = &json(&out)["report"];
    assert_eq!(r["first_non_open_level"], 2);
    assert_eq!(r["levels"][1]["witnesses"], serde_json::json!(["1/1"]));
    assert_eq!(r["cross_validation"]["mismatches"], 0);

    let out = bin(&["audit", "--coeffs", "harmonic", "--levels", "1", "--vmax", "10"]);
    let r = &json(&out)["report"];
    assert!(r["first_non_open_level"].is_null());
    assert_eq!(r["levels"][0]["open"], true);
}

#[test]
fn compare_emits_both_curves() {
    let out = bin(&["compare", "--fn", "min(x1,1.2)", "--dyadic-levels", "1..12", "--coeffs", "harmonic", "--levels", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 200);
    for r in &rows {
        let level: usize = r[0].parse().unwrap();
        assert!(!r[1].is_empty());
        assert_eq!(r[2].is_empty(), level > 12, "{r:?}");
    }
    let dyadic10: f64 = rows[9][2].parse().unwrap();
    assert!(dyadic10 <= 1.0 / 1024.0);
}

#[test]
fn smooth_examples() {
    let out = bin(&["smooth", "--fn", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["bumps"], serde_json::json!([]));

    let out = bin(&["smooth", "--fn", "min(x1,1.2)", "--levels", "50"]);
    assert_eq!(out.status.code(), Some(0));
    let r = json(&out);
    assert!(r["bumps"].as_array().unwrap().len() >= 2);
    assert_eq!(r["residual"]["domination_verified"], true);
    assert_eq!(r["bumps"][1]["height"], "1/2");
}

#[test]
fn validate_sequences() {
    let out = bin(&["validate-seq", "--coeffs", "harmonic"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["verdict"], "proven-by-family");
    let out = bin(&["validate-seq", "--coeffs", "explicit:1,1/2,1/3,1/4,1/5,1/6"]);
    assert_eq!(json(&out)["report"]["verdict"], "heuristic-pass");
    let out = bin(&["validate-seq", "--coeffs", "explicit:1,1/4,1/16,1/64,1/256,1/1024"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn masks_for_2d_grids() {
    let dir = scratch("masks");
    let out = bin(&[
        "decompose", "--fn", "x1^2 + x2^2", "--domain", "grid2d:-1:1:33x17", "--levels", "5", "--masks", "1,2",
        "--mask-dir", dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let pgm = std::fs::read(dir.join("mask_L2.pgm")).unwrap();
    let header = b"P5\n33 17\n255\n";
    assert!(pgm.starts_with(header));
    assert_eq!(pgm.len(), header.len() + 33 * 17);
    assert!(pgm[header.len()..].iter().all(|&b| b == 0 || b == 255));

    let out = bin(&["decompose", "--fn", "x1", "--levels", "3", "--masks", "9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn finite_metric_domain_from_file() {
    let dir = scratch("finite");
    let path = dir.join("points.json");
    std::fs::write(
        &path,
        r#"{"labels":["p","q","r"],"coords":[[0.0,0.0],[3.0,0.0],[0.0,4.0]],"distances":[[0,3,4],[3,0,5],[4,5,0]]}"#,
    )
    .unwrap();
    let desc = format!("finite:{}", path.display());
    let out = bin(&["decompose", "--fn", "x1 + x2", "--domain", &desc, "--levels", "30"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["summary"]["domain"]["kind"], "finite-metric");
    assert!(r["semicontinuity"]["notes"][0].as_str().unwrap().contains("every subset is open"));
}
