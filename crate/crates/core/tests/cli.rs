use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn gsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gsym"))
        .args(args)
        .env_remove("SPECTRAL_PRECISION")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn transform_writes_one_row_per_index() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("golden");
    let o = gsym(&[
        "transform",
        "--alpha",
        "0.6180339887",
        "--n",
        "200",
        "--output",
        path_arg(&prefix),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read_to_string(dir.path().join("golden.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("j,d_j,v_j,eps_j,diag,sup,sub,g"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 200);
    for (j, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells.len(), 8);
        assert_eq!(cells[0].parse::<usize>().unwrap(), j);
        assert!(matches!(cells[3], "1" | "-1"));
        assert_eq!(cells[3], cells[7]);
    }
    assert!(rows[199].ends_with(",,,1") || rows[199].ends_with(",,,-1"));
}

#[test]
fn transform_is_byte_identical_across_runs() {
    let args = ["transform", "--shift", "-0.7", "--n", "40"];
    let a = gsym(&args);
    let b = gsym(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn breakdown_exits_two_with_json() {
    let o = gsym(&["transform", "--shift", "0", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "breakdown");
    assert_eq!(err["pivot"], 0);
    assert_eq!(err["shift"], 0);
}

#[test]
fn bad_arguments_exit_three() {
    assert_eq!(gsym(&["transform", "--n", "10"]).status.code(), Some(3));
    assert_eq!(
        gsym(&["transform", "--shift", "0.3", "--n", "0"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        gsym(&[
            "transform",
            "--shift",
            "0.3",
            "--n",
            "5",
            "--precision",
            "quad"
        ])
        .status
        .code(),
        Some(3)
    );
    assert_eq!(
        gsym(&["diagnose", "--shift", "0.3", "--N", "50"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        gsym(&["transform", "--shift", "0.3", "--shift", "-0.7", "--n", "5"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(gsym(&["frobnicate"]).status.code(), Some(3));
    assert_eq!(gsym(&["--help"]).status.code(), Some(0));
}

#[test]
fn precision_can_come_from_the_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_gsym"))
        .args(["transform", "--shift", "-1.5", "--n", "30"])
        .env("SPECTRAL_PRECISION", "extended")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let standard = gsym(&["transform", "--shift", "-1.5", "--n", "30"]);
    let a = stdout(&o);
    let b = stdout(&standard);
    for (x, y) in a.lines().skip(1).zip(b.lines().skip(1)) {
        let dx: f64 = x.split(',').nth(1).unwrap().parse().unwrap();
        let dy: f64 = y.split(',').nth(1).unwrap().parse().unwrap();
        assert!((dx - dy).abs() <= 1e-13 * dx.abs());
    }
}

#[test]
fn diagnose_reports_a_bounded_shift() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("diag");
    let o = gsym(&[
        "diagnose",
        "--shift",
        "-1.5",
        "--N",
        "10000",
        "--output",
        path_arg(&prefix),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let text = fs::read(dir.path().join("diag.json")).unwrap();
    let v: Value = serde_json::from_slice(&text).unwrap();
    assert_eq!(v["schema"], "v1");
    assert_eq!(v["verdict"], "definitizable-evidence");
    assert_eq!(v["N"], 10000);
    assert!(v["sup_d"].as_f64().unwrap() < 2.0);
    assert!(v["breakdown"].is_null());

    let again = gsym(&[
        "diagnose",
        "--shift",
        "-1.5",
        "--N",
        "10000",
        "--output",
        path_arg(&prefix),
    ]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("diag.json")).unwrap(), text);
}

#[test]
fn spectrum_json_has_one_report_per_order() {
    let o = gsym(&[
        "spectrum", "--shift", "0.3", "--shift", "-0.7", "--n-list", "2,5..7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let reports = v["reports"].as_array().unwrap();
    let orders: Vec<u64> = reports.iter().map(|r| r["n"].as_u64().unwrap()).collect();
    assert_eq!(orders, vec![2, 5, 6, 7]);
    for r in reports {
        let n = r["n"].as_u64().unwrap() as usize;
        let eigs = r["eigs"].as_array().unwrap();
        assert_eq!(eigs.len(), n);
        assert!(eigs.iter().all(|e| e.as_array().unwrap().len() == 2));
        assert!(r["max_abs"].as_f64().unwrap() > 0.0);
        assert!(r["outside"].as_u64().is_some());
    }
}

#[test]
fn pade_writes_poles_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("pade");
    let o = gsym(&[
        "pade",
        "--shift",
        "0.3",
        "--n-list",
        "1..6",
        "--probe",
        "2,1",
        "--probe",
        "0,3",
        "--output",
        path_arg(&prefix),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );

    let poles = fs::read_to_string(dir.path().join("pade_poles.csv")).unwrap();
    let mut lines = poles.lines();
    assert_eq!(lines.next(), Some("n,re,im,class"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), (1..=6).sum::<usize>());
    assert!(rows.iter().all(|r| matches!(r[3], "support" | "spurious")));

    let errors = fs::read_to_string(dir.path().join("pade_errors.csv")).unwrap();
    let mut lines = errors.lines();
    assert_eq!(
        lines.next(),
        Some("n,probe_re,probe_im,abs_err,near_pole_flag")
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 12);
    for r in &rows {
        assert!(r[3].parse::<f64>().unwrap() < 1e-1);
        assert!(matches!(r[4], "0" | "1"));
    }
}

#[test]
fn quad_rule_sums_to_the_mass() {
    let o = gsym(&["quad", "--n", "12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,node,weight"));
    let weights: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(weights.len(), 12);
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn stahl_demo_contrasts_the_two_shifts() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("demo");
    let o = gsym(&[
        "stahl-demo",
        "--N",
        "2000",
        "--n-max",
        "20",
        "--output",
        path_arg(&prefix),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let v: Value =
        serde_json::from_slice(&fs::read(dir.path().join("demo_summary.json")).unwrap()).unwrap();
    assert_eq!(v["schema"], "v1");
    assert_eq!(v["bounded"]["verdict"], "definitizable-evidence");
    assert!(v["stahl"]["growth"].as_f64().unwrap() >= 2.0);
    assert!(
        v["stahl"]["max_pole_abs"].as_f64().unwrap()
            > v["bounded"]["max_pole_abs"].as_f64().unwrap()
    );
}
