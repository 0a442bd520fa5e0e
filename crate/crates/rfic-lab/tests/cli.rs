//! End-to-end checks of the `rfic` binary: flag parsing, config-file
//! merging, artifact formats and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn rfic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rfic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn fe_happy_path_emits_csv_with_header() {
    let out = rfic(&[
        "fe", "--law", "gaussian", "--variance", "1", "--J", "4", "--N", "1e5", "--replicas",
        "8", "--seed", "7",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# rfic fe config_hash="));
    assert!(header.contains("seed=7"));
    assert_eq!(lines.next().unwrap(), "J,F_hat,stderr,N,replicas");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 5);
    let f_hat: f64 = row[1].parse().unwrap();
    // Regression band around the first verified run (seed 7, N=1e5, 8 reps).
    assert!((f_hat - 0.1226).abs() < 0.002, "F_hat = {f_hat}");
}

#[test]
fn unknown_law_kind_exits_2_naming_the_field() {
    let out = rfic(&["fe", "--law", "cauchy", "--J", "4", "--N", "1e4", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`law`"), "{}", stderr(&out));
}

#[test]
fn pareto_moment_order_below_two_exits_2() {
    let out = rfic(&[
        "fe", "--law", "centered_pareto", "--p", "1.5", "--J", "4", "--N", "1e4", "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`p`"), "{}", stderr(&out));
}

#[test]
fn missing_seed_exits_2() {
    let out = rfic(&["fe", "--law", "gaussian", "--J", "4", "--N", "1e4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`seed`"), "{}", stderr(&out));
}

#[test]
fn malformed_sweep_grid_exits_2() {
    let out = rfic(&[
        "sweep", "--law", "gaussian", "--j-grid", "4,2,6", "--N", "1e4", "--replicas", "4",
        "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("`j_grid`"), "{}", stderr(&out));
}

#[test]
fn continuum_values_match_closed_form() {
    let out = rfic(&["continuum", "--J", "2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(2).unwrap();
    let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cells[2] - 0.242_744_946_034_830_04).abs() < 1e-12);
    assert!((cells[4] - (cells[2] - cells[3]).abs()).abs() < 1e-15);
}

#[test]
fn verify_bounds_reports_full_pass() {
    let out = rfic(&[
        "verify-bounds", "--law", "rademacher", "--L", "8", "--J", "3", "--M", "1", "--trials",
        "500", "--seed", "7",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("500/500 pass"), "{}", stdout(&out));
}

#[test]
fn flips_command_reports_density_row() {
    let out = rfic(&[
        "flips", "--law", "uniform", "--J", "2", "--N", "1e4", "--replicas", "4", "--seed", "3",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("J,mean_density,stderr"));
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    let density: f64 = row[1].parse().unwrap();
    assert!(density > 0.0 && density < 1.0);
}

#[test]
fn config_file_is_merged_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{
            "law": {"kind": "gaussian", "variance": 1.0},
            "j": 2.0,
            "n": 1e4,
            "replicas": 4,
            "seed": 11
        }"#,
    )
    .unwrap();
    let base = rfic(&["fe", "--config", cfg_path.to_str().unwrap()]);
    assert!(base.status.success(), "{}", stderr(&base));
    assert!(stdout(&base).lines().nth(2).unwrap().starts_with("2.0"));

    let overridden = rfic(&["fe", "--config", cfg_path.to_str().unwrap(), "--J", "4"]);
    assert!(overridden.status.success());
    assert!(stdout(&overridden).lines().nth(2).unwrap().starts_with("4.0"));
}

#[test]
fn config_file_with_unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    std::fs::write(&cfg_path, r#"{"sedd": 7}"#).unwrap();
    let out = rfic(&["continuum", "--J", "2", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("sedd"));
}

#[test]
fn json_artifact_embeds_config_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("fe.json");
    let out = rfic(&[
        "fe", "--law", "rademacher", "--variance", "1", "--J", "3", "--N", "1e4", "--replicas",
        "4", "--seed", "5", "--json", json_path.to_str().unwrap(), "--out",
        dir.path().join("fe.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&json_path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(value["config_hash"].as_str().unwrap().len() == 16);
    assert_eq!(value["config"]["law"]["kind"], "rademacher");
    assert_eq!(value["config"]["seed"], 5);
    assert!(value["result"]["value"].as_f64().is_some());
    // The CSV header carries the same hash.
    let csv = std::fs::read_to_string(dir.path().join("fe.csv")).unwrap();
    assert!(csv.contains(value["config_hash"].as_str().unwrap()));
}

#[test]
fn svg_chart_is_emitted_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let svg_path = dir.path().join("curve.svg");
    let out = rfic(&[
        "continuum", "--j-grid", "1,2,3,4", "--svg", svg_path.to_str().unwrap(), "--out",
        dir.path().join("c.csv").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<!-- rfic continuum config_hash="));
    assert!(svg.contains("<svg") && svg.contains("<polyline"));
}

#[test]
fn boundary_flag_is_respected() {
    // Opposed boundaries at strong coupling force one flip; with N small the
    // boundary term is visible in the flip density.
    let out = rfic(&[
        "flips", "--law", "gaussian", "--J", "8", "--N", "1e3", "--replicas", "4", "--seed",
        "2", "--boundary", "+-",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let density: f64 = text
        .lines()
        .nth(2)
        .unwrap()
        .split(',')
        .nth(1)
        .unwrap()
        .parse()
        .unwrap();
    assert!(density >= 1.0 / 1000.0 - 1e-12);
}

#[test]
fn help_lists_all_commands() {
    let out = rfic(&["--help"]);
    let text = stdout(&out);
    for cmd in ["fe", "flips", "continuum", "w1", "verify-bounds", "sweep", "sandwich"] {
        assert!(text.contains(cmd), "missing {cmd} in help");
    }
    assert!(Path::new(env!("CARGO_BIN_EXE_rfic")).exists());
}
