use std::path::PathBuf;
use std::process::Command;

use cauchy_space::cli::{run_with_io, EXIT_DOMAIN, EXIT_OK, EXIT_USAGE, EXIT_VERIFICATION};
use serde_json::Value;

fn config(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "configs", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("cauchy-space").chain(args.iter().copied());
    let code = run_with_io(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, EXIT_OK, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn sectional_example_gives_minus_one_over_pi() {
    let m = config("de_sitter.json");
    let v = json(&["sectional", "--model", &m, "--slice", "0", "--u", "harmonic:1:cos", "--v", "harmonic:1:sin"]);
    assert!((v["K"].as_f64().unwrap() + 1.0 / std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(v["grid_n"], 256);
    assert_eq!(v["schema_version"], 1);
}

#[test]
fn verify_static_passes() {
    let m = config("static.json");
    let v = json(&["verify", "--model", &m, "--seed", "7", "--grid-n", "64", "--trials", "5"]);
    assert_eq!(v["all_passed"], true);
    assert_eq!(v["scheme"], "spectral");
}

#[test]
fn distance_bound_example() {
    let m = config("de_sitter.json");
    let v = json(&["distance-bound", "--model", &m, "--f0", "const:0", "--f1", "const:0.5", "--h", "g0"]);
    assert!((v["bound"].as_f64().unwrap() - 0.5 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    assert_eq!(v["valid_lower_bound"], true);
    let v = json(&["distance-bound", "--model", &m, "--f0", "0", "--f1", "0.5", "--h", "g:0:4"]);
    assert_eq!(v["valid_lower_bound"], false);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let m = config("de_sitter.json");
    let args = ["verify", "--model", &m, "--seed", "3", "--grid-n", "32", "--trials", "4"];
    assert_eq!(run(&args).1, run(&args).1);
    let args = ["geodesic-bvp", "--model", &m, "--grid-n", "32", "--f0", "0", "--f1", "0.5", "--k", "8", "--multistart", "2"];
    assert_eq!(run(&args).1, run(&args).1);
}

#[test]
fn exit_codes() {
    let m = config("static.json");
    assert_eq!(run(&["metric", "--model", &m, "--u", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["metric", "--model", &m, "--u", "1", "--v", "1", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(run(&["frobnicate"]).0, EXIT_USAGE);
    assert_eq!(run(&["--help"]).0, EXIT_OK);
    assert_eq!(run(&["metric", "--model", "/nonexistent.json", "--u", "1", "--v", "1"]).0, EXIT_USAGE);
    assert_eq!(run(&["metric", "--model", &m, "--u", "nonsense:3", "--v", "1"]).0, EXIT_USAGE);
    let (code, _, err) = run(&["metric", "--model", &m, "--slice", "harmonic:1:sin:1.2", "--u", "1", "--v", "1"]);
    assert_eq!(code, EXIT_DOMAIN);
    assert!(err.contains("spacelike"));
    let flrw = config("flrw_toy.json");
    assert_eq!(run(&["metric", "--model", &flrw, "--slice", "5", "--u", "1", "--v", "1"]).0, EXIT_DOMAIN);
    // A window that cannot be repaired within the domain fails the certificate or the window check.
    let ds = config("de_sitter.json");
    let code = run(&["reparametrize", "--model", &ds, "--grid-n", "16", "--h", "g:0:4", "--tau-min", "-50", "--tau-max", "50"]).0;
    assert!(code == EXIT_DOMAIN || code == EXIT_VERIFICATION || code == EXIT_USAGE, "code {code}");
}

#[test]
fn records_carry_metadata() {
    let m = config("de_sitter.json");
    let v = json(&["geodesic-ivp", "--model", &m, "--grid-n", "16", "--f0", "0", "--u0", "1", "--s-end", "0.2"]);
    assert_eq!(v["grid_n"], 16);
    assert_eq!(v["parameters"]["ds"], 1e-3);
    assert!(v["tolerances"]["margin_floor"].is_number());
    assert_eq!(v["completed"], true);
}

#[test]
fn csv_and_out_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = config("de_sitter.json");
    let out = dir.path().join("r.json");
    let csv = dir.path().join("path.csv");
    let (code, stdout, _) = run(&[
        "geodesic-bvp", "--model", &m, "--grid-n", "8", "--f0", "0", "--f1", "0.5", "--k", "4",
        "--out", out.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["converged"], true);
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 9);
    assert_eq!(lines.count(), 5);
}

#[test]
fn reparametrize_export_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let m = config("de_sitter.json");
    let export = dir.path().join("rep.json");
    let v = json(&["reparametrize", "--model", &m, "--grid-n", "16", "--h", "g:0:4", "--export", export.to_str().unwrap(), "--export-t-points", "41"]);
    assert_eq!(v["output_lapse_bound"]["passed"], true);
    assert_eq!(v["input_lapse_bound"]["passed"], false);
    let e = export.to_str().unwrap();
    let g = json(&["metric", "--model", e, "--u", "1", "--v", "1"]);
    assert_eq!(g["model"], "tabulated");
    assert!(g["G"].as_f64().unwrap() > 0.0);
}

#[test]
fn curvature_with_oracle_and_pairing() {
    let m = config("de_sitter.json");
    let v = json(&[
        "curvature", "--model", &m, "--grid-n", "64", "--scheme", "spectral", "--slice", "0.2",
        "--u", "harmonic:1:cos", "--v", "harmonic:1:sin", "--w", "harmonic:1:sin", "--z", "harmonic:1:cos", "--oracle",
    ]);
    let ratio = v["oracle"]["ratio"].as_f64().unwrap();
    assert!((3.5..=4.5).contains(&ratio));
    assert!(v["riemann_4"].as_f64().unwrap() < 0.0);
    let (code, _, _) = run(&["curvature", "--model", &m, "--slice", "harmonic:1:cos:0.1", "--u", "1", "--v", "1", "--w", "1", "--oracle"]);
    assert_eq!(code, EXIT_DOMAIN);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_cauchy-space");
    let m = config("static.json");
    let ok = Command::new(bin).args(["metric", "--model", &m, "--u", "1", "--v", "1"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert!((v["G"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-12);
    let bad = Command::new(bin).args(["metric", "--model", &m]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
    let dom = Command::new(bin).args(["metric", "--model", &m, "--slice", "harmonic:1:sin:2", "--u", "1", "--v", "1"]).output().unwrap();
    assert_eq!(dom.status.code(), Some(2));
}
