use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_causality"));
    c.env_remove("CAUSALITY_OUT_DIR");
    c
}

struct Run {
    code: i32,
    out: PathBuf,
    output: Output,
    _dir: TempDir,
}

fn run(sub: &str, config: Option<&str>, extra: &[&str]) -> Run {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let mut cmd = bin();
    cmd.arg(sub);
    if let Some(text) = config {
        let p = dir.path().join("run.toml");
        fs::write(&p, text).unwrap();
        cmd.arg(&p);
    }
    cmd.arg("--out-dir").arg(&out).args(extra);
    let output = cmd.output().unwrap();
    Run { code: output.status.code().unwrap(), out, output, _dir: dir }
}

fn stderr(r: &Run) -> String {
    String::from_utf8_lossy(&r.output.stderr).into_owned()
}

fn schema_check(name: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "{name}: {errors:#?}");
}

fn json(r: &Run, name: &str) -> Value {
    let v: Value = serde_json::from_str(&fs::read_to_string(r.out.join(format!("{name}.json"))).unwrap()).unwrap();
    schema_check(name, &v);
    v
}

const CUTOFF_FAMILY: &str = "[space]\nL = 4.0\ndim = 64\n[family]\nkind = \"cutoff\"\ncount = 9\n";

#[test]
fn validate_cutoff_passes() {
    let r = run("validate", Some(CUTOFF_FAMILY), &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    let v = json(&r, "validate");
    assert_eq!(v["report"]["passed"], true);
    assert!(r.out.join("validate.csv").is_file());
}

#[test]
fn validate_literal_orientation_fails_on_nestedness() {
    let cfg = "[space]\ndim = 8\n[family]\nkind = \"truncation\"\nliteral = true\n";
    let r = run("validate", Some(cfg), &[]);
    assert_eq!(r.code, 1);
    let v = json(&r, "validate");
    let nest = v["report"]["checks"].as_array().unwrap().iter().find(|c| c["check_name"] == "nestedness").unwrap();
    assert_eq!(nest["pass"], false);
    assert!(nest["detail"].as_str().unwrap().starts_with("reversed orientation"));
}

#[test]
fn malformed_configs_exit_2() {
    assert_eq!(run("validate", Some("[space\n"), &[]).code, 2);
    assert_eq!(run("validate", Some("[space]\ndim = 8\ncolour = 1\n"), &[]).code, 2);
    assert_eq!(run("validate", Some("[space]\ndim = 8\n"), &[]).code, 2);
    assert_eq!(run("validate", Some(CUTOFF_FAMILY), &["--tol", "-1"]).code, 2);
    let missing = bin().args(["validate", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

fn shift_config(steps: i64) -> String {
    format!("[space]\nL = 8.0\ndim = 128\n[operator]\nkind = \"shift\"\nsteps = {steps}\n[family]\nkind = \"cutoff\"\ncount = 16\n")
}

#[test]
fn shift_dichotomy_exit_codes() {
    let r = run("causal", Some(&shift_config(-1)), &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    let v = json(&r, "causal");
    assert_eq!(v["causal"], true);
    let r = run("causal", Some(&shift_config(1)), &[]);
    assert_eq!(r.code, 1);
    let v = json(&r, "causal");
    assert!((v["max_defect"].as_f64().unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let csv = fs::read_to_string(r.out.join("causal.csv")).unwrap();
    assert!(csv.starts_with("time,verdict,defect0,threshold,kernel_dim\n"));
}

#[test]
fn toeplitz_reports_support_test() {
    let cfg = "[space]\ndim = 12\n[operator]\nkind = \"toeplitz\"\ntaps = [[0, 0.5], [1, 0.3], [2, 0.2]]\n";
    let r = run("causal", Some(cfg), &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    let v = json(&r, "causal");
    assert_eq!(v["fir"]["support_causal"], true);
    assert_eq!(v["fir"]["factorization_defect"], 0.0);
}

#[test]
fn matrix_file_of_wrong_dimension_exit_2() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("m.csv"), "1,0,0\n0,1,0\n0,0,1\n").unwrap();
    let cfg = "[space]\ndim = 4\n[operator]\nkind = \"matrix-file\"\npath = \"m.csv\"\n";
    let p = dir.path().join("run.toml");
    fs::write(&p, cfg).unwrap();
    let out = bin().arg("causal").arg(&p).arg("--out-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("3x3"));
    // The right size is accepted, as a lower-triangular operand (causal).
    fs::write(dir.path().join("m.csv"), "1,0,0,0\n2,1,0,0\n0,3,1,0\n0,0,4,1\n").unwrap();
    let out = bin().arg("causal").arg(&p).arg("--out-dir").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn modulus_classifies_causal_and_up_shift() {
    let cfg = "seed = 11\n[space]\ndim = 8\n[operator]\nkind = \"random-lower\"\n[analysis]\ndeltas = [0.0, 1e-4, 2e-4, 1e-2, 0.1]\n";
    let r = run("modulus", Some(cfg), &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    let v = json(&r, "modulus");
    assert!(v["curves"].as_array().unwrap().iter().all(|c| c["classification"] == "decaying"));
    assert_eq!(v["equivalence"]["agree"], true);
    let csv = fs::read_to_string(r.out.join("modulus_00.csv")).unwrap();
    assert!(csv.starts_with("delta,omega,slope_fit\n"));

    let cfg = "[space]\ndim = 8\n[operator]\nkind = \"toeplitz\"\ntaps = [[-1, 1.0]]\n[analysis]\ndeltas = [0.0, 1e-3, 1e-2, 0.1]\n";
    let r = run("modulus", Some(cfg), &[]);
    assert_eq!(r.code, 1, "{}", stderr(&r));
    let v = json(&r, "modulus");
    assert_eq!(v["curves"][0]["classification"], "obstructed");
    assert_eq!(v["equivalence"]["extension_compatible"], false);
}

#[test]
fn modulus_empty_delta_list_exit_2() {
    let cfg = "[space]\ndim = 8\n[operator]\nkind = \"random-lower\"\n[analysis]\ndeltas = []\n";
    assert_eq!(run("modulus", Some(cfg), &[]).code, 2);
}

#[test]
fn counterexample_default_and_variants() {
    let r = run("counterexample", None, &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    let v = json(&r, "counterexample");
    assert_eq!(v["summary"]["verdict"], "closure-noncausal, core-causal");
    let csv = fs::read_to_string(r.out.join("counterexample.csv")).unwrap();
    assert!(csv.starts_with("degree,past_in,past_out,margin,modulus_pairing\n"));
    assert_eq!(csv.lines().count(), 42);

    let small = "[counterexample]\ndim = 512\ndegrees = [0, 4, 8]\nmultiprecision = false\n";
    let r = run("counterexample", Some(&format!("{small}shift = -1.0\n")), &[]);
    assert_eq!(r.code, 0, "{}", stderr(&r));
    assert_eq!(json(&r, "counterexample")["summary"]["verdict"], "causal on both");

    let r = run("counterexample", Some(&format!("{small}support = [1.5, 2.5]\n")), &[]);
    assert_eq!(r.code, 2);
    assert!(stderr(&r).contains("no mass before the cutoff"), "{}", stderr(&r));
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let cfg =
        "seed = 3\n[space]\ndim = 6\n[operator]\nkind = \"random-dense\"\n[analysis]\ndeltas = [0.0, 0.01, 0.1]\n";
    let a = run("modulus", Some(cfg), &[]);
    let b = run("modulus", Some(cfg), &[]);
    for name in ["modulus.json", "modulus_00.csv"] {
        assert_eq!(fs::read(a.out.join(name)).unwrap(), fs::read(b.out.join(name)).unwrap(), "{name}");
    }
    let c = run("modulus", Some(cfg), &["--seed", "4"]);
    assert_ne!(fs::read(a.out.join("modulus.json")).unwrap(), fs::read(c.out.join("modulus.json")).unwrap());
}

#[test]
fn env_var_sets_default_output_directory() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, format!("{CUTOFF_FAMILY}[output]\nformats = [\"json\"]\n")).unwrap();
    let target = dir.path().join("from-env");
    let out = bin().arg("validate").arg(&cfg).env("CAUSALITY_OUT_DIR", &target).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("validate.json").is_file());
    assert!(!target.join("validate.csv").exists());
}
