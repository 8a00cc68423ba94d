use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_gradflow");

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schema")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).env_remove("GRADFLOW_LOG").output().unwrap()
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_valid("report.schema.json", &report);
    report
}

fn code(args: &[&str]) -> (i32, String) {
    let out = run(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn load_schema(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(schema_dir().join(name)).unwrap()).unwrap()
}

fn assert_valid(schema: &str, instance: &Value) {
    let system = load_schema("system.schema.json");
    let id = system["$id"].as_str().unwrap().to_string();
    let validator = jsonschema::options()
        .with_resource(id, jsonschema::Resource::from_contents(system).unwrap())
        .build(&load_schema(schema))
        .unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{schema}: {errors:?}\n{instance}");
}

fn write(dir: &TempDir, name: &str, contents: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, contents).unwrap();
    p.to_str().unwrap().to_string()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn frob(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

/// `det(A − λI)` for a 3×3 matrix by cofactor expansion.
fn char_poly_3(a: &[Vec<f64>], l: f64) -> f64 {
    let m = |i: usize, j: usize| a[i][j] - if i == j { l } else { 0.0 };
    m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) - m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0))
        + m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0))
}

fn read_csv(path: &str) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn synthesize(dir: &TempDir, input: &str) -> String {
    let out = dir.path().join("system.json");
    let out = out.to_str().unwrap().to_string();
    ok_json(&["--out", &out, "synthesize", input]);
    out
}

#[test]
fn analyze_example_two() {
    let r = ok_json(&["analyze", example("nonreversible.json").to_str().unwrap()]);
    let res = &r["results"];
    assert_eq!(res["real_diagonalisable"], true);
    assert_eq!(res["failure_kind"], "None");
    let a = vec![vec![-2.0, 0.0, 2.0], vec![1.0, -3.0, 2.0], vec![1.0, 3.0, -4.0]];
    let eig: Vec<(f64, f64)> = res["eigenvalues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|z| (z["re"].as_f64().unwrap(), z["im"].as_f64().unwrap()))
        .collect();
    assert_eq!(eig.len(), 3);
    // The characteristic polynomial −λ(λ+3)(λ+6) vanishes at each reported value.
    for &(re, im) in &eig {
        assert_eq!(im, 0.0);
        assert!(char_poly_3(&a, re).abs() < 1e-12, "{re}");
    }
    let mut f: Vec<f64> = res["f"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    f.sort_by(f64::total_cmp);
    for (x, y) in f.iter().zip([-6.0, -3.0, 0.0]) {
        assert!((x - y).abs() < 1e-12);
    }
    assert_eq!(r["seed"], 0);
}

#[test]
fn analyze_rotation_is_a_finding_not_an_error() {
    let r = ok_json(&["analyze", example("rotation.json").to_str().unwrap()]);
    assert_eq!(r["results"]["real_diagonalisable"], false);
    assert_eq!(r["results"]["failure_kind"], "ComplexSpectrum");
    assert!(r["results"]["condition_of_v"].is_null());
}

#[test]
fn parse_and_dimension_errors() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"dim\": 2, \"rows\": [[1, 2], [3");
    assert_eq!(code(&["analyze", &bad]).0, 2);
    assert_eq!(code(&["analyze", "/nonexistent/matrix.json"]).0, 2);
    let ragged = write(&dir, "ragged.json", r#"{"dim": 2, "rows": [[1, 2], [3]]}"#);
    assert_eq!(code(&["analyze", &ragged]).0, 3);
    let short = write(&dir, "short.json", r#"{"dim": 3, "rows": [[1, 2, 3]]}"#);
    assert_eq!(code(&["analyze", &short]).0, 3);
    let m = example("nonreversible.json");
    assert_eq!(code(&["--tol", "-1", "analyze", m.to_str().unwrap()]).0, 2);
}

#[test]
fn synthesize_example_two_satisfies_flow_identity() {
    let dir = TempDir::new().unwrap();
    let path = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    let sys: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_valid("system.schema.json", &sys);
    let a = matrix(&sys["A"]);
    let kb = matmul(&matrix(&sys["K"]), &matrix(&sys["B"]));
    let r: Vec<Vec<f64>> = a.iter().zip(&kb).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p + q).collect()).collect();
    assert!(frob(&r) / frob(&a) <= 1e-9);

    let v = ok_json(&["verify", example("nonreversible.json").to_str().unwrap(), &path]);
    assert_eq!(v["results"]["passed"], true);
}

#[test]
fn synthesize_inline_system_when_no_out() {
    let r = ok_json(&["synthesize", example("nonreversible.json").to_str().unwrap()]);
    assert_valid("system.schema.json", &r["results"]["system"]);
}

#[test]
fn symmetric_matrix_gives_identity_onsager() {
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "sym.json", r#"{"dim": 3, "rows": [[2, 1, 0], [1, 3, 1], [0, 1, -1]]}"#);
    let path = synthesize(&dir, &m);
    let sys: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let k = matrix(&sys["K"]);
    for (i, row) in k.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
    }
}

#[test]
fn jordan_block_is_a_synthesis_precondition_failure() {
    let (c, err) = code(&["synthesize", example("jordan.json").to_str().unwrap()]);
    assert_eq!(c, 4);
    assert!(err.contains("Defective"), "{err}");
    let (c, err) = code(&["synthesize", example("rotation.json").to_str().unwrap()]);
    assert_eq!(c, 4);
    assert!(err.contains("ComplexSpectrum"), "{err}");
}

#[test]
fn simulate_zero_horizon_is_initial_state() {
    let dir = TempDir::new().unwrap();
    let sys = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    let csv = dir.path().join("t.csv").to_str().unwrap().to_string();
    let r = ok_json(&["--out", &csv, "simulate", &sys, "--x0", "0.6,0.3,0.1", "--t-end", "0"]);
    assert_eq!(r["results"]["nodes"], 1);
    let (header, rows) = read_csv(&csv);
    assert_eq!(header, "t,x1,x2,x3");
    assert_eq!(rows, vec![vec![0.0, 0.6, 0.3, 0.1]]);
}

#[test]
fn rk4_tracks_exact_flow() {
    let dir = TempDir::new().unwrap();
    let sys = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    let exact = dir.path().join("exact.csv").to_str().unwrap().to_string();
    let rk4 = dir.path().join("rk4.csv").to_str().unwrap().to_string();
    let common = ["--x0", "0.6,0.3,0.1", "--t-end", "1", "--step", "1e-3"];
    let mut args = vec!["--out", exact.as_str(), "simulate", sys.as_str(), "--method", "exact"];
    args.extend(common);
    ok_json(&args);
    let mut args = vec!["--out", rk4.as_str(), "simulate", sys.as_str(), "--method", "rk4"];
    args.extend(common);
    let r = ok_json(&args);
    assert_eq!(r["results"]["dissipation"]["monotone"], true);
    let (_, e) = read_csv(&exact);
    let (_, k) = read_csv(&rk4);
    assert_eq!(e.len(), 1001);
    assert_eq!(e.len(), k.len());
    let dev = e
        .iter()
        .zip(&k)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max);
    assert!(dev < 1e-10, "{dev}");
}

#[test]
fn simulate_pair_reports_contraction() {
    let dir = TempDir::new().unwrap();
    let sys = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    let r = ok_json(&["simulate", &sys, "--x0", "0.6,0.3,0.1", "--x0-pair", "0.1,0.1,0.8", "--t-end", "2"]);
    let c = &r["results"]["contraction"];
    assert!(c["max_scaled"].as_f64().unwrap() <= 1e-9);
    assert!(c["final_distance"].as_f64().unwrap() < c["initial_distance"].as_f64().unwrap());
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn minimizing_movement_beyond_invertibility_is_singular() {
    // B = diag(−2, 1), K = I: G + τB = diag(1 − 2τ, 1 + τ) is indefinite for τ > 1/2.
    let dir = TempDir::new().unwrap();
    let m = write(&dir, "indef.json", r#"{"dim": 2, "rows": [[2, 0], [0, -1]]}"#);
    let sys = synthesize(&dir, &m);
    let (c, err) = code(&["simulate", &sys, "--x0", "1,1", "--method", "mm", "--step", "1", "--t-end", "2"]);
    assert_eq!(c, 5, "{err}");
    assert!(err.contains("no unique minimizer"), "{err}");
    ok_json(&["simulate", &sys, "--x0", "1,1", "--method", "mm", "--step", "0.1", "--t-end", "1"]);
}

#[test]
fn simulate_rejects_bad_state_and_method() {
    let dir = TempDir::new().unwrap();
    let sys = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    assert_eq!(code(&["simulate", &sys, "--x0", "1,2"]).0, 3);
    assert_eq!(code(&["simulate", &sys, "--x0", "1,x,2"]).0, 2);
    assert_eq!(code(&["simulate", &sys, "--x0", "1,2,3", "--method", "euler"]).0, 2);
}

#[test]
fn convexity_report() {
    let dir = TempDir::new().unwrap();
    let sys = synthesize(&dir, example("nonreversible.json").to_str().unwrap());
    let r = ok_json(&["convexity", &sys, "--samples", "200", "--seed", "5"]);
    let res = &r["results"];
    assert_eq!(res["f_nonpositive"], true);
    for key in ["strong_monotonicity", "geodesic_convexity", "contraction"] {
        assert_eq!(res[key]["passed"], true, "{key}");
    }
    let c = &res["constants"];
    let rel = (c["lambda"].as_f64().unwrap() - c["lambda_via_transfer"].as_f64().unwrap()).abs();
    assert!(rel <= 1e-15);
    assert_eq!(r["seed"], 5);
}

#[test]
fn markov_subcommands() {
    let rev = example("reversible_generator.json");
    let nonrev = example("nonreversible_generator.json");
    let (rev, nonrev) = (rev.to_str().unwrap(), nonrev.to_str().unwrap());

    assert_eq!(ok_json(&["markov", "validate", rev])["results"]["valid"], true);
    let pi = ok_json(&["markov", "stationary", nonrev]);
    for p in pi["results"]["pi"].as_array().unwrap() {
        assert!((p.as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }
    assert_eq!(ok_json(&["markov", "reversible", rev])["results"]["reversible"], true);
    assert_eq!(ok_json(&["markov", "reversible", nonrev])["results"]["reversible"], false);

    let ev = ok_json(&["markov", "entropic-verify", rev]);
    assert!(ev["results"]["max_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(ev["results"]["num_samples"], 1000);

    let (c, err) = code(&["markov", "entropic-verify", nonrev]);
    assert_eq!(c, 4);
    assert!(err.contains("detailed balance"), "{err}");
}

#[test]
fn markov_input_contract() {
    let dir = TempDir::new().unwrap();
    let (c, err) = code(&["markov", "validate", example("nonreversible.json").to_str().unwrap()]);
    assert_eq!(c, 2);
    assert!(err.contains("convention"), "{err}");
    let other = write(&dir, "row.json", r#"{"dim": 2, "rows": [[-1, 1], [2, -2]], "convention": "rows"}"#);
    assert_eq!(code(&["markov", "validate", &other]).0, 2);
    let neg = write(&dir, "neg.json", r#"{"dim": 2, "rows": [[1, 0], [-1, 0]], "convention": "transposed"}"#);
    assert_eq!(code(&["markov", "validate", &neg]).0, 4);
    let sums = write(&dir, "sums.json", r#"{"dim": 2, "rows": [[-1, 0], [2, 0]], "convention": "transposed"}"#);
    assert_eq!(code(&["markov", "validate", &sums]).0, 4);
}

#[test]
fn reports_are_deterministic() {
    let rev = example("reversible_generator.json");
    let args = ["--seed", "11", "--samples", "50", "markov", "entropic-verify", rev.to_str().unwrap()];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = run(&["--seed", "12", "--samples", "50", "markov", "entropic-verify", rev.to_str().unwrap()]);
    let (ra, rc): (Value, Value) = (serde_json::from_slice(&a.stdout).unwrap(), serde_json::from_slice(&c.stdout).unwrap());
    assert_ne!(ra["inputs_digest"], rc["inputs_digest"]);
}

#[test]
fn logging_goes_to_stderr() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.json");
    let o = Command::new(BIN)
        .args(["--out", out.to_str().unwrap(), "synthesize", example("nonreversible.json").to_str().unwrap()])
        .env("GRADFLOW_LOG", "info")
        .output()
        .unwrap();
    assert!(o.status.success());
    let _: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(String::from_utf8_lossy(&o.stderr).contains("system written"));
}

#[test]
fn example_inputs_match_schema() {
    for name in ["nonreversible.json", "rotation.json", "jordan.json", "reversible_generator.json", "nonreversible_generator.json"] {
        let v: Value = serde_json::from_str(&std::fs::read_to_string(example(name)).unwrap()).unwrap();
        assert_valid("matrix.schema.json", &v);
    }
}
