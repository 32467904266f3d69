use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(format!("{name}.toml"))
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypoliouville")).args(args).output().expect("binary runs")
}

fn json(args: &[&str]) -> (i32, Value) {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = run(&full);
    let v = serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stdout));
    });
    (out.status.code().unwrap(), v)
}

fn scratch(name: &str, body: &str) -> String {
    let path = std::env::temp_dir().join(format!("hypoliouville-{}-{name}.toml", std::process::id()));
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn counted_failures(v: &Value) -> Vec<String> {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["counted"] == true && c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap().to_string())
        .collect()
}

#[test]
fn heisenberg_checks_pass() {
    let (code, v) = json(&["check", &fixture("heisenberg")]);
    assert_eq!(code, 0, "{v}");
    assert_eq!(v["Q"], "4");
    assert_eq!(v["p_star"], "2");
    assert_eq!(v["invariance"]["residual"], 0.0);
}

#[test]
fn remark_operator_flags_linf_without_failing() {
    let (code, v) = json(&["check", &fixture("remark83")]);
    assert_eq!(code, 0);
    let k = &v["classification"];
    assert_eq!(k["hypoelliptic"], true);
    assert_eq!(k["unimodular"], true);
    assert_eq!(k["linf_liouville"], false);
    let flag = v["checks"].as_array().unwrap().iter().find(|c| c["name"] == "Linf_liouville").unwrap();
    assert_eq!(flag["counted"], false);
    let text = String::from_utf8(run(&["check", &fixture("remark83")]).stdout).unwrap();
    assert!(text.contains("FLAG  Linf_liouville"));
}

#[test]
fn mumford_skips_group_checks() {
    let (code, v) = json(&["check", &fixture("mumford")]);
    assert_eq!(code, 0);
    assert!(v["hormander"]["full_rank"].as_bool().unwrap());
    assert!(v.get("axioms").is_none());
    assert!(v["notes"].as_array().unwrap().iter().any(|n| n.as_str().unwrap().contains("no group law")));
}

#[test]
fn every_fixture_passes_check() {
    for name in ["euclidean_laplacian", "laplacian2d", "heat", "kolmogorov_classical"] {
        let (code, v) = json(&["check", &fixture(name)]);
        assert_eq!(code, 0, "{name}: {:?}", counted_failures(&v));
    }
}

#[test]
fn sharp_on_the_heat_lift() {
    let (code, v) = json(&["sharp", &fixture("heat")]);
    assert_eq!(code, 0);
    assert_eq!(v["Q"], "6");
    assert_eq!(v["p_star"], "3/2");
}

#[test]
fn kolmogorov_reports_gram_matrices() {
    let (code, v) = json(&["kolmogorov", &fixture("kolmogorov_classical")]);
    assert_eq!(code, 0);
    let c1 = &v["gram"][1]["C"];
    assert!((c1[0][1].as_f64().unwrap() + 0.5).abs() < 1e-10);
    assert!((c1[1][1].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    assert_eq!(v["kalman_rank"], 2);
}

#[test]
fn counterexample_is_deterministic() {
    let args = ["--format", "json", "--seed", "5", "counterexample", &fixture("heisenberg"), "--p", "2", "--samples", "5000"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["verdict"], "divergent");
    assert_eq!(v["seed"], 5);
    assert_eq!(v["annuli"].as_array().unwrap().len(), 8);
}

#[test]
fn representation_writes_measures() {
    let csv = std::env::temp_dir().join(format!("hypoliouville-{}-measures.csv", std::process::id()));
    let (code, v) = json(&["--grid", "32", "representation", &fixture("laplacian2d"), "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{v}");
    assert!((v["summary"]["mu_total"].as_f64().unwrap() - 1.0).abs() < 1e-8);
    assert_eq!(v["residuals"].as_array().unwrap().len(), 10);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("kind,x1,x2,weight"));
    std::fs::remove_file(csv).ok();
}

#[test]
fn verification_failures_exit_1() {
    // the Laplacian is not invariant under the Heisenberg law
    let path = scratch(
        "mismatch",
        "dimension = 3\n[operator]\nA = [[1,0,0],[0,1,0],[0,0,1]]\n[group]\ncompose = [\"x1+y1\", \"x2+y2\", \"x3+y3+(x1*y2-x2*y1)/2\"]\n",
    );
    let (code, v) = json(&["check", &path]);
    assert_eq!(code, 1);
    assert_eq!(counted_failures(&v), ["left invariance"]);
    // the Heisenberg stencil is not an M-matrix
    assert_eq!(run(&["--grid", "8", "representation", &fixture("heisenberg")]).status.code(), Some(1));
    std::fs::remove_file(path).ok();
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
    assert_eq!(run(&["check"]).status.code(), Some(2));
    assert_eq!(run(&["check", "/nonexistent.toml"]).status.code(), Some(2));
    assert_eq!(run(&["kolmogorov", &fixture("heisenberg")]).status.code(), Some(2));
    assert_eq!(run(&["counterexample", &fixture("laplacian2d")]).status.code(), Some(2));
    let bad = scratch("bad", "dimension = 2\n[operator]\nA = [[1, 0], [0, \"x1 +\"]]\n");
    let (code, v) = json(&["check", &bad]);
    assert_eq!(code, 2);
    assert!(v["error"].as_str().unwrap().contains("operator.A"));
    std::fs::remove_file(bad).ok();
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
