use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_finslerlab"));
    cmd.env_remove("FINSLERLAB_SEED");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, extra: &[&str]) -> Output {
    bin().arg("run").arg("--config").arg(config).args(extra).output().unwrap()
}

fn strip_times(v: &mut Value) {
    match v {
        Value::Object(m) => {
            m.remove("wall_time");
            m.values_mut().for_each(strip_times);
        }
        Value::Array(a) => a.iter_mut().for_each(strip_times),
        _ => {}
    }
}

fn report(out: &Output) -> Value {
    let mut v: Value = serde_json::from_slice(&out.stdout).unwrap();
    strip_times(&mut v);
    v
}

const BASIC: &str = "metric = fubini_study\nsuites = identities, curvature, decomposition\npoints = 4\nseed = 3\n[metric]\nn = 2\n";

#[test]
fn list_names_metrics_and_suites() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["poincare_disc", "minkowski", "perturbed_quartic", "prop2", "lemma9"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.ini", BASIC);
    let a = run(&cfg, &[]);
    let b = run(&cfg, &[]);
    let c = run(&cfg, &["--parallel"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let ra = report(&a);
    assert_eq!(ra, report(&b));
    assert_eq!(ra, report(&c));
    assert_eq!(ra["version"], "1");
    assert_eq!(ra["reports"].as_array().unwrap().len(), 3);
    assert_eq!(ra["reports"][0]["status"], "pass");
}

#[test]
fn sequential_matches_parallel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "s.ini",
        "metric = poincare_disc\nsuites = schwarz, curvature\npoints = 3\n[schwarz]\nmaps = 2\n",
    );
    assert_eq!(report(&run(&cfg, &["--sequential"])), report(&run(&cfg, &[])));
}

#[test]
fn seed_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.ini", BASIC);
    let out = bin().env("FINSLERLAB_SEED", "99").arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(report(&out)["config_echo"]["seed"], 99);
    let bad = bin().env("FINSLERLAB_SEED", "x").arg("run").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let failing = write_config(
        dir.path(),
        "f.ini",
        "metric = fubini_study\nsuites = condition12\npoints = 2\n[metric]\nn = 2\n[condition12]\nexpect = nonzero\n",
    );
    let out = run(&failing, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(report(&out)["reports"][0]["status"], "fail");

    for text in [
        "metric = no_such_metric\nsuites = curvature\n",
        "metric = euclidean\nsuites = curvature\n[tolerances]\ncurvature = 0\n",
        "metric = euclidean\n",
    ] {
        let bad = write_config(dir.path(), "bad.ini", text);
        assert_eq!(run(&bad, &[]).status.code(), Some(2), "{text}");
    }
    assert_eq!(run(&dir.path().join("missing.ini"), &[]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "a.ini", BASIC);
    assert_eq!(run(&cfg, &["--format", "xml"]).status.code(), Some(2));
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "a.ini", BASIC);
    let path = dir.path().join("out.csv");
    let out = run(&cfg, &["--format", "csv", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let mut rd = csv::Reader::from_path(&path).unwrap();
    assert_eq!(
        rd.headers().unwrap().iter().collect::<Vec<_>>(),
        ["suite", "status", "check", "residual", "tolerance", "z", "v", "values", "reason"]
    );
    let rows: Vec<csv::StringRecord> = rd.records().map(Result::unwrap).collect();
    assert!(rows.len() >= 3);
    assert!(rows.iter().all(|r| &r[1] == "pass"));
}

#[test]
fn pointwise_quantities() {
    let out = bin()
        .args(["point", "--metric", "poincare_disc", "--param", "r=2", "--z", "0.5,-0.25", "--v", "1,0.5", "--show", "K,G,N"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    let k = v["K"].as_f64().unwrap();
    assert!((k + 4.0).abs() < 1e-9);
    // G = r²|v|²/(r²−|z|²)²
    let g = v["G"].as_f64().unwrap();
    let want = 4.0 * 1.25 / (4.0f64 - 0.3125).powi(2);
    assert!((g - want).abs() < 1e-14);
    // N = 2z̄v/(r²−|z|²)
    let n = &v["N"][0][0];
    assert!((n[0].as_f64().unwrap() - 0.75 / 3.6875).abs() < 1e-12);
    assert!((n[1].as_f64().unwrap() - 1.0 / 3.6875).abs() < 1e-12);

    let outside = bin().args(["point", "--metric", "poincare_disc", "--z", "2,0", "--v", "1,0"]).output().unwrap();
    assert_eq!(outside.status.code(), Some(1));
    let unknown = bin().args(["point", "--metric", "euclidean", "--param", "n=1", "--z", "0,0", "--v", "1,0", "--show", "X"]).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));
}
