use std::path::Path;
use std::process::{Command, Output};

fn akct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_akct")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const HALF: &str = r#"{"dim": 1, "axes": [[0.0, 1.0]], "mass": [{"idx": [0], "w": 0.5}, {"idx": [1], "w": 0.5}], "normalized": true}"#;
const POINT: &str = r#"{"dim": 1, "axes": [[0.0]], "mass": [{"idx": [0], "w": 1.0}], "normalized": true}"#;

#[test]
fn test_command_is_deterministic_and_exit_code_matches_decision() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (write(dir.path(), "p.json", HALF), write(dir.path(), "q.json", POINT));
    for (a, b) in [(&p, &p), (&p, &q)] {
        let first = akct(&["test", a, b, "--k", "4", "--eps", "1", "--seed", "3"]);
        let second = akct(&["test", a, b, "--k", "4", "--eps", "1", "--seed", "3"]);
        assert_eq!(first.stdout, second.stdout);
        let v: serde_json::Value = serde_json::from_slice(&first.stdout).unwrap();
        let code = first.status.code().unwrap();
        assert_eq!(code, if v["decision"] == "reject" { 1 } else { 0 });
        assert_eq!(v["k"], 4);
        assert_eq!(v["d"], 1);
        assert_eq!(v["mode"], "practical");
    }
}

#[test]
fn oracle_reports_exact_value() {
    let dir = tempfile::tempdir().unwrap();
    let (p, q) = (write(dir.path(), "p.json", HALF), write(dir.path(), "q.json", POINT));
    let out = akct(&["oracle", &p, &q, "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 1.0);
    let out = akct(&["oracle", &p, &q, "--k", "1"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["value"], 0.5);
}

#[test]
fn bad_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "p.json", HALF);
    let bad = write(dir.path(), "bad.json", "{\"dim\": 1");
    assert_eq!(akct(&["test", &good, &bad, "--k", "4"]).status.code(), Some(2));
    assert_eq!(akct(&["test", &good, "/nonexistent/x.json", "--k", "4"]).status.code(), Some(2));
    assert_eq!(akct(&["test", &good, &good, "--k", "1"]).status.code(), Some(2));
    assert_eq!(akct(&["verify", "no-such-suite"]).status.code(), Some(2));
    assert_eq!(akct(&["gen-hard", "--k", "8", "--m", "4", "--case", "far"]).status.code(), Some(2));
    assert_eq!(akct(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn gen_hard_writes_instances() {
    let dir = tempfile::tempdir().unwrap();
    let eq = dir.path().join("eq");
    let out = akct(&["gen-hard", "--k", "64", "--m", "2", "--eps", "0.5", "--case", "equal", "--seed", "4", "--out", eq.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(eq.join("p.json")).unwrap(), std::fs::read(eq.join("q.json")).unwrap());
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(eq.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["equal_case"], true);
    assert_eq!(meta["seed"], 4);

    let again = dir.path().join("again");
    akct(&["gen-hard", "--k", "64", "--m", "2", "--eps", "0.5", "--case", "equal", "--seed", "4", "--out", again.to_str().unwrap()]);
    assert_eq!(std::fs::read(eq.join("p.json")).unwrap(), std::fs::read(again.join("p.json")).unwrap());

    let far = dir.path().join("far");
    let out = akct(&["gen-hard", "--k", "64", "--m", "2", "--eps", "0.5", "--case", "far", "--seed", "4", "--out", far.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(far.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["equal_case"], false);
}

#[test]
fn experiment_writes_csv_and_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "seed = 2\ntrials = 2\nfamilies = [\"uniform-grid\"]\nk = [4]\neps = [1.0]\ngrid_n = 3\n",
    );
    let out = akct(&["experiment", &cfg, "--trials", "3", "--jobs", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("schema,trial,seed,family,k,d,eps,m,verdict,statistic,threshold,wall_ms"));
    let snap = std::fs::read_to_string(dir.path().join("sweep.csv.config.toml")).unwrap();
    assert!(snap.contains("trials = 3"));

    let other = dir.path().join("other.csv");
    akct(&["experiment", &cfg, "--trials", "3", "--jobs", "1", "--out", other.to_str().unwrap()]);
    assert_eq!(std::fs::read_to_string(other).unwrap(), csv);
}

#[test]
fn verify_runs_a_suite() {
    let out = akct(&["verify", "covering", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.trim_start().starts_with("PASS")));
    assert!(!text.lines().any(|l| l.trim_start().starts_with("FAIL")));
}
