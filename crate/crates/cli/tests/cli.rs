use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SOLVE: &str = r#"{
  "command": "solve",
  "mesh": {"generate": {"generator": {"disk": {"radius": 2.0}}, "resolution": 1, "conductor": {"disk": {"radius": 1.0}}}},
  "medium": {"p": 2.0, "phi": 0.0, "psi": 1.0}
}"#;

fn hd(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hd"));
    cmd.args(args).env_remove("HD_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", &SOLVE.replace("\"psi\": 1.0", "\"psi\": 1.0, \"sigma\": 2"));
    let out = dir.path().join("out");
    let o = hd(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn command_mismatch_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    let o = hd(&["eigen", "--config", &cfg], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("solve"), "{}", stderr(&o));
}

#[test]
fn solve_writes_outputs_with_lf() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    let out = dir.path().join("run");
    let o = hd(&["solve", "--config", &cfg, "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for name in ["report.json", "field.csv", "summary.txt"] {
        let text = fs::read_to_string(out.join(name)).unwrap();
        assert!(!text.is_empty() && !text.contains('\r'), "{name}");
    }
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report["report"]["value"].as_f64().unwrap() > 0.0);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("elapsed_seconds"));
}

#[test]
fn deterministic_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = hd(
            &["solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--deterministic"],
            &[("HD_THREADS", threads)],
        );
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let (a, b) = (run("a", "1"), run("b", "3"));
    for name in ["report.json", "field.csv", "summary.txt"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert!(!fs::read_to_string(a.join("summary.txt")).unwrap().contains("elapsed"));
}

#[test]
fn refine_overrides_resolution() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    let vertices = |refine: &str| {
        let out = dir.path().join(format!("r{refine}"));
        let o = hd(&["solve", "--config", &cfg, "--out", out.to_str().unwrap(), "--refine", refine], &[]);
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read_to_string(out.join("field.csv")).unwrap().lines().count()
    };
    assert!(vertices("2") > vertices("0"));
}

#[test]
fn bad_thread_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "solve.json", SOLVE);
    for bad in ["0", "many"] {
        let o = hd(&["solve", "--config", &cfg], &[("HD_THREADS", bad)]);
        assert!(!o.status.success());
        assert!(stderr(&o).contains("HD_THREADS"), "{}", stderr(&o));
    }
}

#[test]
fn missing_config_fails() {
    let o = hd(&["solve", "--config", "/nonexistent/run.json"], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"));
}
