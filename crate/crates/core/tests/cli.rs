//! End-to-end runs of the `ddtune` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn ddtune(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddtune"))
        .args(args)
        .env_remove("DDTUNE_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

const BATCH: &str = r#"{"tune": {"task": "clustering-M1"},
 "train": {"generator": {"task": "clustering", "n": 6, "L": 1, "k": 2}, "count": 12},
 "holdout": {"generator": {"task": "clustering", "n": 6, "L": 1, "k": 2}, "count": 12}, "seed": 3}"#;

const ONLINE: &str = r#"{"task": "clustering-M1", "generator": {"task": "clustering", "n": 6, "L": 1, "k": 2}, "t": 30}"#;

#[test]
fn gen_is_byte_identical_per_seed() {
    let tmp = TempDir::new().unwrap();
    let run = |dir: &str, seed: &str| {
        let out = tmp.path().join(dir);
        let o = ddtune(&[
            "--seed", seed, "--out-dir", out.to_str().unwrap(),
            "gen", "--task", "clustering", "--n", "7", "--L", "2", "--count", "3",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        (0..3).map(|i| fs::read(out.join(format!("instance_{i:04}.json"))).unwrap()).collect::<Vec<_>>()
    };
    let a = run("a", "11");
    assert_eq!(a, run("b", "11"));
    assert_ne!(a, run("c", "12"));
    let doc: Value = serde_json::from_slice(&a[0]).unwrap();
    assert_eq!(doc["header"]["seed"], 11);
}

#[test]
fn tune_batch_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "batch.json", BATCH);
    let mut csvs = Vec::new();
    for threads in ["1", "4", "4"] {
        let out = tmp.path().join(format!("t{}", csvs.len()));
        let o = ddtune(&["--threads", threads, "--out-dir", out.to_str().unwrap(), "tune-batch", "--config", &cfg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        csvs.push(fs::read_to_string(out.join("tune_batch.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
    assert_eq!(csvs[1], csvs[2]);
    let first = csvs[0].lines().next().unwrap();
    assert!(first.starts_with("# ddtune ") && first.contains(" seed=3 ") && first.contains("config=sha256:"), "{first}");
    assert!(csvs[0].lines().nth(1).unwrap().contains("mean_utility"));
}

#[test]
fn tune_online_trace_is_deterministic_across_thread_counts() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(tmp.path(), "online.json", ONLINE);
    let run = |threads: &str, dir: &str| {
        let out = tmp.path().join(dir);
        let o = ddtune(&["--threads", threads, "--seed", "5", "--out-dir", out.to_str().unwrap(), "tune-online", "--config", &cfg]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        fs::read_to_string(out.join("regret_trace.csv")).unwrap()
    };
    let a = run("1", "o1");
    assert_eq!(a, run("4", "o4"));
    assert_eq!(a.lines().nth(1).unwrap(), "t,cum_utility,cum_best,regret");
    assert_eq!(a.lines().count(), 2 + 30);
}

#[test]
fn bounds_reports_tuple_and_value() {
    let o = ddtune(&["bounds", "--family", "H1", "--n", "3", "--L", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = v.to_string();
    assert!(text.contains("6561"), "{text}");
    assert!(text.contains("3385.898267261006"), "{text}");
    let lower = ddtune(&["bounds", "--family", "h1", "--n", "3", "--L", "1"]);
    assert_eq!(lower.stdout, o.stdout);
}

#[test]
fn validation_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let bad = write(tmp.path(), "bad.json", r#"{"task": "clustering-M1", "bogus": 1}"#);
    let cases: Vec<Vec<&str>> = vec![
        vec!["gen", "--task", "clustering"],
        vec!["--threads", "0", "bounds", "--family", "H1", "--n", "3", "--L", "1"],
        vec!["bounds", "--family", "nope", "--n", "4"],
        vec!["tune-online", "--config", &bad],
        vec!["no-such-command"],
    ];
    for args in cases {
        let o = ddtune(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", stderr(&o));
        assert!(!stderr(&o).is_empty());
    }
    let o = ddtune(&["tune-online", "--config", &bad]);
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
    let o = ddtune(&["gen", "--task", "clustering"]);
    assert!(stderr(&o).contains("--n"), "{}", stderr(&o));
}

#[test]
fn unreadable_config_is_rejected_as_input() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("absent.json");
    let o = ddtune(&["tune-batch", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn failing_criterion_exits_with_one() {
    let tmp = TempDir::new().unwrap();
    let o = ddtune(&[
        "--out-dir", tmp.path().to_str().unwrap(),
        "acceptance", "--criterion", "5", "--fault", "misanchored-path",
    ]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
}

#[test]
fn out_dir_falls_back_to_environment() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_ddtune"))
        .args(["gen", "--task", "logreg", "--m", "10", "--p", "2", "--m-val", "5"])
        .env("DDTUNE_OUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(tmp.path().join("instance_0000.json").exists());
}

#[test]
fn help_lists_subcommands() {
    let o = ddtune(&["--help"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for sub in ["gen", "tune-batch", "tune-online", "bounds", "dispersion", "path-study", "convergence", "acceptance"] {
        assert!(text.contains(sub), "missing {sub}");
    }
}
