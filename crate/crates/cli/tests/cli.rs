use std::path::Path;
use std::process::{Command, Output};

fn wcb(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wcb"));
    cmd.args(args).env_remove("WCB_SEED");
    if let Some(s) = seed {
        cmd.env("WCB_SEED", s);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{"rounds": 4, "round_length": 10.0, "replications": 2, "task_rate": 3.0, "volunteer_rate": 30.0, "rng_seed": 1}"#;

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let res = wcb(&["run", "--config", &config, "--policy", "training", "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for name in ["rounds_training_0.csv", "rounds_training_1.csv", "figures.csv", "summary.json"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    assert_eq!(summary(&out)["config"]["policy"], "training");
}

#[test]
fn seed_variable_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let res = wcb(&["run", "--config", &config, "--out", out.to_str().unwrap()], Some("77"));
    assert_eq!(code(&res), 0);
    let doc = summary(&out);
    assert_eq!(doc["config"]["rng_seed"], 77);
    assert_eq!(doc["seeds"], serde_json::json!([77, 76]));

    let bad = wcb(&["calibrate", "--config", &config], Some("minus one"));
    assert_eq!(code(&bad), 1);
}

#[test]
fn gen_output_feeds_a_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let res = wcb(&["gen", "--out", data.to_str().unwrap(), "--tasks", "20", "--volunteers", "200", "--seed", "3"], None);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let tasks = std::fs::read_to_string(data.join("tasks.csv")).unwrap();
    assert_eq!(tasks.lines().count(), 21);
    assert!(!tasks.contains('\r'));

    let body = format!(
        r#"{{"rounds": 3, "replications": 1, "dataset": {{"tasks": {:?}, "volunteers": {:?}}}}}"#,
        data.join("tasks.csv"),
        data.join("volunteers.csv")
    );
    let config = write_config(tmp.path(), &body);
    let out = tmp.path().join("out");
    let res = wcb(&["run", "--config", &config, "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(summary(&out)["generator"].is_null());
}

#[test]
fn gen_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        assert_eq!(code(&wcb(&["gen", "--out", dir.to_str().unwrap(), "--tasks", "5", "--volunteers", "9"], Some("12"))), 0);
    }
    for file in ["tasks.csv", "volunteers.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
    }
}

#[test]
fn validation_failures_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let out = out.to_str().unwrap();
    for body in [r#"{"gamma": 1.5}"#, r#"{"replications": 0}"#, r#"{"no_such_field": 1}"#, "not json"] {
        let config = write_config(tmp.path(), body);
        let res = wcb(&["run", "--config", &config, "--out", out], None);
        assert_eq!(code(&res), 1, "{body}: {}", String::from_utf8_lossy(&res.stderr));
    }
    assert_eq!(code(&wcb(&["calibrate", "--offset", "-0.1"], None)), 1);
    assert_eq!(code(&wcb(&["frobnicate"], None)), 1);

    let data = tmp.path().join("bad");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("tasks.csv"), "task_id,budget,required_skills,arrival,duration\nt1,-5,a,0,1\n").unwrap();
    std::fs::write(data.join("volunteers.csv"), "garbage\n").unwrap();
    let body = format!(
        r#"{{"dataset": {{"tasks": {:?}, "volunteers": {:?}}}}}"#,
        data.join("tasks.csv"),
        data.join("volunteers.csv")
    );
    let config = write_config(tmp.path(), &body);
    assert_eq!(code(&wcb(&["run", "--config", &config, "--out", out], None)), 1);
}

#[test]
fn io_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.json");
    assert_eq!(code(&wcb(&["calibrate", "--config", missing.to_str().unwrap()], None)), 2);

    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "x").unwrap();
    let config = write_config(tmp.path(), SMALL);
    let out = blocker.join("out");
    assert_eq!(code(&wcb(&["compare", "--config", &config, "--out", out.to_str().unwrap()], None)), 2);
}

#[test]
fn help_exits_zero() {
    let res = wcb(&["--help"], None);
    assert_eq!(code(&res), 0);
    assert!(String::from_utf8_lossy(&res.stdout).contains("calibrate"));
}
