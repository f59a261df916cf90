//! End-to-end checks of the command-line front end: exit codes and
//! byte-identical artifacts across repeated runs.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_safeddp"))
}

fn tmpdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("safeddp-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let out = bin()
        .args(["config", "init", "--system", "pendulum"])
        .output()
        .unwrap();
    assert!(out.status.success(), "config init failed");
    // shrink the batch so the test stays fast
    let text = String::from_utf8(out.stdout)
        .unwrap()
        .replace("trials = 1000", "trials = 25");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn unknown_system_and_missing_config_exit_with_code_2() {
    let status = bin()
        .args(["config", "init", "--system", "unicycle"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = bin()
        .args(["solve", "--config", "/definitely/not/there.toml"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn invalid_parameter_exits_with_code_2() {
    let dir = tmpdir("badcfg");
    let cfg = write_config(&dir);
    let bad = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("velocity_limit = 5.0", "velocity_limit = -1.0");
    let bad_path = dir.join("bad.toml");
    std::fs::write(&bad_path, bad).unwrap();
    let status = bin()
        .args(["solve", "--config"])
        .arg(&bad_path)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn iteration_starved_solve_exits_with_code_3() {
    let dir = tmpdir("noconv");
    let cfg = write_config(&dir);
    let starved = std::fs::read_to_string(&cfg)
        .unwrap()
        .replace("max_iterations = 500", "max_iterations = 2");
    let starved_path = dir.join("starved.toml");
    std::fs::write(&starved_path, starved).unwrap();
    let status = bin()
        .args(["solve", "--config"])
        .arg(&starved_path)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn full_pipeline_succeeds_and_artifacts_are_reproducible() {
    let dir = tmpdir("pipeline");
    let cfg = write_config(&dir);
    let out_a = dir.join("a");
    let out_b = dir.join("b");
    for out in [&out_a, &out_b] {
        let status = bin()
            .args(["evaluate", "--config"])
            .arg(&cfg)
            .args(["--solve-first", "--out"])
            .arg(out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
    }
    for file in ["solution.json", "metrics_robust.json", "trajectory.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    let status = bin()
        .args(["export-plotdata", "--config"])
        .arg(&cfg)
        .args(["--trials", "10", "--out"])
        .arg(&out_a)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out_a.join("envelope_robust.csv")).unwrap();
    assert!(csv.lines().count() > 100, "envelope csv looks empty");
}
