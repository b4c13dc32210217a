mod common;

use std::process::Command;

use anodec::config::Setup;

fn anodec() -> Command {
    Command::new(env!("CARGO_BIN_EXE_anodec"))
}

fn write_tiny_config(dir: &std::path::Path) -> std::path::PathBuf {
    let cfg = common::tiny(Setup::Unloaded);
    let text = format!(
        "ci_profile = true\n\n[plant]\ntrial_duration = {}\n\n[train]\nmodel_steps = {}\ncontroller_steps = {}\nreference_batch = {}\nvalidation_interval = {}\n\n[suite]\nsteps = 1\ndouble_steps = 1\nsplines = 2\n\n[disturbances]\ntrial_duration = 3.0\n",
        cfg.plant.trial_duration,
        cfg.train.model_steps,
        cfg.train.controller_steps,
        cfg.train.reference_batch,
        cfg.train.validation_interval,
    );
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn pipeline_succeeds_and_reruns_clean() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out = dir.path().join("out");
    for _ in 0..2 {
        let status = anodec()
            .args(["pipeline", "--disturbances", "--seed", "4", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(&out)
            .output()
            .unwrap();
        assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
        let stdout = String::from_utf8_lossy(&status.stdout);
        assert_eq!(stdout.lines().count(), 6);
    }
    assert!(out.join("evaluation/summary.json").exists());
    assert!(out.join("evaluation/disturbed/summary.json").exists());
}

#[test]
fn individual_stages_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out = dir.path().join("out");
    let run = |cmd: &str| anodec().arg(cmd).arg("--config").arg(&cfg).arg("--out").arg(&out).status().unwrap().code();
    assert_eq!(run("train-model"), Some(1));
    assert_eq!(run("collect"), Some(0));
    assert_eq!(run("train-model"), Some(0));
    assert_eq!(run("train-controller"), Some(0));
    assert_eq!(run("evaluate"), Some(0));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[plant]\nunknown_key = 1\n").unwrap();
    let out = dir.path().join("out");
    let code = |args: &[&str]| anodec().args(args).arg("--out").arg(&out).status().unwrap().code();
    assert_eq!(code(&["collect", "--config", bad.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["collect", "--config", dir.path().join("missing.toml").to_str().unwrap()]), Some(2));
    assert_eq!(code(&["collect", "--setup", "3"]), Some(2));
    assert_eq!(code(&["collect", "--bogus"]), Some(2));
}

#[test]
fn reusing_a_directory_with_another_seed_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out = dir.path().join("out");
    let code = |seed: &str| {
        anodec().args(["collect", "--seed", seed, "--config"]).arg(&cfg).arg("--out").arg(&out).status().unwrap().code()
    };
    assert_eq!(code("1"), Some(0));
    assert_eq!(code("2"), Some(2));
}
