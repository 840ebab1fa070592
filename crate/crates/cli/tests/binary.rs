use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rydsqueeze_cli::config::DEFAULT_CONFIG;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydsqueeze")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

/// Default config with the lines starting with each key replaced.
fn write_config(dir: &Path, edits: &[(&str, &str)]) -> String {
    let mut text = String::new();
    for line in DEFAULT_CONFIG.lines() {
        match edits.iter().find(|(key, _)| line.starts_with(&format!("{key} "))) {
            Some((key, value)) => text.push_str(&format!("{key} = {value}\n")),
            None => text.push_str(&format!("{line}\n")),
        }
    }
    for (key, _) in edits {
        assert!(DEFAULT_CONFIG.lines().any(|l| l.starts_with(&format!("{key} "))), "default config lacks `{key}`");
    }
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn without_timestamp(manifest: &str) -> String {
    manifest.lines().filter(|l| !l.starts_with("timestamp")).collect::<Vec<_>>().join("\n")
}

#[test]
fn prints_the_default_config() {
    let out = run(&["--print-default-config"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), DEFAULT_CONFIG);
}

#[test]
fn usage_and_validation_errors_exit_with_one() {
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    assert_eq!(run(&["calibrate", "--subcommand", "sweep"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &[("n_pulses", "47")]);
    let out = run(&["calibrate", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_pulses"));
    assert!(!dir.path().join("o").exists());
}

#[test]
fn numerical_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    // two identical system sizes leave the scaling fit without an abscissa
    let config = write_config(
        dir.path(),
        &[("n_atoms", "40"), ("cloud_seeds", "1"), ("uniform_atoms", "20"), ("oat_sizes", "[50, 50]")],
    );
    let out = run(&["ising-limit", "--config", &config, "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn flag_and_positional_forms_agree_and_rerun_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run(&["calibrate", "--seed", "11", "--out", a.to_str().unwrap(), "--threads", "1"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = run(&["--subcommand", "calibrate", "--seed", "11", "--out", b.to_str().unwrap(), "--threads", "1"]);
    assert!(second.status.success());

    let mut names: Vec<String> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    names.sort();
    assert!(names.contains(&"manifest.txt".to_string()) && names.contains(&"calibration_summary.csv".to_string()));
    for name in &names {
        let (x, y) = (fs::read_to_string(a.join(name)).unwrap(), fs::read_to_string(b.join(name)).unwrap());
        if name == "manifest.txt" {
            assert_eq!(without_timestamp(&x), without_timestamp(&y));
            assert!(x.contains("seed = 11"));
            assert_eq!(x.lines().filter(|l| l.starts_with("file = ")).count(), names.len() - 1);
        } else {
            assert_eq!(x, y, "{name} differs");
        }
    }
}

#[test]
fn different_seeds_give_different_shots() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&["calibrate", "--seed", "1", "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["calibrate", "--seed", "2", "--out", b.to_str().unwrap()]).status.success());
    let read = |d: &Path| fs::read_to_string(d.join("calibration_summary.csv")).unwrap();
    assert_ne!(read(&a), read(&b));
}
