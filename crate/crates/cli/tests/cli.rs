use std::fs;
use std::process::{Command, Output};

fn svmstl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_svmstl")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn default_config_round_trips_through_a_file() {
    let o = svmstl(&["default-config"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("[cluster_trajectories]"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, &text).unwrap();
    // a stage whose inputs are absent still has to accept the config
    let o = svmstl(&["learn-predicates", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("run `svmstl extract` first"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(svmstl(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(svmstl(&[]).status.code(), Some(1));
    assert_eq!(svmstl(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "seed = 1\nunknown_key = 2\n").unwrap();
    assert_eq!(svmstl(&["simulate", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let o = svmstl(&["simulate", "--jobs", "0", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn monitor_reports_satisfaction_and_robustness() {
    let dir = tempfile::tempdir().unwrap();
    let sig = dir.path().join("s.csv");
    fs::write(&sig, "# t, h1, h2\n0,0.5,-1\n1,0.25,-2\n2,1,-0.5\n").unwrap();
    let s = sig.to_str().unwrap();
    let o = svmstl(&["monitor", "--expr", "G[0,2](h1 > 0) & F[0,2](h2 > -0.75)", "--signal", s]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "satisfied true");
    assert_eq!(lines[2], "robustness 0.25");
    let o = svmstl(&["monitor", "--expr", "F[1,1](h1 > 0.5)", "--signal", s, "--at", "1"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("robustness 0.5"));
    let o = svmstl(&["monitor", "--expr", "G[0,5](h1 > 0)", "--signal", s]);
    assert_eq!(o.status.code(), Some(1));
    let o = svmstl(&["monitor", "--expr", "G[0,(h1 > 0)", "--signal", s]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn a_finished_stage_is_skipped_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let out = dir.path().join("run");
    fs::write(&cfg, "[simulate]\nregimes = [[5.0, 5.0]]\n[simulate.params]\nframes = 3\ngrid_n = 8\n").unwrap();
    let args = ["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    let first = svmstl(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let report = fs::read(out.join("corpus/report.txt")).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_svmstl")).args(args).env("RUST_LOG", "info").output().unwrap();
    assert!(stderr(&o).contains("up to date"), "{}", stderr(&o));
    assert_eq!(fs::read(out.join("corpus/report.txt")).unwrap(), report);
}
