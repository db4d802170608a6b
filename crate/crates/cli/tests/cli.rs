use std::path::Path;
use std::process::{Command, Output};

fn gatekeeper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gatekeeper")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(gatekeeper(&[]).status.code(), Some(1));
    assert_eq!(gatekeeper(&["firewatch", "--seed", "x"]).status.code(), Some(1));
    assert_ne!(gatekeeper(&["firewatch", "--config", "/nonexistent/cfg.txt"]).status.code(), Some(0));
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.txt");
    std::fs::write(&cfg, "control_dt = -1\n").unwrap();
    let o = gatekeeper(&["firewatch", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("run").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    let o = gatekeeper(&["firewatch", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn firewatch_then_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    let run_s = run.to_str().unwrap();
    let o = gatekeeper(&["firewatch", "--seed", "2", "--duration", "30", "--out", run_s, "--plot"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.txt", "metrics.csv", "commit_log.csv", "summary.txt", "summary.csv", "fronts.csv"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    assert!(Path::new(&run).join("plot/trace.csv").is_file());

    let o = gatekeeper(&["summarize", run_s, "--csv"]);
    assert_eq!(o.status.code(), Some(0));
    let written = std::fs::read_to_string(run.join("summary.csv")).unwrap();
    assert_eq!(stdout(&o).trim(), written.trim());

    let o = gatekeeper(&["summarize", dir.path().join("missing").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn oracle_reports_every_check() {
    let o = gatekeeper(&["appendix-oracle", "--samples", "50", "--trials", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 4, "{text}");
}
