use std::io::BufReader;

use gatekeeper::harness::{emit_plot_data, load_summary, save_run, RunManifest, PLOT_FILES, RUN_FILES};
use gatekeeper::mission::{run_mission, FilterMode, MetricsLog, ScenarioConfig, DEFAULT_SPREAD};

fn short(seed: u64, filter: FilterMode) -> ScenarioConfig {
    ScenarioConfig { seed, filter, duration: 60.0, ..ScenarioConfig::default() }
}

fn csv(log: &MetricsLog) -> Vec<u8> {
    let mut v = Vec::new();
    log.write_csv(&mut v).unwrap();
    v
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let cfg = short(3, FilterMode::Gatekeeper);
    let a = run_mission(&cfg).unwrap();
    let b = run_mission(&cfg).unwrap();
    assert_eq!(csv(&a.metrics), csv(&b.metrics));
    let strip = |o: &gatekeeper::mission::MissionOutput| {
        o.metrics.iterations.iter().map(|i| (i.k, i.t, i.outcome, i.t_switch, i.reject_reason.clone())).collect::<Vec<_>>()
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.commitment_check, b.commitment_check);
    let c = run_mission(&short(4, FilterMode::Gatekeeper)).unwrap();
    assert_ne!(csv(&a.metrics), csv(&c.metrics));
}

#[test]
fn parallel_search_matches_sequential() {
    let seq = run_mission(&short(2, FilterMode::Gatekeeper)).unwrap();
    let par = run_mission(&ScenarioConfig { parallel: true, ..short(2, FilterMode::Gatekeeper) }).unwrap();
    assert_eq!(csv(&seq.metrics), csv(&par.metrics));
}

#[test]
fn run_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short(1, FilterMode::Gatekeeper);
    let out = run_mission(&cfg).unwrap();
    let manifest = save_run(&out, dir.path(), 0).unwrap();
    for f in RUN_FILES {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    assert_eq!(RunManifest::read(dir.path()).unwrap(), manifest);
    assert_eq!(load_summary(dir.path()).unwrap(), out.summary);

    // Re-executing the manifest reproduces the statistics (timings aside).
    let again = run_mission(&manifest.config).unwrap();
    let mut a = again.summary.clone();
    let mut b = out.summary.clone();
    for s in [&mut a, &mut b] {
        s.median_ms = 0.0;
        s.iqr_ms = 0.0;
    }
    assert_eq!(a, b);

    let paths = emit_plot_data(dir.path()).unwrap();
    assert_eq!(paths.len(), PLOT_FILES.len());
    for (p, (name, header)) in paths.iter().zip(PLOT_FILES) {
        let text = std::fs::read_to_string(p).unwrap();
        assert!(p.ends_with(name));
        assert_eq!(text.lines().next(), Some(header));
    }
    let trace = std::fs::read_to_string(dir.path().join("plot/trace.csv")).unwrap();
    let expected = (cfg.duration / cfg.control_dt).round() as usize + 1;
    assert_eq!(trace.lines().count() - 1, expected);
    let rows = MetricsLog::read_csv(BufReader::new(std::fs::File::open(dir.path().join("metrics.csv")).unwrap())).unwrap();
    assert_eq!(rows, out.metrics.rows);
}

#[test]
fn missing_artifact_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_mission(&ScenarioConfig { duration: 20.0, ..short(1, FilterMode::Off) }).unwrap();
    save_run(&out, dir.path(), 0).unwrap();
    std::fs::remove_file(dir.path().join("fronts.csv")).unwrap();
    let err = emit_plot_data(dir.path()).unwrap_err().to_string();
    assert!(err.contains("fronts.csv") && !err.contains("metrics.csv"), "{err}");
}

#[test]
fn underestimated_spread_is_flagged() {
    let cfg = ScenarioConfig { sigma_max_assumed: 0.5 * DEFAULT_SPREAD, ..short(1, FilterMode::Gatekeeper) };
    let out = run_mission(&cfg).unwrap();
    assert!(out.summary.breach);
    assert!(out.summary.render("x").contains("BREACH"));
    let ok = run_mission(&short(1, FilterMode::Gatekeeper)).unwrap();
    assert!(!ok.summary.breach && !ok.summary.render("x").contains("BREACH"));
}

#[test]
fn startup_failure_is_reported() {
    // Starting inside the fire leaves no valid initial commitment.
    let cfg = ScenarioConfig { start_distance: 0.0, fire_radius: 800.0, ..short(1, FilterMode::Gatekeeper) };
    let err = run_mission(&cfg).unwrap_err();
    assert!(matches!(err, gatekeeper::Error::Startup(_)), "{err}");
}
