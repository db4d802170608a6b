use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gatekeeper::harness::{
    appendix_oracle, emit_plot_data, load_summary, save_run, theorem_suite, CheckResult, OracleConfig,
    TheoremSuiteConfig,
};
use gatekeeper::mission::{run_mission, FilterMode, Preset, ScenarioConfig, Summary};
use gatekeeper::vehicles::{calibrate_iss, random_helicopter_reference, CalibrationConfig, Helicopter};
use gatekeeper::Error;

#[derive(Parser)]
#[command(name = "gatekeeper", version, about = "Committed-trajectory safety filter: firewatch simulation and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the firewatch mission and write a run directory.
    Firewatch(FirewatchArgs),
    /// Containment checks on the analytic disk-fire example.
    AppendixOracle(OracleArgs),
    /// Safety, exact-tracking and tube properties over desk-scale runs.
    TheoremSuite(TheoremArgs),
    /// Fit the tracking-error envelope of the helicopter controller.
    CalibrateIss(CalibrateArgs),
    /// Re-summarize a run directory.
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct FirewatchArgs {
    /// Scenario file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated flight time in seconds.
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long)]
    filter: Option<FilterMode>,
    /// Spread-rate bound used for forecasts, m/s.
    #[arg(long)]
    sigma_assumed: Option<f64>,
    /// Run directory (default: runs/<filter>-seed<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot-ready CSV into <out>/plot.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct TheoremArgs {
    /// Number of undisturbed seeds.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[arg(long, default_value_t = 20)]
    perturbed: usize,
    #[arg(long, default_value_t = 0.2)]
    d_bar: f64,
    #[arg(long, default_value_t = 0.2)]
    v_bar: f64,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[arg(long, default_value_t = 100)]
    fit_runs: usize,
    #[arg(long, default_value_t = 100)]
    holdout_runs: usize,
    /// Disturbance bound used for the fit.
    #[arg(long, default_value_t = 0.2)]
    w_bar: f64,
    /// Largest initial tracking error.
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    decay: f64,
    #[arg(long, default_value_t = 1.5)]
    safety: f64,
    /// Length of each reference, s.
    #[arg(long, default_value_t = 60.0)]
    duration: f64,
    #[arg(long, default_value_t = 2024)]
    seed: u64,
    /// Write the fitted bound as scenario config lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SummarizeArgs {
    dir: PathBuf,
    /// Print the CSV row instead of the table.
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    plot: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Usage(_) | Error::Parse(_) | Error::Config(_) => 1,
        Error::Startup(_) => 3,
        _ => 2,
    }
}

fn setup_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("GATEKEEPER_THREADS") {
        let n: usize = v.trim().parse().map_err(|_| Error::Usage(format!("GATEKEEPER_THREADS must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Usage("GATEKEEPER_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn read_config(path: Option<&Path>, preset: Option<Preset>) -> Result<ScenarioConfig, Error> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Usage(format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    match preset {
        // The flag wins over a preset line in the file.
        Some(p) => {
            let body: String = text
                .lines()
                .filter(|l| l.split_once('=').map_or(true, |(k, _)| k.trim() != "preset"))
                .map(|l| format!("{l}\n"))
                .collect();
            ScenarioConfig::parse(&format!("preset = {p}\n{body}"))
        }
        None => ScenarioConfig::parse(&text),
    }
}

fn print_checks(results: &[CheckResult]) -> u8 {
    for r in results {
        println!("{}", r.line());
    }
    if results.iter().all(CheckResult::passed) {
        0
    } else {
        2
    }
}

fn firewatch(a: FirewatchArgs) -> Result<u8, Error> {
    let mut cfg = read_config(a.config.as_deref(), a.preset)?;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(d) = a.duration {
        cfg.duration = d;
    }
    if let Some(f) = a.filter {
        cfg.filter = f;
    }
    if let Some(s) = a.sigma_assumed {
        cfg.sigma_max_assumed = s;
    }
    cfg.validate()?;
    let out_dir = a.out.unwrap_or_else(|| PathBuf::from(format!("runs/{}-seed{}", cfg.filter, cfg.seed)));
    let started = gatekeeper::harness::unix_now();
    let clock = Instant::now();
    let out = run_mission(&cfg)?;
    save_run(&out, &out_dir, started)?;
    if a.plot {
        emit_plot_data(&out_dir)?;
    }
    print!("{}", out.summary.render(&format!("{} seed {}", cfg.filter, cfg.seed)));
    if let Some(c) = &out.commitment_check {
        println!("commitment check: {} samples, {} violations", c.samples, c.violations);
    }
    println!("wrote {} ({:.1} s)", out_dir.display(), clock.elapsed().as_secs_f64());
    Ok(0)
}

fn calibrate(a: CalibrateArgs) -> Result<u8, Error> {
    let model = Helicopter::<f64>::default();
    let cfg = CalibrationConfig {
        decay: a.decay,
        delta_max: a.delta,
        w_bar: a.w_bar,
        fit_runs: a.fit_runs,
        holdout_runs: a.holdout_runs,
        safety: a.safety,
        seed: a.seed,
        ..Default::default()
    };
    let dt = cfg.dt;
    let rep = calibrate_iss(&model, |rng| random_helicopter_reference(&model, rng, a.duration, dt), &cfg)?;
    let lines = format!(
        "iss_gain = {}\niss_decay = {}\niss_disturbance_gain = {}\n",
        rep.bound.gain, rep.bound.decay, rep.bound.disturbance_gain
    );
    print!("{lines}");
    println!(
        "# empirical gain {:.4}, empirical disturbance gain {:.4}; hold-out: {} runs, {} exceedances, worst ratio {:.3}",
        rep.gain_empirical, rep.disturbance_gain_empirical, rep.holdout_runs, rep.holdout_exceedances, rep.holdout_worst_ratio
    );
    if let Some(p) = a.out {
        std::fs::write(&p, lines)?;
    }
    Ok(if rep.holdout_exceedances == 0 { 0 } else { 2 })
}

fn summarize(a: SummarizeArgs) -> Result<u8, Error> {
    let s = load_summary(&a.dir)?;
    if a.csv {
        println!("{}\n{}", Summary::CSV_HEADER, s.csv_row());
    } else {
        print!("{}", s.render(&a.dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()));
    }
    if a.plot {
        for p in emit_plot_data(&a.dir)? {
            println!("wrote {}", p.display());
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    setup_threads()?;
    match cli.command {
        Command::Firewatch(a) => firewatch(a),
        Command::AppendixOracle(a) => {
            let clock = Instant::now();
            let cfg = OracleConfig { samples: a.samples, trials: a.trials, seed: a.seed, ..Default::default() };
            let code = print_checks(&appendix_oracle(&cfg)?);
            println!("({:.2} s)", clock.elapsed().as_secs_f64());
            Ok(code)
        }
        Command::TheoremSuite(a) => {
            let base = read_config(a.config.as_deref(), None)?;
            let cfg = TheoremSuiteConfig {
                base,
                seeds: (1..=a.seeds).collect(),
                perturbed_runs: a.perturbed,
                d_bar: a.d_bar,
                v_bar: a.v_bar,
                ..Default::default()
            };
            Ok(print_checks(&theorem_suite(&cfg)?))
        }
        Command::CalibrateIss(a) => calibrate(a),
        Command::Summarize(a) => summarize(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
