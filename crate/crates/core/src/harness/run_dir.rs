//! Run directories: manifest, metrics, commit log, summary and fronts, plus
//! plot-ready CSV derived from them.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use crate::error::{Error, Result};
use crate::mission::{read_iterations, summarize, write_iterations, MetricsLog, MissionOutput, ScenarioConfig, Summary};

pub const MANIFEST: &str = "manifest.txt";
pub const METRICS: &str = "metrics.csv";
pub const COMMIT_LOG: &str = "commit_log.csv";
pub const SUMMARY_TXT: &str = "summary.txt";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const FRONTS: &str = "fronts.csv";

/// Files every completed run directory holds.
pub const RUN_FILES: [&str; 6] = [MANIFEST, METRICS, COMMIT_LOG, SUMMARY_TXT, SUMMARY_CSV, FRONTS];

/// Files written by [`emit_plot_data`] into `<run>/plot`.
pub const PLOT_FILES: [(&str, &str); 4] = [
    ("distance.csv", "t,distance"),
    ("speed.csv", "t,speed"),
    ("trace.csv", "t,x,y"),
    ("fronts.csv", "t,x,y"),
];

/// Configuration snapshot plus provenance of a run. The file is the
/// scenario config with `#` metadata lines, so it parses back as a config.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub config: ScenarioConfig,
    pub version: String,
    /// Wall-clock start and end, seconds since the Unix epoch.
    pub started: u64,
    pub finished: u64,
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn new(config: ScenarioConfig, started: u64, finished: u64) -> Self {
        Self {
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            started,
            finished,
            files: RUN_FILES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::from("# firewatch run manifest\n");
        s.push_str(&format!("# version: {}\n", self.version));
        s.push_str(&format!("# started: {}\n", self.started));
        s.push_str(&format!("# finished: {}\n", self.finished));
        s.push_str(&format!("# files: {}\n", self.files.join(" ")));
        s.push_str(&self.config.to_kv());
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config = ScenarioConfig::parse(text)?;
        let meta = |key: &str| {
            text.lines()
                .filter_map(|l| l.strip_prefix('#'))
                .filter_map(|l| l.split_once(':'))
                .find(|(k, _)| k.trim() == key)
                .map(|(_, v)| v.trim().to_string())
        };
        let num = |key: &str| -> Result<u64> {
            meta(key)
                .ok_or_else(|| Error::Parse(format!("manifest lacks '{key}'")))?
                .parse()
                .map_err(|_| Error::Parse(format!("manifest '{key}' is not an integer")))
        };
        Ok(Self {
            config,
            version: meta("version").ok_or_else(|| Error::Parse("manifest lacks 'version'".into()))?,
            started: num("started")?,
            finished: num("finished")?,
            files: meta("files").map(|f| f.split_whitespace().map(str::to_string).collect()).unwrap_or_default(),
        })
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(dir.join(MANIFEST))?)
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes a completed run into `dir` (created if needed).
pub fn save_run(out: &MissionOutput, dir: &Path, started: u64) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    out.metrics.write_csv(create(dir, METRICS)?)?;
    write_iterations(&out.metrics.iterations, create(dir, COMMIT_LOG)?)?;
    let label = format!("{} seed {}", out.config.filter, out.config.seed);
    let mut text = out.summary.render(&label);
    if let Some(c) = &out.commitment_check {
        text.push_str(&format!(
            "commitment check: {} commitments, {} samples, {} violations, min clearance {:.2} m\n",
            c.commitments, c.samples, c.violations, c.min_distance
        ));
    }
    fs::write(dir.join(SUMMARY_TXT), text)?;
    fs::write(dir.join(SUMMARY_CSV), format!("{}\n{}\n", Summary::CSV_HEADER, out.summary.csv_row()))?;
    let mut w = create(dir, FRONTS)?;
    writeln!(w, "t,x,y")?;
    for (t, pts) in &out.fronts {
        for p in pts {
            writeln!(w, "{t},{},{}", p[0], p[1])?;
        }
    }
    w.flush()?;
    // The manifest goes last: its presence marks a complete run.
    let manifest = RunManifest::new(out.config.clone(), started, unix_now());
    fs::write(dir.join(MANIFEST), manifest.render())?;
    Ok(manifest)
}

fn missing(dir: &Path, names: &[&str]) -> Vec<String> {
    names.iter().filter(|n| !dir.join(n).is_file()).map(|n| n.to_string()).collect()
}

fn require(dir: &Path, names: &[&str]) -> Result<()> {
    let gone = missing(dir, names);
    if gone.is_empty() {
        Ok(())
    } else {
        Err(Error::Io(format!("incomplete run directory {}: missing {}", dir.display(), gone.join(", "))))
    }
}

/// Recomputes the summary from the stored metrics and commit log.
pub fn load_summary(dir: &Path) -> Result<Summary> {
    require(dir, &[MANIFEST, METRICS, COMMIT_LOG])?;
    let manifest = RunManifest::read(dir)?;
    let rows = MetricsLog::read_csv(BufReader::new(File::open(dir.join(METRICS))?))?;
    let iterations = read_iterations(BufReader::new(File::open(dir.join(COMMIT_LOG))?))?;
    summarize(&rows, &iterations, manifest.config.assumption_breached())
}

/// Writes `distance.csv`, `speed.csv`, `trace.csv` and `fronts.csv` into
/// `<dir>/plot` and returns their paths.
pub fn emit_plot_data(dir: &Path) -> Result<Vec<PathBuf>> {
    require(dir, &RUN_FILES)?;
    let rows = MetricsLog::read_csv(BufReader::new(File::open(dir.join(METRICS))?))?;
    let plot = dir.join("plot");
    fs::create_dir_all(&plot)?;
    let mut paths = Vec::new();
    let mut open = |i: usize| -> Result<BufWriter<File>> {
        let (name, header) = PLOT_FILES[i];
        paths.push(plot.join(name));
        let mut w = create(&plot, name)?;
        writeln!(w, "{header}")?;
        Ok(w)
    };
    let (mut d, mut s, mut tr) = (open(0)?, open(1)?, open(2)?);
    for r in &rows {
        writeln!(d, "{},{}", r.t, r.distance)?;
        writeln!(s, "{},{}", r.t, r.speed)?;
        writeln!(tr, "{},{},{}", r.t, r.x, r.y)?;
    }
    let mut f = open(3)?;
    let src = BufReader::new(File::open(dir.join(FRONTS))?);
    for line in src.lines().skip(1) {
        writeln!(f, "{}", line?)?;
    }
    for w in [&mut d, &mut s, &mut tr, &mut f] {
        w.flush()?;
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::Preset;

    #[test]
    fn manifest_round_trip() {
        let mut cfg = ScenarioConfig::preset(Preset::Full);
        cfg.seed = 42;
        cfg.sigma_max_assumed = 3.125;
        let m = RunManifest::new(cfg, 10, 20);
        let back = RunManifest::parse(&m.render()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_directory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = emit_plot_data(dir.path()).unwrap_err().to_string();
        for f in RUN_FILES {
            assert!(err.contains(f), "{err}");
        }
        assert!(load_summary(dir.path()).is_err());
    }
}
