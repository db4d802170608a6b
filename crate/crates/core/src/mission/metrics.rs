use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::gatekeeper::Outcome;

/// One logged control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub speed: f64,
    /// True distance to the fire front (negative inside).
    pub distance: f64,
    /// Flat-coordinate error to the tracked reference.
    pub tracking_error: f64,
}

/// One planning iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRow {
    pub k: usize,
    pub t: f64,
    pub outcome: Outcome,
    pub t_switch: Option<f64>,
    pub reject_reason: String,
    pub compute_ms: f64,
}

pub const ITERATION_HEADER: &str = "k,t_k,T_S_star,verdict,reject_reason,compute_ms";

/// Writes iterations in the commit-log layout.
pub fn write_iterations<W: Write>(rows: &[IterationRow], mut w: W) -> Result<()> {
    writeln!(w, "{ITERATION_HEADER}")?;
    for r in rows {
        let ts = r.t_switch.map(|v| v.to_string()).unwrap_or_default();
        let reason = r.reject_reason.replace([',', '\n'], ";");
        writeln!(w, "{},{},{},{},{},{}", r.k, r.t, ts, r.outcome.as_str(), reason, r.compute_ms)?;
    }
    Ok(())
}

pub fn read_iterations<R: BufRead>(r: R) -> Result<Vec<IterationRow>> {
    let mut lines = r.lines();
    let head = lines.next().transpose()?.unwrap_or_default();
    if head.trim() != ITERATION_HEADER {
        return Err(Error::Parse(format!("unexpected commit log header '{head}'")));
    }
    let bad = |n: usize, what: &str| Error::Parse(format!("commit log line {}: bad {what}", n + 2));
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(bad(n, "field count"));
        }
        let outcome = match f[3] {
            "INITIAL" => Outcome::Initial,
            "VALID" => Outcome::Valid,
            "REJECTED-ALL" => Outcome::RejectedAll,
            _ => return Err(bad(n, "verdict")),
        };
        out.push(IterationRow {
            k: f[0].parse().map_err(|_| bad(n, "k"))?,
            t: f[1].parse().map_err(|_| bad(n, "t_k"))?,
            outcome,
            t_switch: if f[2].is_empty() { None } else { Some(f[2].parse().map_err(|_| bad(n, "T_S"))?) },
            reject_reason: f[4].to_string(),
            compute_ms: f[5].parse().map_err(|_| bad(n, "compute_ms"))?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
    pub iterations: Vec<IterationRow>,
}

pub const METRICS_HEADER: &str = "t,x,y,speed,distance,tracking_error";

impl MetricsLog {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{METRICS_HEADER}")?;
        for r in &self.rows {
            writeln!(w, "{},{},{},{},{},{}", r.t, r.x, r.y, r.speed, r.distance, r.tracking_error)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Vec<MetricsRow>> {
        let mut lines = r.lines();
        let head = lines.next().transpose()?.unwrap_or_default();
        if head.trim() != METRICS_HEADER {
            return Err(Error::Parse(format!("unexpected metrics header '{head}'")));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let v: Vec<f64> = line
                .split(',')
                .map(|f| f.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("metrics line {}: {e}", n + 2)))?;
            if v.len() != 6 {
                return Err(Error::Parse(format!("metrics line {}: expected 6 fields", n + 2)));
            }
            rows.push(MetricsRow { t: v[0], x: v[1], y: v[2], speed: v[3], distance: v[4], tracking_error: v[5] });
        }
        Ok(rows)
    }
}

/// Linear-interpolation quantile of sorted data (the common "type 7"
/// definition).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

/// Minimum, mean and sample standard deviation.
pub fn min_mean_std(v: &[f64]) -> (f64, f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (min, mean, std)
}

/// Run statistics in the shape of the comparison table: distance in km,
/// speed in m/s, compute time in ms.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub min_distance_km: f64,
    pub mean_distance_km: f64,
    pub std_distance_km: f64,
    pub mean_speed: f64,
    pub std_speed: f64,
    pub median_ms: f64,
    pub iqr_ms: f64,
    pub iterations: usize,
    pub commits: usize,
    pub rejected_all: usize,
    pub unsafe_steps: usize,
    pub breach: bool,
}

impl Summary {
    pub fn safe(&self) -> bool {
        self.unsafe_steps == 0
    }

    pub fn commit_rate(&self) -> f64 {
        if self.iterations == 0 {
            f64::NAN
        } else {
            self.commits as f64 / self.iterations as f64
        }
    }

    pub fn verdict(&self) -> &'static str {
        if self.safe() {
            "Safe"
        } else {
            "Unsafe"
        }
    }

    pub fn render(&self, label: &str) -> String {
        let mut s = String::new();
        if self.breach {
            s.push_str("!!! BREACH: assumed spread rate is below the true maximum; safety is not guaranteed !!!\n");
        }
        let _ = writeln!(
            s,
            "{:<12} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}  {}",
            "", "min[km]", "mean[km]", "std[km]", "v[m/s]", "std", "med[ms]", "IQR", ""
        );
        let _ = writeln!(
            s,
            "{:<12} {:>9.3} {:>9.3} {:>9.3} {:>9.2} {:>9.2} {:>9.2} {:>9.2}  {}",
            label,
            self.min_distance_km,
            self.mean_distance_km,
            self.std_distance_km,
            self.mean_speed,
            self.std_speed,
            self.median_ms,
            self.iqr_ms,
            self.verdict()
        );
        let _ = writeln!(
            s,
            "iterations {}  committed {} ({:.1}%)  rejected-all {}  unsafe steps {}",
            self.iterations,
            self.commits,
            100.0 * self.commit_rate(),
            self.rejected_all,
            self.unsafe_steps
        );
        s
    }

    pub const CSV_HEADER: &'static str = "min_distance_km,mean_distance_km,std_distance_km,mean_speed,std_speed,median_ms,iqr_ms,iterations,commits,rejected_all,unsafe_steps,breach";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.min_distance_km,
            self.mean_distance_km,
            self.std_distance_km,
            self.mean_speed,
            self.std_speed,
            self.median_ms,
            self.iqr_ms,
            self.iterations,
            self.commits,
            self.rejected_all,
            self.unsafe_steps,
            self.breach
        )
    }
}

/// Table statistics of a log. `breach` marks runs whose spread assumption
/// was violated.
pub fn summarize(rows: &[MetricsRow], iterations: &[IterationRow], breach: bool) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::Domain("empty metrics log".into()));
    }
    let dist: Vec<f64> = rows.iter().map(|r| r.distance / 1000.0).collect();
    let speed: Vec<f64> = rows.iter().map(|r| r.speed).collect();
    let (min_d, mean_d, std_d) = min_mean_std(&dist);
    let (_, mean_v, std_v) = min_mean_std(&speed);
    let mut ms: Vec<f64> = iterations.iter().map(|i| i.compute_ms).collect();
    ms.sort_by(f64::total_cmp);
    Ok(Summary {
        min_distance_km: min_d,
        mean_distance_km: mean_d,
        std_distance_km: std_d,
        mean_speed: mean_v,
        std_speed: std_v,
        median_ms: quantile(&ms, 0.5),
        iqr_ms: quantile(&ms, 0.75) - quantile(&ms, 0.25),
        iterations: iterations.len(),
        commits: iterations.iter().filter(|i| i.outcome != Outcome::RejectedAll).count(),
        rejected_all: iterations.iter().filter(|i| i.outcome == Outcome::RejectedAll).count(),
        unsafe_steps: rows.iter().filter(|r| r.distance < 0.0).count(),
        breach,
    })
}
