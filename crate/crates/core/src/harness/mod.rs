//! Run persistence, plot data and the verification suites behind the CLI.

mod checks;
mod oracle;
mod run_dir;

pub use checks::{
    deadlock_regression, level_set_check, theorem1, theorem2, theorem3, theorem_suite, DeadlockReport,
    LevelSetReport, TheoremSuiteConfig,
};
pub use oracle::{
    appendix_oracle, backup_within_safe, moving_ball_invariance, perceived_nested, perceived_within_safe,
    OracleConfig, RadialFire, SPREAD_BOUND,
};
pub use run_dir::{emit_plot_data, load_summary, save_run, unix_now, RunManifest, PLOT_FILES, RUN_FILES};

/// Outcome of one sampled property check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    /// Samples that satisfied the antecedent (non-vacuous checks).
    pub members: usize,
    pub failures: usize,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, samples: usize, members: usize, failures: usize) -> Self {
        Self { name: name.to_string(), samples, members, failures, detail: String::new() }
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.samples > 0
    }

    pub fn line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let mut s = format!("{verdict} {}: {} samples, {} in scope, {} failures", self.name, self.samples, self.members, self.failures);
        if !self.detail.is_empty() {
            s.push_str(" (");
            s.push_str(&self.detail);
            s.push(')');
        }
        s
    }
}
