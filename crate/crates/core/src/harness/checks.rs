//! Property checks over mission runs and constructed scenarios.

use super::CheckResult;
use crate::base::{IssBound, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fire::FireField;
use crate::gatekeeper::{CommitState, GatekeeperConfig, Outcome};
use crate::mission::{run_mission, FilterMode, MissionOutput, ScenarioConfig};
use crate::sets::{Grid2, HalfPlane};
use crate::vehicles::{DoubleIntegrator, StopFactory};

/// Every sampled committed state, including the backup extension, lies
/// outside the true fire.
pub fn theorem1(runs: &[MissionOutput]) -> CheckResult {
    let (mut samples, mut commitments, mut failures, mut missing) = (0, 0, 0, 0);
    let mut min = f64::INFINITY;
    for out in runs {
        match &out.commitment_check {
            Some(c) => {
                samples += c.samples;
                commitments += c.commitments;
                failures += c.violations;
                min = min.min(c.min_distance);
            }
            None => missing += 1,
        }
    }
    let mut r = CheckResult::new("committed trajectories stay safe", samples, samples, failures + missing);
    r.detail = format!("{commitments} commitments, min clearance {min:.2} m");
    r
}

/// Disturbance-free tracking of the committed trajectory is exact up to
/// integration error.
pub fn theorem2(run: &MissionOutput, tolerance: f64) -> CheckResult {
    let e = run.tracking.max_error;
    let undisturbed = run.config.d_bar == 0.0 && run.config.v_bar == 0.0;
    let ok = undisturbed && e <= tolerance;
    let mut r = CheckResult::new("undisturbed tracking is exact", run.metrics.rows.len(), run.metrics.rows.len(), (!ok) as usize);
    r.detail = format!("max error {e:.3e} m, tolerance {tolerance:.3e} m");
    r
}

/// Perturbed runs stay within the tube around the committed trajectory and
/// outside the fire.
pub fn theorem3(runs: &[MissionOutput]) -> CheckResult {
    let (mut steps, mut failures) = (0, 0);
    let (mut worst, mut radius) = (0.0f64, f64::INFINITY);
    for out in runs {
        steps += out.metrics.rows.len();
        failures += out.tracking.tube_exceedances + out.summary.unsafe_steps;
        if !out.config.robust() {
            failures += 1;
        }
        worst = worst.max(out.tracking.max_error);
        radius = radius.min(out.tracking.tube_radius);
    }
    let mut r = CheckResult::new("perturbed runs stay in the tube and safe", steps, steps, failures);
    r.detail = format!("{} runs, max error {worst:.3} m, tube radius {radius:.3} m", runs.len());
    r
}

#[derive(Debug, Clone, PartialEq)]
pub struct TheoremSuiteConfig {
    pub base: ScenarioConfig,
    pub seeds: Vec<u64>,
    pub perturbed_runs: usize,
    pub d_bar: f64,
    pub v_bar: f64,
    /// Exact-tracking tolerance as a multiple of `dt^4`.
    pub tolerance_factor: f64,
}

impl Default for TheoremSuiteConfig {
    fn default() -> Self {
        Self {
            base: ScenarioConfig::default(),
            seeds: (1..=5).collect(),
            perturbed_runs: 20,
            d_bar: 0.2,
            v_bar: 0.2,
            tolerance_factor: 10.0,
        }
    }
}

/// Runs the three theorem checks on desk-scale missions.
pub fn theorem_suite(cfg: &TheoremSuiteConfig) -> Result<Vec<CheckResult>> {
    let base = ScenarioConfig { filter: FilterMode::Gatekeeper, d_bar: 0.0, v_bar: 0.0, check_commitments: true, ..cfg.base.clone() };
    let clean = cfg.seeds.iter().map(|&seed| run_mission(&ScenarioConfig { seed, ..base.clone() })).collect::<Result<Vec<_>>>()?;
    let first = clean.first().ok_or_else(|| Error::Usage("theorem suite needs at least one seed".into()))?;
    let tol = cfg.tolerance_factor * base.control_dt.powi(4);
    let perturbed = (0..cfg.perturbed_runs as u64)
        .map(|i| {
            run_mission(&ScenarioConfig {
                seed: 1000 + i,
                d_bar: cfg.d_bar,
                v_bar: cfg.v_bar,
                check_commitments: false,
                ..base.clone()
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(vec![theorem1(&clean), theorem2(first, tol), theorem3(&perturbed)])
}

/// Outcome of the second iteration in the estimation-error deadlock
/// scenario, for the naive tube-only check and the full robust check.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadlockReport {
    pub naive: Outcome,
    pub robust: Outcome,
    pub naive_reason: String,
    /// Wall clearance of the first committed stop point.
    pub naive_gap: f64,
    pub robust_gap: f64,
    pub tube_radius: f64,
    pub r: f64,
}

impl DeadlockReport {
    /// The naive check stalls while the robust one commits.
    pub fn reproduced(&self) -> bool {
        self.naive == Outcome::RejectedAll && self.robust == Outcome::Valid
    }
}

/// Double integrator heading for a wall. The first commitment stops short
/// of it; at the next iteration the estimate sits `r` closer to the wall
/// than the committed stop point and the new nominal backs away. The naive
/// check leaves only `R` around the stop point, so the new tube clips the
/// wall from the first sample; the `R + r` margin leaves room to commit.
pub fn deadlock_regression() -> Result<DeadlockReport> {
    const WALL: f64 = 50.0;
    const DT: f64 = 0.05;
    let vehicle = DoubleIntegrator::new(5.0);
    let wall = HalfPlane::new([1.0, 0.0], WALL)?;
    let factory = StopFactory { accel_max: 5.0, dt: DT, radius: 0.0 };
    let mut cfg = GatekeeperConfig::new(20.0, 4.0, 200, DT);
    cfg.robust = true;
    cfg.r = 1.5;
    cfg.w_bar = 0.5;
    cfg.iss = IssBound::new(1.0, 0.5, 1.0)?;

    let approach = |t0: f64, x0: f64| -> Result<Trajectory<f64>> {
        let g = TimeGrid::spanning(t0, 20.0, DT)?;
        let states: Vec<Vec<f64>> = (0..=g.n_steps()).map(|i| vec![x0 + 5.0 * (g.time(i) - t0), 0.0, 5.0, 0.0]).collect();
        Trajectory::from_rows(g, &states, &vec![vec![0.0, 0.0]; g.n_steps()], None)
    };
    // Backs away from the wall, accelerating at 1 m/s^2 up to 4 m/s.
    let retreat = |t0: f64, x0: [f64; 2]| -> Result<Trajectory<f64>> {
        let g = TimeGrid::spanning(t0, 20.0, DT)?;
        let mut states = Vec::new();
        let mut inputs = Vec::new();
        for i in 0..=g.n_steps() {
            let s = g.time(i) - t0;
            let (p, v) = if s <= 4.0 { (0.5 * s * s, s) } else { (8.0 + 4.0 * (s - 4.0), 4.0) };
            states.push(vec![x0[0] - p, x0[1], -v, 0.0]);
            if i < g.n_steps() {
                inputs.push(vec![if s < 4.0 { -1.0 } else { 0.0 }, 0.0]);
            }
        }
        Trajectory::from_rows(g, &states, &inputs, None)
    };

    let run = |estimate_margin: bool| -> Result<(Outcome, String, f64)> {
        let cfg = GatekeeperConfig { estimate_margin, ..cfg.clone() };
        let x0 = [0.0, 0.0, 5.0, 0.0];
        let mut st = CommitState::initialize(&cfg, &vehicle, &x0, 0.0, &wall, &factory)?;
        st.iterate(&cfg, &vehicle, &approach(0.0, 0.0)?, &x0, 0.0, &wall, &factory)?;
        let c = st.current()?;
        let t1 = c.trajectory.t_end();
        let rest = st.committed_state(&cfg, &vehicle, t1)?;
        let gap = WALL - rest[0];
        // Worst admissible estimate: r closer to the wall.
        let x_hat = [rest[0] + cfg.r, rest[1], rest[2], rest[3]];
        let rec = st.iterate(&cfg, &vehicle, &retreat(t1, [x_hat[0], x_hat[1]])?, &x_hat, t1, &wall, &factory)?;
        Ok((rec.outcome, rec.reject_reason.clone(), gap))
    };
    let (naive, naive_reason, naive_gap) = run(false)?;
    let (robust, _, robust_gap) = run(true)?;
    Ok(DeadlockReport { naive, robust, naive_reason, naive_gap, robust_gap, tube_radius: cfg.tube_radius(), r: cfg.r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetReport {
    pub cell: f64,
    pub expected_radius: f64,
    /// Largest deviation of the front radius over the sampled bearings.
    pub max_radius_error: f64,
    /// Largest change of the level function under zero spread.
    pub static_drift: f64,
}

impl LevelSetReport {
    pub fn max_error_cells(&self) -> f64 {
        self.max_radius_error / self.cell
    }
}

/// Circular front under constant spread rate, and a frozen front under
/// zero spread.
pub fn level_set_check(sigma: f64, r0: f64, duration: f64, cell: f64) -> Result<LevelSetReport> {
    let reach = r0 + sigma * duration;
    let grid = Grid2::centered(2.0 * reach + 40.0 * cell, cell)?;
    let level = move |p: [f64; 2]| p[0].hypot(p[1]) - r0;
    let dt = 0.5 * cell / sigma.max(1e-9);
    let dt = dt.min(1.0);
    let mut fire = FireField::from_level(grid, level, vec![sigma; grid.len()], sigma)?;
    fire.advance_to(duration, dt)?;
    let expected = reach;
    let mut err = 0.0f64;
    for i in 0..32 {
        let a = i as f64 * std::f64::consts::TAU / 32.0;
        let r = fire
            .front_distance_along([0.0, 0.0], a, 2.0 * reach)
            .ok_or_else(|| Error::Domain(format!("no front crossing at bearing {a:.3}")))?;
        err = err.max((r - expected).abs());
    }
    let mut frozen = FireField::from_level(grid, level, vec![0.0; grid.len()], 0.0)?;
    let before = frozen.phi().to_vec();
    frozen.advance_to(duration, 1.0)?;
    let drift = before.iter().zip(frozen.phi()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LevelSetReport { cell, expected_radius: expected, max_radius_error: err, static_drift: drift })
}
