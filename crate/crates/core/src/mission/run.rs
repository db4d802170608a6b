use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;

use super::config::{FilterMode, ScenarioConfig};
use super::metrics::{summarize, IterationRow, MetricsLog, MetricsRow, Summary};
use super::perception::PerceptionMemory;
use super::planner::TangentPlanner;
use super::scenario::{initial_fire, FireGeometry};
use crate::base::{DisturbanceSpec, IssBound, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::fire::{FireField, ThermalSensor};
use crate::gatekeeper::{CommitState, GatekeeperConfig, Outcome};
use crate::ode::{propagate, InputHold, Stepper};
use crate::sets::{Bitmask, CellState};
use crate::vehicles::{EscapeBackup, EscapeFactory, Helicopter, Vehicle};

/// Post-run check of committed trajectories against the true fire.
#[derive(Debug, Clone, PartialEq)]
pub struct CommitmentCheck {
    pub commitments: usize,
    pub samples: usize,
    pub violations: usize,
    /// Samples beyond the fire grid, counted safe because the fire never
    /// reached the grid boundary.
    pub out_of_grid: usize,
    pub min_distance: f64,
    pub first_violation: Option<(f64, [f64; 2], f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackingReport {
    /// Largest flat-coordinate distance between the true state and the
    /// tracked reference.
    pub max_error: f64,
    /// Tube radius `R` used by the gatekeeper (0 without disturbances).
    pub tube_radius: f64,
    pub tube_exceedances: usize,
    pub max_estimation_error: f64,
}

#[derive(Debug, Clone)]
pub struct MissionOutput {
    pub config: ScenarioConfig,
    pub geometry: FireGeometry,
    pub metrics: MetricsLog,
    pub summary: Summary,
    /// Fire-front contour points at fixed intervals.
    pub fronts: Vec<(f64, Vec<[f64; 2]>)>,
    pub commitment_check: Option<CommitmentCheck>,
    pub tracking: TrackingReport,
    pub planner_failures: usize,
}

/// Sample of a committed trajectory awaiting the true fire at its time.
#[derive(Debug, Clone, Copy)]
struct Pending {
    t: f64,
    p: [f64; 2],
}

impl PartialEq for Pending {
    fn eq(&self, o: &Self) -> bool {
        self.t.total_cmp(&o.t) == Ordering::Equal
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Pending {
    // Min-heap on time.
    fn cmp(&self, o: &Self) -> Ordering {
        o.t.total_cmp(&self.t)
    }
}

struct Checker {
    queue: BinaryHeap<Pending>,
    report: CommitmentCheck,
}

impl Checker {
    fn new() -> Self {
        Self {
            queue: BinaryHeap::new(),
            report: CommitmentCheck {
                commitments: 0,
                samples: 0,
                violations: 0,
                out_of_grid: 0,
                min_distance: f64::INFINITY,
                first_violation: None,
            },
        }
    }

    /// Queues samples of `traj` extended by `extension` seconds of its backup.
    fn add(&mut self, model: &Helicopter<f64>, traj: &Trajectory<f64>, backup: &EscapeBackup<f64>, extension: f64, every: f64) -> Result<()> {
        let dt = traj.grid().dt();
        let n_ext = (extension / dt).round() as usize;
        let tail = propagate(model, backup, traj.last_state(), TimeGrid::new(traj.t_end(), dt, n_ext.max(1))?, InputHold::ZeroOrderHold)?;
        let stride = ((every / dt).round() as usize).max(1);
        for part in [traj, &tail] {
            let g = part.grid();
            let first = if std::ptr::eq(part, &tail) { stride } else { 0 };
            for i in (first..=g.n_steps()).step_by(stride) {
                let s = part.state(i);
                self.queue.push(Pending { t: g.time(i), p: [s[0], s[1]] });
            }
        }
        self.report.commitments += 1;
        Ok(())
    }

    /// Checks every queued sample up to the fire's current time.
    fn drain(&mut self, fire: &FireField<f64>) {
        let mut boundary_free: Option<bool> = None;
        while let Some(top) = self.queue.peek() {
            if top.t > fire.t() + 1e-9 {
                break;
            }
            let s = self.queue.pop().unwrap();
            self.report.samples += 1;
            let d = match fire.true_distance(s.p) {
                Ok(d) => d,
                Err(_) => {
                    let free = *boundary_free.get_or_insert_with(|| grid_boundary_free(fire));
                    self.report.out_of_grid += 1;
                    if free {
                        continue;
                    }
                    f64::NEG_INFINITY
                }
            };
            self.report.min_distance = self.report.min_distance.min(d);
            if d < 0.0 {
                self.report.violations += 1;
                self.report.first_violation.get_or_insert((s.t, s.p, d));
            }
        }
    }
}

fn grid_boundary_free(fire: &FireField<f64>) -> bool {
    let g = fire.grid();
    let phi = fire.phi();
    let edge = |i: usize, j: usize| phi[g.index(i, j)] > 0.0;
    (0..g.nx).all(|i| edge(i, 0) && edge(i, g.ny - 1)) && (0..g.ny).all(|j| edge(0, j) && edge(g.nx - 1, j))
}

/// Reference currently tracked, indexed by global control step.
enum Active {
    Nominal { traj: Trajectory<f64>, start: usize },
    Committed { start: usize },
}

fn steps_of(a: f64, b: f64) -> usize {
    (a / b).round() as usize
}

/// Nominal extended by holding its last input, for when replanning has
/// failed for longer than the horizon.
fn extend_held(model: &Helicopter<f64>, traj: &Trajectory<f64>, steps: usize) -> Result<Trajectory<f64>> {
    let u = traj.input(traj.n_steps() - 1).to_vec();
    let hold = move |_t: f64, _x: &[f64], out: &mut [f64]| -> Result<()> {
        out.copy_from_slice(&u);
        Ok(())
    };
    let g = TimeGrid::new(traj.t_end(), traj.grid().dt(), steps)?;
    traj.concat(&propagate(model, &hold, traj.last_state(), g, InputHold::ZeroOrderHold)?)
}

pub fn gatekeeper_config(cfg: &ScenarioConfig) -> Result<GatekeeperConfig<f64>> {
    let mut gk = GatekeeperConfig::new(cfg.horizon, cfg.backup, cfg.grid_points, cfg.control_dt);
    gk.robust = cfg.robust();
    gk.r = cfg.v_bar;
    gk.w_bar = cfg.d_bar.max(cfg.v_bar);
    gk.iss = IssBound::new(cfg.iss_gain, cfg.iss_decay, cfg.iss_disturbance_gain)?;
    gk.pad = cfg.pad;
    gk.parallel = cfg.parallel;
    gk.validate()?;
    Ok(gk)
}

/// Runs the closed-loop firewatch mission.
pub fn run_mission(cfg: &ScenarioConfig) -> Result<MissionOutput> {
    cfg.validate()?;
    let model = Helicopter::<f64>::default();
    let (geometry, mut fire) = initial_fire(cfg)?;
    let grid = *fire.grid();
    let gk = gatekeeper_config(cfg)?;
    let planner = TangentPlanner::new(model, cfg.standoff, cfg.target_speed);
    let sensor = ThermalSensor::new(cfg.sensor_range, cfg.measurement_period);
    let mut memory = PerceptionMemory::new(grid, cfg.sigma_max_assumed);
    let mut noise = DisturbanceSpec::new(cfg.d_bar, cfg.v_bar, cfg.seed.wrapping_mul(0x2545_f491_4f6c_dd1d))?.sampler();

    let dt = cfg.control_dt;
    let per_fire = steps_of(cfg.fire_dt, dt);
    let per_meas = steps_of(cfg.measurement_period, dt);
    let per_front = steps_of(cfg.front_every, dt).max(1);
    let total = steps_of(cfg.duration, dt);

    let mut x = geometry.start_state(cfg).to_vec();
    let mut x_hat = x.clone();
    let (mut d, mut v) = ([0.0; 4], [0.0; 4]);
    let mut u = [0.0; 2];
    let mut stepper = Stepper::new(&model);

    let mut metrics = MetricsLog::default();
    let mut fronts = Vec::new();
    let mut tracking = TrackingReport {
        max_error: 0.0,
        tube_radius: gk.tube_radius(),
        tube_exceedances: 0,
        max_estimation_error: 0.0,
    };
    let mut planner_failures = 0;
    let mut state: Option<CommitState<f64, EscapeBackup<f64>>> = None;
    let mut active: Option<Active> = None;
    let mut checker = (cfg.filter == FilterMode::Gatekeeper && cfg.check_commitments).then(Checker::new);
    let mut r_buf = [0.0; 4];

    for j in 0..=total {
        let t = j as f64 * dt;
        if cfg.v_bar > 0.0 {
            noise.measurement(&mut v);
            model.perturb(&x, &v, &mut x_hat);
        } else {
            x_hat.copy_from_slice(&x);
        }
        tracking.max_estimation_error = tracking.max_estimation_error.max(model.tracking_error(&x, &x_hat));

        if j % per_front == 0 {
            fronts.push((t, fire.front_points()));
        }

        if j % per_meas == 0 && j < total {
            let mask = if j == 0 {
                // Pre-mission survey of the whole arena.
                let phi = fire.phi();
                Bitmask::new(grid, phi.iter().map(|&p| if p <= 0.0 { CellState::Burning } else { CellState::Free }).collect(), t)?
            } else {
                sensor.sense(&fire, [x[0], x[1]], t)
            };
            memory.update(&mask)?;
            let forecast = Arc::new(memory.forecast()?);
            let started = Instant::now();
            let plan = planner.plan(&forecast, &x_hat, t, cfg.horizon, dt);
            let plan_ms = started.elapsed().as_secs_f64() * 1e3;
            match cfg.filter {
                FilterMode::Off => match plan {
                    Ok(traj) => {
                        active = Some(Active::Nominal { traj, start: j });
                        metrics.iterations.push(IterationRow {
                            k: metrics.iterations.len(),
                            t,
                            outcome: Outcome::Valid,
                            t_switch: Some(cfg.horizon),
                            reject_reason: String::new(),
                            compute_ms: plan_ms,
                        });
                    }
                    Err(_) if active.is_some() => planner_failures += 1,
                    Err(e) => return Err(Error::Startup(format!("no initial nominal plan: {e}"))),
                },
                FilterMode::Gatekeeper => {
                    let factory = EscapeFactory::new(model, forecast.clone(), cfg.sigma_max_assumed, gk.backup_margin());
                    let mut first_commit = false;
                    if state.is_none() {
                        let st = CommitState::initialize(&gk, &model, &x_hat, t, forecast.as_ref(), &factory)?;
                        state = Some(st);
                        first_commit = true;
                    }
                    let st = state.as_mut().unwrap();
                    let mut committed = first_commit;
                    match plan {
                        Ok(nominal) => {
                            let rec = st.iterate(&gk, &model, &nominal, &x_hat, t, forecast.as_ref(), &factory)?;
                            committed |= rec.outcome == Outcome::Valid;
                        }
                        Err(_) => planner_failures += 1,
                    }
                    if committed {
                        active = Some(Active::Committed { start: j });
                        if let Some(ch) = checker.as_mut() {
                            let c = st.current()?;
                            ch.add(&model, &c.trajectory, &c.backup, 2.0 * cfg.backup, cfg.fire_dt)?;
                        }
                    }
                }
            }
        }

        // Reference at this step.
        let (r, u_ref): (&[f64], Vec<f64>) = match active.as_mut().expect("reference set at t = 0") {
            Active::Nominal { traj, start } => {
                let i = j - *start;
                if i >= traj.n_steps() {
                    *traj = extend_held(&model, traj, per_meas.max(1))?;
                }
                r_buf.copy_from_slice(traj.state(i));
                (&r_buf[..], traj.input(i).to_vec())
            }
            Active::Committed { start } => {
                let st = state.as_mut().unwrap();
                let i = j - *start;
                if i >= st.current()?.trajectory.n_steps() {
                    st.extend_until(&gk, &model, t + dt)?;
                }
                let tr = &st.current()?.trajectory;
                r_buf.copy_from_slice(tr.state(i));
                (&r_buf[..], tr.input(i).to_vec())
            }
        };

        let err = model.tracking_error(&x, r);
        tracking.max_error = tracking.max_error.max(err);
        if gk.robust && err > tracking.tube_radius {
            tracking.tube_exceedances += 1;
        }
        // The fire is at time t on whole seconds and at the next whole
        // second otherwise, which can only understate the distance.
        let distance = fire.true_distance([x[0], x[1]])?;
        metrics.rows.push(MetricsRow { t, x: x[0], y: x[1], speed: x[2], distance, tracking_error: err });

        if j % per_fire == 0 {
            fire.step(cfg.fire_dt)?;
            if let Some(ch) = checker.as_mut() {
                ch.drain(&fire);
            }
        }
        if j == total {
            break;
        }
        model.track(&x_hat, r, &u_ref, &mut u)?;
        if cfg.d_bar > 0.0 {
            noise.state(&mut d);
        }
        let dist = (cfg.d_bar > 0.0).then_some(&d[..]);
        stepper.step_held(t, dt, &mut x, &u, dist)?;
    }

    if let Some(st) = &state {
        metrics.iterations = st
            .log()
            .iter()
            .map(|r| IterationRow {
                k: r.k,
                t: r.t_k,
                outcome: r.outcome,
                t_switch: r.t_switch,
                reject_reason: r.reject_reason.clone(),
                compute_ms: r.compute_ms,
            })
            .collect();
    }

    let commitment_check = match checker {
        Some(mut ch) => {
            while !ch.queue.is_empty() {
                fire.step(cfg.fire_dt)?;
                ch.drain(&fire);
            }
            Some(ch.report)
        }
        None => None,
    };
    let summary = summarize(&metrics.rows, &metrics.iterations, cfg.assumption_breached())?;
    Ok(MissionOutput {
        config: cfg.clone(),
        geometry,
        metrics,
        summary,
        fronts,
        commitment_check,
        tracking,
        planner_failures,
    })
}
