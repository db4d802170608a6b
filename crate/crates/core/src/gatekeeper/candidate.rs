use std::fmt;

use super::GatekeeperConfig;
use crate::base::{time_grid_steps, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::ode::Segment;
use crate::scalar::Scalar;
use crate::sets::TimeVaryingSet;
use crate::vehicles::{BackupFactory, BackupPolicy, Tracker, Vehicle};

/// First failed condition of a candidate.
#[derive(Debug, Clone, PartialEq)]
pub enum Rejection<S> {
    Propagation { t: f64, reason: String },
    /// Left the (eroded) perceived safe set.
    Tube { t: S, p: [S; 2], clearance: S },
    /// Final state outside the backup set.
    Terminal { t: S, depth: S },
    /// Backup set too close to the perceived boundary.
    BackupMargin { t: S, p: [S; 2], clearance: S },
    /// Backup clearance shrinking at the end of the certified window.
    BackupDrift { t: S, before: S, after: S },
    Query(String),
}

impl<S: Scalar> Rejection<S> {
    /// Short tag used in commit logs.
    pub fn kind(&self) -> &'static str {
        match self {
            Rejection::Propagation { .. } => "propagation",
            Rejection::Tube { .. } => "tube",
            Rejection::Terminal { .. } => "terminal",
            Rejection::BackupMargin { .. } => "backup-margin",
            Rejection::BackupDrift { .. } => "backup-drift",
            Rejection::Query(_) => "query",
        }
    }
}

impl<S: Scalar> fmt::Display for Rejection<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rejection::Propagation { t, reason } => write!(f, "propagation at t={t:.2}: {reason}"),
            Rejection::Tube { t, clearance, .. } => write!(f, "tube at t={t:.2} (clearance {clearance:.3})"),
            Rejection::Terminal { t, depth } => write!(f, "terminal at t={t:.2} (depth {depth:.3})"),
            Rejection::BackupMargin { t, clearance, .. } => {
                write!(f, "backup-margin at t={t:.2} (clearance {clearance:.3})")
            }
            Rejection::BackupDrift { t, before, after } => {
                write!(f, "backup-drift at t={t:.2} ({before:.3} -> {after:.3})")
            }
            Rejection::Query(m) => write!(f, "query: {m}"),
        }
    }
}

fn query_err<S>(e: Error) -> Rejection<S> {
    Rejection::Query(e.to_string())
}

/// Outcome of evaluating one switch time.
#[derive(Debug, Clone)]
pub struct CandidateReport<S, P> {
    pub t_switch: S,
    pub trajectory: Option<Trajectory<S>>,
    pub backup: Option<P>,
    pub rejection: Option<Rejection<S>>,
}

impl<S, P> CandidateReport<S, P> {
    pub fn is_valid(&self) -> bool {
        self.rejection.is_none() && self.trajectory.is_some()
    }
}

/// Tracks `nominal` from `x_start` for `switch_steps`, then runs the backup
/// built at the switch state for `T_B`.
#[allow(clippy::too_many_arguments)]
pub fn build_candidate<S, V, F>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    nominal: Option<&Trajectory<S>>,
    factory: &F,
    x_start: &[S],
    t_k: S,
    switch_steps: usize,
) -> Result<(Trajectory<S>, F::Policy)>
where
    S: Scalar,
    V: Vehicle<S>,
    F: BackupFactory<S>,
{
    let n_b = time_grid_steps(cfg.backup, cfg.dt)?;
    if n_b == 0 {
        return Err(Error::Config("backup duration must span at least one step".into()));
    }
    let grid = TimeGrid::new(t_k, cfg.dt, switch_steps + n_b)?;
    let mut seg = Segment::new(vehicle, x_start, grid.n_steps())?;
    if switch_steps > 0 {
        let reference = nominal.ok_or_else(|| Error::Usage("tracking phase needs a nominal trajectory".into()))?;
        let need = grid.time(switch_steps);
        if reference.t_start() > t_k + cfg.dt * S::grid_snap() || reference.t_end() < need - cfg.dt * S::grid_snap() {
            return Err(Error::Domain(format!(
                "nominal spans [{}, {}], tracking needs [{t_k}, {need}]",
                reference.t_start(),
                reference.t_end()
            )));
        }
        let tracker = Tracker { vehicle, reference };
        seg.run(vehicle, &tracker, grid, 0, switch_steps, cfg.hold)?;
    }
    let t_s = grid.time(switch_steps);
    let backup = factory.at_switch(t_s, seg.current())?;
    seg.run(vehicle, &backup, grid, switch_steps, grid.n_steps(), cfg.hold)?;
    Ok((seg.finish(grid, Some(switch_steps))?, backup))
}

/// Sub-sampled probes along a state sequence, in time order.
struct Probe<'a, S, B: ?Sized> {
    set: &'a B,
    margin: S,
    sub: usize,
    kind: fn(S, [S; 2], S) -> Rejection<S>,
}

impl<S: Scalar, B: TimeVaryingSet<S> + ?Sized> Probe<'_, S, B> {
    fn at(&self, t: S, p: [S; 2]) -> std::result::Result<(), Rejection<S>> {
        let sd = self.set.signed_distance(p, t).map_err(query_err)?;
        if sd < self.margin {
            Err((self.kind)(t, p, sd))
        } else {
            Ok(())
        }
    }

    /// Probes the open interval from state `a` (at `t0`) toward `b`.
    fn interval(&self, t0: S, dt: S, a: &[S], b: &[S]) -> std::result::Result<(), Rejection<S>> {
        for s in 0..self.sub {
            let f = S::of_usize(s) / S::of_usize(self.sub);
            self.at(t0 + dt * f, [a[0] + (b[0] - a[0]) * f, a[1] + (b[1] - a[1]) * f])?;
        }
        Ok(())
    }

    fn trajectory(&self, traj: &Trajectory<S>) -> std::result::Result<(), Rejection<S>> {
        let g = traj.grid();
        for i in 0..g.n_steps() {
            self.interval(g.time(i), g.dt(), traj.state(i), traj.state(i + 1))?;
        }
        let last = traj.last_state();
        self.at(g.t_end(), [last[0], last[1]])
    }
}

fn tube_kind<S>(t: S, p: [S; 2], clearance: S) -> Rejection<S> {
    Rejection::Tube { t, p, clearance }
}

fn margin_kind<S>(t: S, p: [S; 2], clearance: S) -> Rejection<S> {
    Rejection::BackupMargin { t, p, clearance }
}

#[allow(clippy::too_many_arguments)]
fn check<S, V, B, P>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    cand: &Trajectory<S>,
    perceived: &B,
    backup: &P,
    tube: S,
    margin: S,
) -> std::result::Result<(), Rejection<S>>
where
    S: Scalar,
    V: Vehicle<S>,
    B: TimeVaryingSet<S> + ?Sized,
    P: BackupPolicy<S>,
{
    Probe { set: perceived, margin: tube + cfg.pad, sub: cfg.sub_samples, kind: tube_kind }.trajectory(cand)?;

    let set = backup.backup_set();
    let t_kb = cand.t_end();
    let depth = set.depth(cand.last_state(), t_kb).map_err(query_err)?;
    if !(depth >= S::zero()) {
        return Err(Rejection::Terminal { t: t_kb, depth });
    }

    let n_check = time_grid_steps(cfg.check_horizon, cfg.dt).map_err(query_err)?;
    if set.needs_continuation() {
        // The set is described relative to the backup flow: follow it past
        // t_kB and require it to stay inside with non-shrinking clearance.
        if n_check == 0 {
            return Ok(());
        }
        let grid = TimeGrid::new(t_kb, cfg.dt, n_check).map_err(query_err)?;
        let cont = crate::ode::propagate(vehicle, backup, cand.last_state(), grid, cfg.hold)
            .map_err(|e| Rejection::Propagation { t: t_kb.as_f64(), reason: e.to_string() })?;
        Probe { set: perceived, margin: margin + cfg.pad, sub: cfg.sub_samples, kind: margin_kind }.trajectory(&cont)?;
        for i in 0..=n_check {
            let t = grid.time(i);
            let d = set.depth(cont.state(i), t).map_err(query_err)?;
            if !(d >= S::zero()) {
                let x = cont.state(i);
                return Err(Rejection::BackupMargin { t, p: [x[0], x[1]], clearance: d });
            }
        }
        let at = |x: &[S], t: S| perceived.signed_distance([x[0], x[1]], t).map_err(query_err);
        let before = at(cont.first_state(), t_kb)?;
        let after = at(cont.last_state(), grid.t_end())?;
        if after < before {
            return Err(Rejection::BackupDrift { t: grid.t_end(), before, after });
        }
    } else {
        // Witness ring of the backup set against the perceived set, from t_k
        // to the end of the window; clearance must not shrink.
        let tol = S::of(1e-9);
        let n = cand.n_steps() + n_check;
        let mut prev = S::neg_infinity();
        for i in 0..=n {
            let t = cand.t_start() + cfg.dt * S::of_usize(i);
            let mut m = S::infinity();
            for p in set.witness_points(cand.last_state(), t, cfg.witness_points) {
                let sd = perceived.signed_distance(p, t).map_err(query_err)?;
                if sd < margin - tol {
                    return Err(Rejection::BackupMargin { t, p, clearance: sd });
                }
                m = m.min(sd);
            }
            if m < prev - tol * (S::one() + prev.abs()) {
                return Err(Rejection::BackupDrift { t, before: prev, after: m });
            }
            prev = m;
        }
    }
    Ok(())
}

/// Plain validity: the candidate stays in the perceived set and ends in the
/// backup set, which must itself lie in the perceived set over the check
/// window.
pub fn check_valid<S, V, B, P>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    candidate: &Trajectory<S>,
    perceived: &B,
    backup: &P,
) -> std::result::Result<(), Rejection<S>>
where
    S: Scalar,
    V: Vehicle<S>,
    B: TimeVaryingSet<S> + ?Sized,
    P: BackupPolicy<S>,
{
    check(cfg, vehicle, candidate, perceived, backup, S::zero(), S::zero())
}

/// Robust validity: tube of radius `R` inside the perceived set, terminal
/// state in the backup set, and the backup set `R + r` clear of the
/// perceived boundary.
pub fn check_robustly_valid<S, V, B, P>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    candidate: &Trajectory<S>,
    perceived: &B,
    backup: &P,
) -> std::result::Result<(), Rejection<S>>
where
    S: Scalar,
    V: Vehicle<S>,
    B: TimeVaryingSet<S> + ?Sized,
    P: BackupPolicy<S>,
{
    let r = cfg.iss.gain * cfg.r + cfg.iss.disturbance_gain * cfg.w_bar;
    let margin = if cfg.estimate_margin { r + cfg.r } else { r };
    check(cfg, vehicle, candidate, perceived, backup, r, margin)
}

/// Builds and checks the candidate with `switch_steps` of tracking, in the
/// mode selected by `cfg.robust`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_candidate<S, V, B, F>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    nominal: Option<&Trajectory<S>>,
    perceived: &B,
    factory: &F,
    x_start: &[S],
    t_k: S,
    switch_steps: usize,
) -> CandidateReport<S, F::Policy>
where
    S: Scalar,
    V: Vehicle<S>,
    B: TimeVaryingSet<S> + ?Sized,
    F: BackupFactory<S>,
{
    let t_switch = cfg.dt * S::of_usize(switch_steps);
    let built = build_candidate(cfg, vehicle, nominal, factory, x_start, t_k, switch_steps);
    finish_report(cfg, vehicle, perceived, t_switch, t_k, built)
}

fn finish_report<S, V, B, P>(
    cfg: &GatekeeperConfig<S>,
    vehicle: &V,
    perceived: &B,
    t_switch: S,
    t_k: S,
    built: Result<(Trajectory<S>, P)>,
) -> CandidateReport<S, P>
where
    S: Scalar,
    V: Vehicle<S>,
    B: TimeVaryingSet<S> + ?Sized,
    P: BackupPolicy<S>,
{
    match built {
        Err(e) => CandidateReport {
            t_switch,
            trajectory: None,
            backup: None,
            rejection: Some(match e {
                Error::Propagation { t, reason } => Rejection::Propagation { t, reason },
                other => Rejection::Propagation { t: t_k.as_f64(), reason: other.to_string() },
            }),
        },
        Ok((traj, backup)) => {
            let verdict = if cfg.robust {
                check_robustly_valid(cfg, vehicle, &traj, perceived, &backup)
            } else {
                check_valid(cfg, vehicle, &traj, perceived, &backup)
            };
            CandidateReport { t_switch, trajectory: Some(traj), backup: Some(backup), rejection: verdict.err() }
        }
    }
}

/// Tracking phase of one iteration, simulated once up to `T_H` and shared
/// by every switch time: a candidate with `n_s` tracking steps is this
/// prefix truncated at `n_s` followed by its backup.
pub(crate) struct TrackingPrefix<S> {
    grid: TimeGrid<S>,
    state_dim: usize,
    input_dim: usize,
    states: Vec<S>,
    inputs: Vec<S>,
    /// Steps simulated before a propagation failure (or all of them).
    steps: usize,
    /// Steps the nominal covers.
    covered: usize,
    nominal_span: (S, S),
    failure: Option<Rejection<S>>,
    /// First tracking interval leaving the tube, with the probe that failed.
    tube_break: Option<(usize, Rejection<S>)>,
}

impl<S: Scalar> TrackingPrefix<S> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn new<V, B>(
        cfg: &GatekeeperConfig<S>,
        vehicle: &V,
        nominal: &Trajectory<S>,
        perceived: &B,
        x_start: &[S],
        t_k: S,
        max_steps: usize,
    ) -> Result<Self>
    where
        V: Vehicle<S>,
        B: TimeVaryingSet<S> + ?Sized,
    {
        let n_b = time_grid_steps(cfg.backup, cfg.dt)?;
        let grid = TimeGrid::new(t_k, cfg.dt, max_steps + n_b.max(1))?;
        let snap = cfg.dt * S::grid_snap();
        // Steps of tracking the nominal can support.
        let covered = if nominal.t_start() > t_k + snap {
            0
        } else {
            (0..=max_steps).rev().find(|&i| nominal.t_end() >= grid.time(i) - snap).unwrap_or(0)
        };
        let mut seg = Segment::new(vehicle, x_start, covered)?;
        let mut failure = None;
        if covered > 0 {
            let tracker = Tracker { vehicle, reference: nominal };
            if let Err(e) = seg.run(vehicle, &tracker, grid, 0, covered, cfg.hold) {
                failure = Some(match e {
                    Error::Propagation { t, reason } => Rejection::Propagation { t, reason },
                    other => Rejection::Propagation { t: t_k.as_f64(), reason: other.to_string() },
                });
            }
        }
        let steps = seg.steps();
        let n = vehicle.state_dim();
        let probe = Probe { set: perceived, margin: cfg.tube_radius() + cfg.pad, sub: cfg.sub_samples, kind: tube_kind };
        let st = seg.states();
        let mut tube_break = None;
        for i in 0..steps {
            if let Err(r) = probe.interval(grid.time(i), grid.dt(), &st[i * n..(i + 1) * n], &st[(i + 1) * n..(i + 2) * n]) {
                tube_break = Some((i, r));
                break;
            }
        }
        Ok(Self {
            grid,
            state_dim: n,
            input_dim: vehicle.input_dim(),
            states: seg.states().to_vec(),
            inputs: seg.inputs().to_vec(),
            steps,
            covered,
            nominal_span: (nominal.t_start(), nominal.t_end()),
            failure,
            tube_break,
        })
    }

    /// Same report as [`evaluate_candidate`] for `switch_steps`, reusing the
    /// shared tracking phase.
    pub(crate) fn evaluate<V, B, F>(
        &self,
        cfg: &GatekeeperConfig<S>,
        vehicle: &V,
        perceived: &B,
        factory: &F,
        switch_steps: usize,
    ) -> CandidateReport<S, F::Policy>
    where
        V: Vehicle<S>,
        B: TimeVaryingSet<S> + ?Sized,
        F: BackupFactory<S>,
    {
        let t_switch = cfg.dt * S::of_usize(switch_steps);
        let reject = |r: Rejection<S>| CandidateReport { t_switch, trajectory: None, backup: None, rejection: Some(r) };
        if switch_steps > self.covered {
            let (a, b) = self.nominal_span;
            let (t_k, need) = (self.grid.t_start(), self.grid.time(switch_steps));
            let e = Error::Domain(format!("nominal spans [{a}, {b}], tracking needs [{t_k}, {need}]"));
            return reject(Rejection::Propagation { t: t_k.as_f64(), reason: e.to_string() });
        }
        if switch_steps > self.steps {
            if let Some(f) = &self.failure {
                return reject(f.clone());
            }
        }
        if let Some((i, r)) = &self.tube_break {
            if *i < switch_steps {
                return reject(r.clone());
            }
        }
        let built = (|| {
            let n_b = time_grid_steps(cfg.backup, cfg.dt)?;
            if n_b == 0 {
                return Err(Error::Config("backup duration must span at least one step".into()));
            }
            let grid = TimeGrid::new(self.grid.t_start(), cfg.dt, switch_steps + n_b)?;
            let mut seg =
                Segment::resume(self.state_dim, self.input_dim, &self.states, &self.inputs, switch_steps, n_b);
            let backup = factory.at_switch(grid.time(switch_steps), seg.current())?;
            seg.run(vehicle, &backup, grid, switch_steps, grid.n_steps(), cfg.hold)?;
            Ok((seg.finish(grid, Some(switch_steps))?, backup))
        })();
        finish_report(cfg, vehicle, perceived, t_switch, self.grid.t_start(), built)
    }
}

