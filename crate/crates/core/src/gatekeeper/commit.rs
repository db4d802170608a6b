use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;

use super::candidate::{evaluate_candidate, CandidateReport, TrackingPrefix};
use super::GatekeeperConfig;
use crate::base::{time_grid_steps, TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::ode::propagate;
use crate::scalar::Scalar;
use crate::sets::TimeVaryingSet;
use crate::vehicles::{BackupFactory, BackupPolicy, Vehicle};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Initial,
    Valid,
    RejectedAll,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Initial => "INITIAL",
            Outcome::Valid => "VALID",
            Outcome::RejectedAll => "REJECTED-ALL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommitRecord<S> {
    pub k: usize,
    pub t_k: S,
    /// Chosen switch duration, if a candidate was committed.
    pub t_switch: Option<S>,
    pub outcome: Outcome,
    /// Why the last tried candidate failed (empty when the first succeeded).
    pub reject_reason: String,
    pub candidates_tried: usize,
    pub compute_ms: f64,
}

/// A committed trajectory with the backup that extends it indefinitely.
#[derive(Debug, Clone)]
pub struct Commitment<S, P> {
    pub trajectory: Trajectory<S>,
    pub backup: P,
    pub t_commit: S,
    pub t_switch: S,
}

/// Gatekeeper iteration state.
#[derive(Debug, Clone)]
pub struct CommitState<S, P> {
    current: Option<Commitment<S, P>>,
    k: usize,
    log: Vec<CommitRecord<S>>,
}

impl<S: Scalar, P: BackupPolicy<S> + Clone> Default for CommitState<S, P> {
    fn default() -> Self {
        Self::empty()
    }
}

impl<S: Scalar, P: BackupPolicy<S> + Clone> CommitState<S, P> {
    /// Uninitialised state; iterating on it is a usage error.
    pub fn empty() -> Self {
        Self { current: None, k: 0, log: Vec::new() }
    }

    /// First commitment: the pure backup trajectory from `x_hat`.
    pub fn initialize<V, B, F>(
        cfg: &GatekeeperConfig<S>,
        vehicle: &V,
        x_hat: &[S],
        t0: S,
        perceived: &B,
        factory: &F,
    ) -> Result<Self>
    where
        V: Vehicle<S>,
        B: TimeVaryingSet<S> + ?Sized,
        F: BackupFactory<S, Policy = P>,
    {
        cfg.validate()?;
        let start = Instant::now();
        let rep = evaluate_candidate(cfg, vehicle, None, perceived, factory, x_hat, t0, 0);
        let ms = start.elapsed().as_secs_f64() * 1e3;
        if let Some(r) = &rep.rejection {
            return Err(Error::Startup(r.to_string()));
        }
        let mut me = Self::empty();
        me.current = Some(Commitment {
            trajectory: rep.trajectory.expect("valid candidate has a trajectory"),
            backup: rep.backup.expect("valid candidate has a backup"),
            t_commit: t0,
            t_switch: S::zero(),
        });
        me.log.push(CommitRecord {
            k: 0,
            t_k: t0,
            t_switch: Some(S::zero()),
            outcome: Outcome::Initial,
            reject_reason: String::new(),
            candidates_tried: 1,
            compute_ms: ms,
        });
        Ok(me)
    }

    pub fn is_initialized(&self) -> bool {
        self.current.is_some()
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn log(&self) -> &[CommitRecord<S>] {
        &self.log
    }

    pub fn current(&self) -> Result<&Commitment<S, P>> {
        self.current.as_ref().ok_or_else(|| Error::Usage("gatekeeper not initialised".into()))
    }

    /// One gatekeeper iteration: tries switch times from `T_H` down to 0 and
    /// commits the first valid candidate; otherwise keeps the previous
    /// commitment.
    #[allow(clippy::too_many_arguments)]
    pub fn iterate<V, B, F>(
        &mut self,
        cfg: &GatekeeperConfig<S>,
        vehicle: &V,
        nominal: &Trajectory<S>,
        x_hat: &[S],
        t_k: S,
        perceived: &B,
        factory: &F,
    ) -> Result<&CommitRecord<S>>
    where
        V: Vehicle<S>,
        B: TimeVaryingSet<S> + ?Sized,
        F: BackupFactory<S, Policy = P>,
    {
        if self.current.is_none() {
            return Err(Error::Usage("gatekeeper iterate called before initialisation".into()));
        }
        let start = Instant::now();
        let steps = cfg.switch_steps()?;
        let prefix = TrackingPrefix::new(cfg, vehicle, nominal, perceived, x_hat, t_k, steps[0])?;
        let eval = |n_s: usize| prefix.evaluate(cfg, vehicle, perceived, factory, n_s);
        let (chosen, tried, last_reason): (Option<CandidateReport<S, P>>, usize, String) = if cfg.parallel {
            // Speculative evaluation; the earliest valid index wins, so the
            // choice matches the sequential search.
            let reports: Vec<_> = steps.par_iter().map(|&n| eval(n)).collect();
            let pos = reports.iter().position(|r| r.is_valid());
            let tried = pos.map_or(reports.len(), |p| p + 1);
            let reason = pos
                .map_or_else(|| reports.last(), |p| if p > 0 { reports.get(p - 1) } else { None })
                .and_then(|r| r.rejection.as_ref())
                .map(|r| r.to_string())
                .unwrap_or_default();
            (pos.map(|p| reports.into_iter().nth(p).unwrap()), tried, reason)
        } else {
            let mut reason = String::new();
            let mut found = None;
            let mut tried = 0;
            for &n in &steps {
                tried += 1;
                let r = eval(n);
                if r.is_valid() {
                    found = Some(r);
                    break;
                }
                reason = r.rejection.as_ref().map(|x| x.to_string()).unwrap_or_default();
            }
            (found, tried, reason)
        };
        self.k += 1;
        let outcome = match chosen {
            Some(rep) => {
                self.current = Some(Commitment {
                    trajectory: rep.trajectory.expect("valid"),
                    backup: rep.backup.expect("valid"),
                    t_commit: t_k,
                    t_switch: rep.t_switch,
                });
                Outcome::Valid
            }
            None => Outcome::RejectedAll,
        };
        let t_switch = (outcome == Outcome::Valid).then(|| self.current.as_ref().unwrap().t_switch);
        self.log.push(CommitRecord {
            k: self.k,
            t_k,
            t_switch,
            outcome,
            reject_reason: last_reason,
            candidates_tried: tried,
            compute_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(self.log.last().unwrap())
    }

    /// Committed state at `t`, following the backup past the stored grid.
    pub fn committed_state<V: Vehicle<S>>(&self, cfg: &GatekeeperConfig<S>, vehicle: &V, t: S) -> Result<Vec<S>> {
        let c = self.current()?;
        let tr = &c.trajectory;
        if t < c.t_commit {
            return Err(Error::OutOfRange { t: t.as_f64(), start: c.t_commit.as_f64(), end: f64::INFINITY });
        }
        if t <= tr.t_end() {
            return tr.eval(t);
        }
        let extra = ((t - tr.t_end()) / cfg.dt).ceil().to_usize().unwrap_or(0).max(1);
        let grid = TimeGrid::new(tr.t_end(), cfg.dt, extra)?;
        propagate(vehicle, &c.backup, tr.last_state(), grid, cfg.hold)?.eval(t)
    }

    /// Appends backup propagation to the stored committed trajectory until
    /// it covers `t`.
    pub fn extend_until<V: Vehicle<S>>(&mut self, cfg: &GatekeeperConfig<S>, vehicle: &V, t: S) -> Result<()> {
        let c = self.current.as_mut().ok_or_else(|| Error::Usage("gatekeeper not initialised".into()))?;
        let n_b = time_grid_steps(cfg.backup, cfg.dt)?.max(1);
        while c.trajectory.t_end() < t {
            let grid = TimeGrid::new(c.trajectory.t_end(), cfg.dt, n_b)?;
            let tail = propagate(vehicle, &c.backup, c.trajectory.last_state(), grid, cfg.hold)?;
            c.trajectory = c.trajectory.concat(&tail)?;
        }
        Ok(())
    }

    /// Commit history as CSV: `k,t_k,T_S_star,verdict,reject_reason,compute_ms`.
    pub fn write_log<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "k,t_k,T_S_star,verdict,reject_reason,compute_ms")?;
        for r in &self.log {
            let mut line = String::new();
            let ts = r.t_switch.map(|v| v.to_string()).unwrap_or_default();
            let reason = r.reject_reason.replace([',', '\n'], ";");
            write!(line, "{},{},{},{},{},{:.3}", r.k, r.t_k, ts, r.outcome.as_str(), reason, r.compute_ms).ok();
            writeln!(w, "{line}")?;
        }
        Ok(())
    }
}
