//! Candidate construction, validity checking and commitment.

mod candidate;
mod commit;
#[cfg(test)]
mod scenarios;

pub use candidate::{build_candidate, check_robustly_valid, check_valid, evaluate_candidate, CandidateReport, Rejection};
pub use commit::{CommitRecord, CommitState, Commitment, Outcome};

use crate::base::IssBound;
use crate::error::{Error, Result};
use crate::ode::InputHold;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct GatekeeperConfig<S> {
    /// Nominal horizon `T_H`.
    pub horizon: S,
    /// Backup duration `T_B`.
    pub backup: S,
    /// Grid-search resolution `N`: switch times `(1 - i/N) T_H`, `i = 0..=N`.
    pub grid_points: usize,
    pub dt: S,
    /// Bound on the state-estimate error.
    pub r: S,
    pub w_bar: S,
    pub iss: IssBound<S>,
    /// Robust validity (tube, terminal and backup-margin checks with the
    /// ISS margins) instead of plain validity.
    pub robust: bool,
    /// Adds `r` to the backup-set clearance in robust mode. Without it the
    /// check is the naive tube-only robustification, which can deadlock on
    /// the previous commitment.
    pub estimate_margin: bool,
    /// Intermediate samples per step for the tube check.
    pub sub_samples: usize,
    /// Extra clearance absorbing motion between sub-samples.
    pub pad: S,
    /// Window after `t_kB` over which backup sets are certified.
    pub check_horizon: S,
    pub witness_points: usize,
    pub hold: InputHold,
    pub parallel: bool,
}

impl<S: Scalar> GatekeeperConfig<S> {
    pub fn new(horizon: S, backup: S, grid_points: usize, dt: S) -> Self {
        Self {
            horizon,
            backup,
            grid_points,
            dt,
            r: S::zero(),
            w_bar: S::zero(),
            iss: IssBound::exact(),
            robust: false,
            estimate_margin: true,
            sub_samples: 4,
            pad: S::zero(),
            check_horizon: backup,
            witness_points: 16,
            hold: InputHold::ZeroOrderHold,
            parallel: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > S::zero() && self.backup > S::zero()) {
            return Err(Error::Config("T_H and T_B must be positive".into()));
        }
        if self.grid_points == 0 || self.sub_samples == 0 || self.witness_points == 0 {
            return Err(Error::Config("N, sub-samples and witness count must be at least 1".into()));
        }
        if !(self.r >= S::zero() && self.w_bar >= S::zero() && self.pad >= S::zero() && self.check_horizon >= S::zero()) {
            return Err(Error::Config("margins must be non-negative".into()));
        }
        crate::base::time_grid_steps(self.horizon, self.dt)?;
        crate::base::time_grid_steps(self.backup, self.dt)?;
        crate::base::time_grid_steps(self.check_horizon, self.dt)?;
        Ok(())
    }

    /// Tube radius `R = beta(r, 0) + gamma(w_bar)`; zero in plain mode.
    pub fn tube_radius(&self) -> S {
        if self.robust {
            self.iss.gain * self.r + self.iss.disturbance_gain * self.w_bar
        } else {
            S::zero()
        }
    }

    /// Clearance required around backup sets: `R + r` in robust mode.
    pub fn backup_margin(&self) -> S {
        if self.robust && self.estimate_margin {
            self.tube_radius() + self.r
        } else if self.robust {
            self.tube_radius()
        } else {
            S::zero()
        }
    }

    /// Switch-time steps tried, largest first.
    pub fn switch_steps(&self) -> Result<Vec<usize>> {
        let n_h = crate::base::time_grid_steps(self.horizon, self.dt)?;
        let n = self.grid_points;
        Ok((0..=n).map(|i| ((n - i) * n_h + n / 2) / n).collect())
    }
}
