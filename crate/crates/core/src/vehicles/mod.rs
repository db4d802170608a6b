//! Vehicle models with their tracking and backup controllers.

mod calibrate;
mod double_integrator;
mod helicopter;
pub mod lqr;

use crate::error::Result;
use crate::ode::{Dynamics, Policy};
use crate::scalar::Scalar;
use crate::sets::BackupSet;
use crate::Trajectory;

pub use calibrate::{calibrate_iss, random_helicopter_reference, CalibrationConfig, CalibrationReport, DisturbanceFamily};
pub use double_integrator::{DoubleIntegrator, RadialBackup, RadialFactory, StopBackup, StopFactory};
pub use helicopter::{EscapeBackup, EscapeFactory, Helicopter};

/// A controlled vehicle whose planar position is the first two state
/// components.
pub trait Vehicle<S: Scalar>: Dynamics<S> {
    fn position(&self, x: &[S]) -> [S; 2] {
        [x[0], x[1]]
    }

    /// Speed over ground.
    fn speed(&self, x: &[S]) -> S;

    /// Norm in which tracking error, disturbances and estimation error are
    /// measured.
    fn tracking_error(&self, x: &[S], reference: &[S]) -> S;

    /// Tracking law: input that drives `x_hat` onto `reference`, with the
    /// reference's own input as feed-forward. Saturated.
    fn track(&self, x_hat: &[S], reference: &[S], u_ref: &[S], u: &mut [S]) -> Result<()>;

    /// Shifts `x` by `v` in the tracking-error coordinates.
    fn perturb(&self, x: &[S], v: &[S], out: &mut [S]);

    /// Length of disturbance / estimation-noise vectors.
    fn noise_dim(&self) -> usize {
        self.state_dim()
    }
}

/// Backup controller with its controlled-invariant set.
pub trait BackupPolicy<S: Scalar>: Policy<S> {
    fn backup_set(&self) -> &BackupSet<S>;
}

/// Builds the backup controller for a candidate once its switch state is
/// known.
pub trait BackupFactory<S: Scalar>: Send + Sync {
    type Policy: BackupPolicy<S>;
    fn at_switch(&self, t_switch: S, x_switch: &[S]) -> Result<Self::Policy>;
}

/// Tracking policy following a reference trajectory.
pub struct Tracker<'a, S, V: ?Sized> {
    pub vehicle: &'a V,
    pub reference: &'a Trajectory<S>,
}

impl<'a, S: Scalar, V: Vehicle<S> + ?Sized> Policy<S> for Tracker<'a, S, V> {
    fn control(&self, t: S, x: &[S], u: &mut [S]) -> Result<()> {
        let mut buf = [S::zero(); 8];
        let r = &mut buf[..self.reference.state_dim()];
        self.reference.eval_into(t, r)?;
        let u_ref = self.reference.input_at(t)?;
        self.vehicle.track(x, r, u_ref, u)
    }
}
