//! Online safety verification for nonlinear systems in dynamic environments.
//!
//! Nominal planner trajectories are turned into committed trajectories that
//! are safe for all future time: a candidate tracks the nominal for a switch
//! duration, then hands over to a backup controller, and is committed only if
//! the finite-horizon propagation stays inside the perceived safe set and
//! ends in the backup controller's invariant set.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below fix the common double-precision instantiation.

pub mod base;
pub mod error;
pub mod fire;
pub mod gatekeeper;
pub mod harness;
pub mod mission;
pub mod ode;
pub mod scalar;
pub mod sets;
pub mod vehicles;

pub use base::{DisturbanceSpec, IssBound, TimeGrid, Trajectory};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type TimeGrid64 = TimeGrid<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type IssBound64 = IssBound<f64>;
pub type TimeGrid32 = TimeGrid<f32>;
pub type Trajectory32 = Trajectory<f32>;
