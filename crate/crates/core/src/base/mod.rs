//! Shared domain types: time grids, trajectories, disturbance bounds and the
//! input-to-state tracking envelope.

mod disturbance;
mod iss;
mod time_grid;
mod trajectory;

pub use disturbance::{DisturbanceSampler, DisturbanceSpec};
pub use iss::IssBound;
pub use time_grid::TimeGrid;
pub use trajectory::Trajectory;

pub(crate) use time_grid::steps_in as time_grid_steps;
