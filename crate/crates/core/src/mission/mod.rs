//! Firewatch scenario: a helicopter circling a spreading wildfire at a fixed
//! standoff, with a tangent-following nominal planner and the gatekeeper
//! filter in the loop.

mod config;
mod metrics;
mod perception;
mod planner;
mod run;
mod scenario;

pub use config::{FilterMode, Preset, ScenarioConfig, DEFAULT_SPREAD};
pub use metrics::{
    min_mean_std, quantile, read_iterations, summarize, write_iterations, IterationRow, MetricsLog, MetricsRow,
    Summary, ITERATION_HEADER, METRICS_HEADER,
};
pub use perception::PerceptionMemory;
pub use planner::TangentPlanner;
pub use run::{gatekeeper_config, run_mission, CommitmentCheck, MissionOutput, TrackingReport};
pub use scenario::{initial_fire, FireGeometry, Pocket, START_BEARING};
