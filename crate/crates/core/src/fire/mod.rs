//! Ground-truth fire: level-set front propagation under a hidden
//! rate-of-spread field, plus the thermal sensor that observes it.

mod field;
mod redistance;
mod sensor;
mod sigma;

pub use field::FireField;
pub use redistance::redistance;
pub use sensor::ThermalSensor;
pub use sigma::{smooth_random_sigma, SigmaSpec};
