use crate::base::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::ode::{propagate, InputHold};
use crate::scalar::wrap_angle;
use crate::sets::SdfForecastSet;
use crate::vehicles::Helicopter;

/// Tangent-following nominal planner: flies counter-clockwise around the
/// perceived fire along the `standoff` isocontour at constant speed.
///
/// The reference is the helicopter model itself steered by a heading
/// field, so it is dynamically feasible by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentPlanner {
    pub model: Helicopter<f64>,
    pub standoff: f64,
    pub speed: f64,
    /// Distance error at which the heading is 45 degrees off the tangent.
    pub blend: f64,
    pub heading_gain: f64,
    pub speed_gain: f64,
    /// Fraction of the maximum turn rate the reference may use.
    pub turn_fraction: f64,
}

impl TangentPlanner {
    pub fn new(model: Helicopter<f64>, standoff: f64, speed: f64) -> Self {
        Self { model, standoff, speed, blend: 60.0, heading_gain: 1.0, speed_gain: 0.5, turn_fraction: 0.8 }
    }

    /// Desired heading at `p`, or `None` where the field carries no
    /// direction (no fire in view).
    pub fn heading_at(&self, perceived: &SdfForecastSet<f64>, t: f64, p: [f64; 2]) -> Option<f64> {
        let g = perceived.gradient(p)?;
        let n = g[0].hypot(g[1]);
        if !(n > 0.3) {
            return None;
        }
        let sd = perceived.value_at_measurement(p) - perceived.spread_max() * (t - perceived.t_meas());
        let tangent = (g[0] / n).atan2(-g[1] / n);
        Some(tangent - ((self.standoff - sd) / self.blend).atan())
    }

    /// Reference over `[t_k, t_k + horizon]` starting from `x`. The field is
    /// frozen at its value for `t_k`: the planner is myopic about spread.
    pub fn plan(&self, perceived: &SdfForecastSet<f64>, x: &[f64], t_k: f64, horizon: f64, dt: f64) -> Result<Trajectory<f64>> {
        let sd = perceived.value_at_measurement([x[0], x[1]]) - perceived.spread_max() * (t_k - perceived.t_meas());
        if !(sd >= 0.0) {
            return Err(Error::Domain(format!("vehicle at ({:.1}, {:.1}) is inside the perceived fire", x[0], x[1])));
        }
        let m = self.model;
        let omega_max = self.turn_fraction * m.g * m.roll_max.tan() / self.speed.max(m.speed_min);
        let policy = |_t: f64, s: &[f64], u: &mut [f64]| -> Result<()> {
            let want = self.heading_at(perceived, t_k, [s[0], s[1]]).unwrap_or(s[3]);
            let omega = (self.heading_gain * wrap_angle(want - s[3])).clamp(-omega_max, omega_max);
            u[0] = self.speed_gain * (self.speed - s[2]);
            u[1] = (s[2] * omega / m.g).atan();
            Ok(())
        };
        propagate(&m, &policy, x, TimeGrid::spanning(t_k, horizon, dt)?, InputHold::ZeroOrderHold)
    }
}
