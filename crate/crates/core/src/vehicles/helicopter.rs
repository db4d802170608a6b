use std::sync::Arc;

use super::{BackupFactory, BackupPolicy, Vehicle};
use crate::error::{Error, Result};
use crate::ode::{Dynamics, Policy};
use crate::scalar::{wrap_angle, Scalar};
use crate::sets::{BackupSet, SdfForecastSet};

/// Coordinated-turn aircraft: state `(x, y, speed, heading)`, inputs
/// `(longitudinal acceleration, roll angle)`.
///
/// Tracking error, disturbances and estimation noise live in the flat
/// coordinates `(x, y, vx, vy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Helicopter<S> {
    pub g: S,
    pub accel_max: S,
    pub roll_max: S,
    pub speed_min: S,
    pub kp: S,
    pub kd: S,
}

impl<S: Scalar> Default for Helicopter<S> {
    fn default() -> Self {
        let g = S::of(9.81);
        Self { g, accel_max: g * S::of(0.5), roll_max: S::FRAC_PI_4(), speed_min: S::of(5.0), kp: S::one(), kd: S::of(2.0) }
    }
}

impl<S: Scalar> Helicopter<S> {
    /// Velocity vector of a state.
    #[inline]
    pub fn velocity(x: &[S]) -> [S; 2] {
        [x[2] * x[3].cos(), x[2] * x[3].sin()]
    }

    /// Acceleration produced by an input at a state (in the plane).
    pub fn acceleration(&self, x: &[S], u: &[S]) -> [S; 2] {
        let (c, s) = (x[3].cos(), x[3].sin());
        let a_n = self.g * u[1].tan();
        [u[0] * c - a_n * s, u[0] * s + a_n * c]
    }

    /// Input that produces planar acceleration `a` at state `x`, before
    /// saturation.
    pub fn input_for(&self, x: &[S], a: [S; 2]) -> [S; 2] {
        let (c, s) = (x[3].cos(), x[3].sin());
        let along = a[0] * c + a[1] * s;
        let normal = -a[0] * s + a[1] * c;
        [along, (normal / self.g).atan()]
    }

    /// Keeps speed above the floor: no deceleration within 1 m/s of it.
    fn guard_speed(&self, x: &[S], u: &mut [S]) {
        if x[2] <= self.speed_min + S::one() && u[0] < S::zero() {
            u[0] = S::zero();
        }
    }
}

impl<S: Scalar> Dynamics<S> for Helicopter<S> {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn rhs(&self, x: &[S], u: &[S], dx: &mut [S]) -> Result<()> {
        if !(x[2] >= self.speed_min) {
            return Err(Error::Singularity(format!("speed {} below floor {}", x[2], self.speed_min)));
        }
        let u1 = u[0].max(-self.accel_max).min(self.accel_max);
        let u2 = u[1].max(-self.roll_max).min(self.roll_max);
        dx[0] = x[2] * x[3].cos();
        dx[1] = x[2] * x[3].sin();
        dx[2] = u1;
        dx[3] = self.g / x[2] * u2.tan();
        Ok(())
    }

    fn saturate(&self, u: &mut [S]) {
        u[0] = u[0].max(-self.accel_max).min(self.accel_max);
        u[1] = u[1].max(-self.roll_max).min(self.roll_max);
    }

    /// `d` is a flat-coordinate disturbance `(dx, dy, dvx, dvy)`.
    fn add_disturbance(&self, x: &[S], d: &[S], dx: &mut [S]) {
        let (c, s) = (x[3].cos(), x[3].sin());
        dx[0] += d[0];
        dx[1] += d[1];
        dx[2] += d[2] * c + d[3] * s;
        dx[3] += (-d[2] * s + d[3] * c) / x[2];
    }
}

impl<S: Scalar> Vehicle<S> for Helicopter<S> {
    fn speed(&self, x: &[S]) -> S {
        x[2]
    }

    fn tracking_error(&self, x: &[S], r: &[S]) -> S {
        let (v, w) = (Self::velocity(x), Self::velocity(r));
        let e = [x[0] - r[0], x[1] - r[1], v[0] - w[0], v[1] - w[1]];
        (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + e[3] * e[3]).sqrt()
    }

    fn track(&self, x: &[S], r: &[S], u_ref: &[S], u: &mut [S]) -> Result<()> {
        if !(x[2] >= self.speed_min) {
            return Err(Error::Singularity(format!("flatness map singular at speed {}", x[2])));
        }
        let a_ref = self.acceleration(r, u_ref);
        let (v, w) = (Self::velocity(x), Self::velocity(r));
        let a = [
            a_ref[0] - self.kp * (x[0] - r[0]) - self.kd * (v[0] - w[0]),
            a_ref[1] - self.kp * (x[1] - r[1]) - self.kd * (v[1] - w[1]),
        ];
        let cmd = self.input_for(x, a);
        u[0] = cmd[0];
        u[1] = cmd[1];
        self.guard_speed(x, u);
        self.saturate(u);
        Ok(())
    }

    fn perturb(&self, x: &[S], v: &[S], out: &mut [S]) {
        let w = Self::velocity(x);
        let (vx, vy) = (w[0] + v[2], w[1] + v[3]);
        out[0] = x[0] + v[0];
        out[1] = x[1] + v[1];
        out[2] = vx.hypot(vy);
        out[3] = vy.atan2(vx);
    }
}

/// Flies straight away from the fire: heading frozen at the switch along
/// the perceived distance gradient, speed regulated to `target_speed`.
#[derive(Debug, Clone)]
pub struct EscapeBackup<S> {
    model: Helicopter<S>,
    heading: S,
    target_speed: S,
    k_speed: S,
    k_heading: S,
    set: BackupSet<S>,
}

impl<S: Scalar> EscapeBackup<S> {
    pub fn heading(&self) -> S {
        self.heading
    }

    pub fn target_speed(&self) -> S {
        self.target_speed
    }
}

impl<S: Scalar> Policy<S> for EscapeBackup<S> {
    fn control(&self, _t: S, x: &[S], u: &mut [S]) -> Result<()> {
        u[0] = self.k_speed * (self.target_speed - x[2]);
        let turn = x[2] * self.k_heading * wrap_angle(self.heading - x[3]);
        u[1] = (turn / self.model.g).atan();
        self.model.guard_speed(x, u);
        self.model.saturate(u);
        Ok(())
    }
}

impl<S: Scalar> BackupPolicy<S> for EscapeBackup<S> {
    fn backup_set(&self) -> &BackupSet<S> {
        &self.set
    }
}

/// Builds escape backups against one perceived set.
#[derive(Debug, Clone)]
pub struct EscapeFactory<S> {
    pub model: Helicopter<S>,
    pub forecast: Arc<SdfForecastSet<S>>,
    /// Assumed worst-case spread rate.
    pub spread: S,
    /// Speed margin over the spread rate.
    pub epsilon: S,
    /// Clearance the backup set must keep from the forecast boundary.
    pub clearance: S,
    pub heading_tol: S,
}

impl<S: Scalar> EscapeFactory<S> {
    pub fn new(model: Helicopter<S>, forecast: Arc<SdfForecastSet<S>>, spread: S, clearance: S) -> Self {
        Self { model, forecast, spread, epsilon: S::one(), clearance, heading_tol: S::of(0.2) }
    }

    /// Cruise speed of the escape: twice the margin over the spread rate,
    /// and at least 1 m/s above the speed floor (where braking stops).
    pub fn target_speed(&self) -> S {
        (self.model.speed_min + S::one()).max(self.spread + self.epsilon + self.epsilon)
    }

    /// Direction away from the fire at `p`; falls back to `fallback` where
    /// the perceived field is flat.
    pub fn escape_heading(&self, p: [S; 2], fallback: S) -> S {
        match self.forecast.gradient(p) {
            Some(g) if g[0].hypot(g[1]) > S::of(1e-6) => g[1].atan2(g[0]),
            _ => fallback,
        }
    }
}

impl<S: Scalar> BackupFactory<S> for EscapeFactory<S> {
    type Policy = EscapeBackup<S>;
    fn at_switch(&self, _t: S, x: &[S]) -> Result<EscapeBackup<S>> {
        let heading = self.escape_heading([x[0], x[1]], x[3]);
        Ok(EscapeBackup {
            model: self.model,
            heading,
            target_speed: self.target_speed(),
            k_speed: S::of(0.5),
            k_heading: S::one(),
            set: BackupSet::EscapeHeading {
                forecast: self.forecast.clone(),
                heading,
                heading_tol: self.heading_tol,
                min_speed: self.spread + self.epsilon,
                clearance: self.clearance,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{propagate, InputHold};
    use crate::sets::{build_sdf_from_bitmask, Bitmask, CellState, Grid2};
    use crate::TimeGrid;

    #[test]
    fn rhs_examples() {
        let h = Helicopter::<f64>::default();
        let mut dx = [0.0; 4];
        h.rhs(&[0.0, 0.0, 15.0, 0.0], &[0.0, 0.0], &mut dx).unwrap();
        assert_eq!(dx, [15.0, 0.0, 0.0, 0.0]);
        h.rhs(&[0.0, 0.0, 15.0, 0.0], &[0.0, std::f64::consts::FRAC_PI_6], &mut dx).unwrap();
        assert!((dx[3] - 0.3776).abs() < 1e-4);
        assert!((dx[3] - 9.81 / 15.0 * (std::f64::consts::FRAC_PI_6).tan()).abs() < 1e-15);
        h.rhs(&[0.0, 0.0, 15.0, 0.0], &[9.81, 0.0], &mut dx).unwrap();
        assert!((dx[2] - 4.905).abs() < 1e-12);
        assert!(matches!(h.rhs(&[0.0, 0.0, 4.0, 0.0], &[0.0, 0.0], &mut dx), Err(Error::Singularity(_))));
    }

    #[test]
    fn straight_flight() {
        let h = Helicopter::<f64>::default();
        let zero = |_: f64, _: &[f64], u: &mut [f64]| -> Result<()> {
            u.fill(0.0);
            Ok(())
        };
        let tr = propagate(&h, &zero, &[0.0, 0.0, 15.0, 0.0], TimeGrid::new(0.0, 0.05, 200).unwrap(), InputHold::ZeroOrderHold).unwrap();
        let x = tr.eval(7.3).unwrap();
        assert!((x[0] - 15.0 * 7.3).abs() < 1e-9 && x[1].abs() < 1e-12 && x[2] == 15.0 && x[3] == 0.0);
    }

    #[test]
    fn tracking_on_reference_returns_feedforward() {
        let h = Helicopter::<f64>::default();
        let mut u = [0.0; 2];
        h.track(&[1.0, 2.0, 15.0, 0.4], &[1.0, 2.0, 15.0, 0.4], &[0.0, 0.0], &mut u).unwrap();
        assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
        h.track(&[1.0, 2.0, 15.0, 0.4], &[1.0, 2.0, 15.0, 0.4], &[0.3, 0.2], &mut u).unwrap();
        assert!((u[0] - 0.3).abs() < 1e-12 && (u[1] - 0.2).abs() < 1e-12);
        assert!(h.track(&[0.0, 0.0, 4.0, 0.0], &[0.0, 0.0, 15.0, 0.0], &[0.0, 0.0], &mut u).is_err());
    }

    #[test]
    fn inputs_always_within_bounds() {
        let h = Helicopter::<f64>::default();
        let mut u = [0.0; 2];
        for &(dx, dv) in &[(500.0, 0.0), (-500.0, 30.0), (0.0, -200.0)] {
            h.track(&[dx, -dx, 15.0 + dv * 0.01, 1.0], &[0.0, 0.0, 15.0, -2.0], &[0.0, 0.0], &mut u).unwrap();
            assert!(u[0].abs() <= 0.5 * 9.81 && u[1].abs() <= std::f64::consts::FRAC_PI_4);
        }
    }

    #[test]
    fn flat_perturbation_has_exact_norm() {
        let h = Helicopter::<f64>::default();
        let x = [10.0, -3.0, 14.0, 2.0];
        let v = [0.1, -0.2, 0.3, 0.05];
        let mut y = [0.0; 4];
        h.perturb(&x, &v, &mut y);
        let n = (v.iter().map(|a| a * a).sum::<f64>()).sqrt();
        assert!((h.tracking_error(&y, &x) - n).abs() < 1e-12);
    }

    #[test]
    fn escape_flies_along_gradient_and_enters_set() {
        let g = Grid2::centered(4000.0f64, 10.0).unwrap();
        let mask = Bitmask::from_fn(g, 0.0, |p| if p[0].hypot(p[1]) < 500.0 { CellState::Burning } else { CellState::Free });
        let f = Arc::new(build_sdf_from_bitmask(&mask, 8.0 / 3.6).unwrap());
        let h = Helicopter::default();
        let fac = EscapeFactory::new(h, f, 8.0 / 3.6, 5.0);
        // Flying tangentially at the north side; escape heading is north.
        let x0 = [0.0, 650.0, 15.0, 0.0];
        let b = fac.at_switch(0.0, &x0).unwrap();
        assert!((b.heading() - std::f64::consts::FRAC_PI_2).abs() < 0.05);
        assert_eq!(fac.target_speed(), 6.0);
        let tr = propagate(&h, &b, &x0, TimeGrid::new(0.0, 0.05, 2400).unwrap(), InputHold::ZeroOrderHold).unwrap();
        assert!(b.backup_set().contains(tr.last_state(), 120.0, 0.0).unwrap());
        for i in 0..tr.n_steps() {
            let u = tr.input(i);
            assert!(u[0].abs() <= 0.5 * 9.81 && u[1].abs() <= std::f64::consts::FRAC_PI_4);
            assert!(tr.state(i)[2] >= 5.0);
        }
    }
}
