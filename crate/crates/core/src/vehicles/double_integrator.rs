use super::lqr::{double_integrator_matrices, lqr, Mat};
use super::{BackupFactory, BackupPolicy, Vehicle};
use crate::error::{Error, Result};
use crate::ode::{Dynamics, Policy};
use crate::scalar::{dist, norm, Scalar};
use crate::sets::BackupSet;

/// Planar double integrator, state `[px, py, vx, vy]`, input acceleration.
/// Inputs are saturated in norm to `accel_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleIntegrator<S> {
    pub accel_max: S,
    pub kp: S,
    pub kd: S,
}

impl<S: Scalar> DoubleIntegrator<S> {
    pub fn new(accel_max: S) -> Self {
        Self { accel_max, kp: S::of(4.0), kd: S::of(4.0) }
    }

    pub fn unbounded() -> Self {
        Self::new(S::infinity())
    }
}

impl<S: Scalar> Dynamics<S> for DoubleIntegrator<S> {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn rhs(&self, x: &[S], u: &[S], dx: &mut [S]) -> Result<()> {
        dx[0] = x[2];
        dx[1] = x[3];
        dx[2] = u[0];
        dx[3] = u[1];
        Ok(())
    }

    fn saturate(&self, u: &mut [S]) {
        let n = norm(u);
        if n > self.accel_max {
            let s = self.accel_max / n;
            u[0] *= s;
            u[1] *= s;
        }
    }
}

impl<S: Scalar> Vehicle<S> for DoubleIntegrator<S> {
    fn speed(&self, x: &[S]) -> S {
        x[2].hypot(x[3])
    }

    fn tracking_error(&self, x: &[S], reference: &[S]) -> S {
        dist(&x[..4], &reference[..4])
    }

    fn track(&self, x_hat: &[S], r: &[S], u_ref: &[S], u: &mut [S]) -> Result<()> {
        for a in 0..2 {
            u[a] = u_ref[a] - self.kp * (x_hat[a] - r[a]) - self.kd * (x_hat[a + 2] - r[a + 2]);
        }
        self.saturate(u);
        Ok(())
    }

    fn perturb(&self, x: &[S], v: &[S], out: &mut [S]) {
        for i in 0..4 {
            out[i] = x[i] + v[i];
        }
    }
}

/// LQR escape law moving radially away from a disk fire:
/// `u = -K (x - [p_ref(t); speed n])`, `p_ref(t) = (1 + r_k + speed (t - t_k)) n`.
#[derive(Debug, Clone)]
pub struct RadialBackup<S> {
    gain: [S; 2],
    set: BackupSet<S>,
}

impl<S: Scalar> RadialBackup<S> {
    /// `x_k` fixes the escape direction; `r_k` is the fire radius at `t_k`.
    pub fn new(x_k: &[S], r_k: S, t_k: S) -> Result<Self> {
        let d = x_k[0].hypot(x_k[1]);
        if !(d > S::zero()) {
            return Err(Error::DegenerateGeometry("escape direction undefined at the fire centre".into()));
        }
        let n = [x_k[0] / d, x_k[1] / d];
        let (a, b) = double_integrator_matrices::<S>();
        let (_, k) = lqr(&a, &b, &Mat::identity(4), &Mat::identity(2))?;
        Ok(Self { gain: [k[(0, 0)], k[(0, 2)]], set: BackupSet::moving_ball(n, r_k, t_k) })
    }

    pub fn gain(&self) -> [S; 2] {
        self.gain
    }

    pub fn direction(&self) -> [S; 2] {
        match self.set {
            BackupSet::MovingBall { n, .. } => n,
            _ => unreachable!(),
        }
    }
}

impl<S: Scalar> Policy<S> for RadialBackup<S> {
    fn control(&self, t: S, x: &[S], u: &mut [S]) -> Result<()> {
        let c = self.set.ball_center(t).expect("moving ball");
        for a in 0..2 {
            u[a] = -self.gain[0] * (x[a] - c[a]) - self.gain[1] * (x[a + 2] - c[a + 2]);
        }
        Ok(())
    }
}

impl<S: Scalar> BackupPolicy<S> for RadialBackup<S> {
    fn backup_set(&self) -> &BackupSet<S> {
        &self.set
    }
}

/// Radial backup bound at iteration time: direction from the state at
/// `t_k`, independent of the switch state.
#[derive(Debug, Clone)]
pub struct RadialFactory<S>(pub RadialBackup<S>);

impl<S: Scalar> BackupFactory<S> for RadialFactory<S> {
    type Policy = RadialBackup<S>;
    fn at_switch(&self, _t: S, _x: &[S]) -> Result<RadialBackup<S>> {
        Ok(self.0.clone())
    }
}

/// Decelerates at `accel_max` along the velocity, landing exactly on zero
/// velocity under a zero-order hold of period `dt`, then holds still.
#[derive(Debug, Clone)]
pub struct StopBackup<S> {
    accel_max: S,
    dt: S,
    set: BackupSet<S>,
}

impl<S: Scalar> StopBackup<S> {
    pub fn new(x_s: &[S], accel_max: S, dt: S, radius: S) -> Result<Self> {
        if !(accel_max > S::zero() && accel_max.is_finite() && dt > S::zero()) {
            return Err(Error::Config("stop backup needs finite positive deceleration and step".into()));
        }
        let mut me = Self {
            accel_max,
            dt,
            set: BackupSet::StopBall { center: [x_s[0], x_s[1]], radius, max_speed: S::zero() },
        };
        let center = me.stop_point(x_s);
        me.set = BackupSet::StopBall { center, radius, max_speed: accel_max * dt * S::of(1e-6) };
        Ok(me)
    }

    fn decel(&self, v: [S; 2]) -> [S; 2] {
        let s = v[0].hypot(v[1]);
        if s == S::zero() {
            return [S::zero(); 2];
        }
        let a = self.accel_max.min(s / self.dt);
        [-a * v[0] / s, -a * v[1] / s]
    }

    /// Rest position reached from `x` under this law (exact for the held
    /// input, since position is quadratic within each step).
    pub fn stop_point(&self, x: &[S]) -> [S; 2] {
        let (mut p, mut v) = ([x[0], x[1]], [x[2], x[3]]);
        let half = S::of(0.5) * self.dt * self.dt;
        while v[0] != S::zero() || v[1] != S::zero() {
            let a = self.decel(v);
            for i in 0..2 {
                p[i] += v[i] * self.dt + a[i] * half;
                v[i] += a[i] * self.dt;
            }
            if v[0].hypot(v[1]) <= self.accel_max * self.dt * S::of(1e-9) {
                break;
            }
        }
        p
    }

    /// Time to rest from speed `v0`.
    pub fn stopping_time(&self, v0: S) -> S {
        v0 / self.accel_max
    }
}

impl<S: Scalar> Policy<S> for StopBackup<S> {
    fn control(&self, _t: S, x: &[S], u: &mut [S]) -> Result<()> {
        let a = self.decel([x[2], x[3]]);
        u[0] = a[0];
        u[1] = a[1];
        Ok(())
    }
}

impl<S: Scalar> BackupPolicy<S> for StopBackup<S> {
    fn backup_set(&self) -> &BackupSet<S> {
        &self.set
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StopFactory<S> {
    pub accel_max: S,
    pub dt: S,
    pub radius: S,
}

impl<S: Scalar> BackupFactory<S> for StopFactory<S> {
    type Policy = StopBackup<S>;
    fn at_switch(&self, _t: S, x: &[S]) -> Result<StopBackup<S>> {
        StopBackup::new(x, self.accel_max, self.dt, self.radius)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::{propagate, InputHold};
    use crate::TimeGrid;
    use rand::{Rng, SeedableRng};

    #[test]
    fn pd_example() {
        let v = DoubleIntegrator::<f64>::unbounded();
        let mut u = [0.0; 2];
        v.track(&[1.0, 0.0, 0.0, 0.0], &[0.0; 4], &[0.0, 0.0], &mut u).unwrap();
        assert_eq!(u, [-4.0, 0.0]);
        v.track(&[3.0, 2.0, 1.0, 1.0], &[3.0, 2.0, 1.0, 1.0], &[0.3, -0.2], &mut u).unwrap();
        assert_eq!(u, [0.3, -0.2]);
    }

    #[test]
    fn radial_reference_and_equilibrium() {
        let b = RadialBackup::new(&[50.0f64, 0.0, 0.0, 0.0], 100.0, 0.0).unwrap();
        assert_eq!(b.backup_set().ball_center(0.0).unwrap(), [101.0, 0.0, 2.0, 0.0]);
        let g = b.gain();
        assert!((g[0] - 1.0).abs() < 1e-9 && (g[1] - 3f64.sqrt()).abs() < 1e-9);
        let mut u = [9.0; 2];
        b.control(4.0, &[109.0, 0.0, 2.0, 0.0], &mut u).unwrap();
        assert!(u[0].abs() < 1e-12 && u[1].abs() < 1e-12);
        assert!(matches!(RadialBackup::new(&[0.0, 0.0, 1.0, 1.0], 1.0, 0.0), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn radial_reaches_ball_from_nearby() {
        let v = DoubleIntegrator::<f64>::unbounded();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let rad = rng.gen_range(100.0..110.0);
            let x0 = [rad * ang.cos(), rad * ang.sin(), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let b = RadialBackup::new(&x0, 95.0, 0.0).unwrap();
            let traj = propagate(&v, &b, &x0, TimeGrid::new(0.0, 0.05, 200).unwrap(), InputHold::Continuous).unwrap();
            assert!(b.backup_set().contains(traj.last_state(), 10.0, 0.0).unwrap());
        }
    }

    #[test]
    fn stop_within_kinematic_time() {
        let g = 9.81f64;
        let v = DoubleIntegrator::new(0.5 * g);
        let x0 = [0.0, 0.0, 15.0, 0.0];
        let b = StopBackup::new(&x0, 0.5 * g, 0.05, 0.5).unwrap();
        assert!((b.stopping_time(15.0) - 3.058).abs() < 1e-3);
        let traj = propagate(&v, &b, &x0, TimeGrid::new(0.0, 0.05, 80).unwrap(), InputHold::ZeroOrderHold).unwrap();
        let t_stop = (0..=80).find(|&i| traj.state(i)[2].abs() < 1e-12).unwrap() as f64 * 0.05;
        assert!(t_stop <= 15.0 / (0.5 * g) + 0.05, "{t_stop}");
        for i in 0..80 {
            assert!(norm(traj.input(i)) <= 0.5 * g + 1e-12);
        }
        let end = traj.last_state();
        let c = b.stop_point(&x0);
        assert!((end[0] - c[0]).abs() < 1e-9 && end[2].abs() < 1e-12);
        assert!((c[0] - 15.0 * 15.0 / g).abs() < 1.0);
        assert!(b.backup_set().contains(end, 4.0, 0.0).unwrap());
    }

    #[test]
    fn stop_ball_from_rest_is_centred_here() {
        let b = StopBackup::new(&[3.0f64, -1.0, 0.0, 0.0], 2.0, 0.05, 0.5).unwrap();
        match b.backup_set() {
            BackupSet::StopBall { center, .. } => assert_eq!(*center, [3.0, -1.0]),
            _ => panic!(),
        }
    }
}
