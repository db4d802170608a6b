//! Analytic containment checks on the radially spreading disk fire with the
//! double integrator and its LQR escape law.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::CheckResult;
use crate::base::TimeGrid;
use crate::error::Result;
use crate::ode::{propagate, InputHold};
use crate::sets::{linear_growth, AnalyticDiskComplement, BackupSet, TimeVaryingSet};
use crate::vehicles::{BackupPolicy, DoubleIntegrator, RadialBackup};

/// Spread-rate bound assumed by the perceived sets.
pub const SPREAD_BOUND: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    /// Propagation length of each invariance trial.
    pub trial_duration: f64,
    pub dt: f64,
    /// Allowed numerical drift outside the moving ball.
    pub tolerance: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { samples: 1000, trials: 100, seed: 7, trial_duration: 20.0, dt: 0.01, tolerance: 1e-9 }
    }
}

/// Fire radius over time for a radius-dependent spread rate
/// `sigma(r) <= SPREAD_BOUND`, tabulated by RK4 and linearly interpolated.
/// Every tabulated increment is an average of rates below the bound, so
/// `r(t) - r(s) <= 2 (t - s)` holds exactly for the interpolant.
#[derive(Debug, Clone)]
pub struct RadialFire {
    dt: f64,
    radius: Vec<f64>,
}

impl RadialFire {
    pub fn sigma(r: f64) -> f64 {
        SPREAD_BOUND * (0.55 + 0.45 * (r / 37.0).sin())
    }

    pub fn new(r0: f64, t_end: f64, dt: f64) -> Self {
        let n = (t_end / dt).ceil() as usize;
        let mut radius = Vec::with_capacity(n + 1);
        let mut r = r0;
        radius.push(r);
        for _ in 0..n {
            let k1 = Self::sigma(r);
            let k2 = Self::sigma(r + 0.5 * dt * k1);
            let k3 = Self::sigma(r + 0.5 * dt * k2);
            let k4 = Self::sigma(r + dt * k3);
            r += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            radius.push(r);
        }
        Self { dt, radius }
    }

    pub fn t_end(&self) -> f64 {
        (self.radius.len() - 1) as f64 * self.dt
    }

    pub fn radius(&self, t: f64) -> f64 {
        let s = (t / self.dt).clamp(0.0, (self.radius.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.radius.len() - 2);
        let f = s - i as f64;
        self.radius[i] + f * (self.radius[i + 1] - self.radius[i])
    }

    /// True safe set `S(t)`.
    pub fn safe_set(&self) -> AnalyticDiskComplement<f64, impl Fn(f64) -> f64 + Send + Sync + '_> {
        AnalyticDiskComplement::new([0.0, 0.0], move |t| self.radius(t))
    }

    /// Perceived set `B_k(t)` from the radius measured at `t_k`.
    pub fn perceived(&self, t_k: f64) -> AnalyticDiskComplement<f64, impl Fn(f64) -> f64 + Send + Sync + Clone> {
        AnalyticDiskComplement::new([0.0, 0.0], linear_growth(self.radius(t_k), t_k, SPREAD_BOUND))
    }
}

fn unit2(rng: &mut ChaCha8Rng) -> [f64; 2] {
    let a = rng.gen_range(0.0..std::f64::consts::TAU);
    [a.cos(), a.sin()]
}

/// Uniform sample of the closed unit ball in four dimensions.
fn in_unit_ball4(rng: &mut ChaCha8Rng) -> [f64; 4] {
    loop {
        let v = [rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)];
        if v.iter().map(|a| a * a).sum::<f64>() <= 1.0 {
            return v;
        }
    }
}

/// Point at a random bearing whose distance from the origin straddles
/// `radius` by up to `spread`, so both sides of the boundary are hit.
fn near_circle(rng: &mut ChaCha8Rng, radius: f64, spread: f64) -> [f64; 2] {
    let n = unit2(rng);
    let d = (radius + rng.gen_range(-spread..spread)).max(0.0);
    [d * n[0], d * n[1]]
}

/// `B_k(t) ⊂ S(t)` for `t >= t_k`.
pub fn perceived_within_safe(fire: &RadialFire, cfg: &OracleConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let safe = fire.safe_set();
    let (mut members, mut failures) = (0, 0);
    let half = 0.5 * fire.t_end();
    for i in 0..cfg.samples {
        let t_k = rng.gen_range(0.0..half);
        let t = t_k + rng.gen_range(0.0..half);
        let b = fire.perceived(t_k);
        // Alternate between the forecast boundary and the true front.
        let around = if i % 2 == 0 { fire.radius(t_k) + SPREAD_BOUND * (t - t_k) } else { fire.radius(t) };
        let p = near_circle(&mut rng, around, 60.0);
        if b.contains(p, t, 0.0)? {
            members += 1;
            failures += !safe.contains(p, t, 0.0)? as usize;
        }
    }
    Ok(CheckResult::new("perceived set inside safe set", cfg.samples, members, failures))
}

/// `B_k(t) ⊂ B_{k+1}(t)` for `t >= t_{k+1}`.
pub fn perceived_nested(fire: &RadialFire, cfg: &OracleConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 1);
    let (mut members, mut failures) = (0, 0);
    let third = fire.t_end() / 3.0;
    for _ in 0..cfg.samples {
        let t_k = rng.gen_range(0.0..third);
        let t_next = t_k + rng.gen_range(0.0..third);
        let t = t_next + rng.gen_range(0.0..third);
        let (older, newer) = (fire.perceived(t_k), fire.perceived(t_next));
        let p = near_circle(&mut rng, fire.radius(t_k) + SPREAD_BOUND * (t - t_k), 60.0);
        if older.contains(p, t, 0.0)? {
            members += 1;
            failures += !newer.contains(p, t, 0.0)? as usize;
        }
    }
    Ok(CheckResult::new("perceived sets nested", cfg.samples, members, failures))
}

/// `C_k(t) ⊂ S(t)` for `t >= t_k`: states sampled inside the moving ball
/// are outside the true fire.
pub fn backup_within_safe(fire: &RadialFire, cfg: &OracleConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 2);
    let safe = fire.safe_set();
    let mut failures = 0;
    let half = 0.5 * fire.t_end();
    for _ in 0..cfg.samples {
        let t_k = rng.gen_range(0.0..half);
        let t = t_k + rng.gen_range(0.0..half);
        let set = BackupSet::moving_ball(unit2(&mut rng), fire.radius(t_k), t_k);
        let c = set.ball_center(t).expect("moving ball");
        let e = in_unit_ball4(&mut rng);
        let x: Vec<f64> = (0..4).map(|i| c[i] + e[i]).collect();
        debug_assert!(set.depth(&x, t)? >= -1e-12);
        failures += !safe.contains([x[0], x[1]], t, 0.0)? as usize;
    }
    Ok(CheckResult::new("backup set inside safe set", cfg.samples, cfg.samples, failures))
}

/// The LQR escape law keeps states of the moving ball inside it: the error
/// dynamics per axis are `[[0, 1], [-k1, -k2]]`, whose symmetric part is
/// negative semi-definite, so the Euclidean error never grows.
pub fn moving_ball_invariance(fire: &RadialFire, cfg: &OracleConfig) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 3);
    let vehicle = DoubleIntegrator::<f64>::unbounded();
    let mut failures = 0;
    let mut states = 0;
    for _ in 0..cfg.trials {
        let t_k = rng.gen_range(0.0..0.5 * fire.t_end());
        let n = unit2(&mut rng);
        let r_k = fire.radius(t_k);
        let policy = RadialBackup::new(&[n[0], n[1], 0.0, 0.0], r_k, t_k)?;
        let t0 = t_k + rng.gen_range(0.0..10.0);
        let c = policy.backup_set().ball_center(t0).expect("moving ball");
        let e = in_unit_ball4(&mut rng);
        let x0: Vec<f64> = (0..4).map(|i| c[i] + e[i]).collect();
        let grid = TimeGrid::spanning(t0, cfg.trial_duration, cfg.dt)?;
        let traj = propagate(&vehicle, &policy, &x0, grid, InputHold::Continuous)?;
        let mut bad = false;
        for (i, x) in traj.states().enumerate() {
            states += 1;
            bad |= policy.backup_set().depth(x, grid.time(i))? < -cfg.tolerance;
        }
        failures += bad as usize;
    }
    let mut r = CheckResult::new("moving ball invariant under escape law", cfg.trials, cfg.trials, failures);
    r.detail = format!("{states} propagated states");
    Ok(r)
}

/// All four containment checks.
pub fn appendix_oracle(cfg: &OracleConfig) -> Result<Vec<CheckResult>> {
    let fire = RadialFire::new(100.0, 400.0, 0.01);
    Ok(vec![
        perceived_within_safe(&fire, cfg)?,
        perceived_nested(&fire, cfg)?,
        backup_within_safe(&fire, cfg)?,
        moving_ball_invariance(&fire, cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_fire_respects_bound() {
        let f = RadialFire::new(100.0, 50.0, 0.01);
        assert_eq!(f.radius(0.0), 100.0);
        for i in 0..500 {
            let (a, b) = (i as f64 * 0.1, i as f64 * 0.1 + 0.1);
            let grow = f.radius(b) - f.radius(a);
            assert!(grow > 0.0 && grow <= SPREAD_BOUND * 0.1 + 1e-12);
        }
    }

    #[test]
    fn perceived_matches_closed_form() {
        let f = RadialFire::new(100.0, 100.0, 0.01);
        let b = f.perceived(10.0);
        let r_k = f.radius(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let t = rng.gen_range(10.0..60.0);
            let p = near_circle(&mut rng, r_k + 2.0 * (t - 10.0), 30.0);
            let closed = p[0].hypot(p[1]) >= r_k + 2.0 * (t - 10.0);
            assert_eq!(b.contains(p, t, 0.0).unwrap(), closed);
        }
    }

    #[test]
    fn suite_passes_with_meaningful_samples() {
        let cfg = OracleConfig { samples: 400, trials: 20, ..Default::default() };
        for c in appendix_oracle(&cfg).unwrap() {
            assert!(c.passed(), "{c:?}");
            assert!(c.members * 4 >= c.samples, "too few samples inside the antecedent set: {c:?}");
        }
    }

    #[test]
    fn violation_is_detected_when_bound_is_wrong() {
        // A set that forecasts half the true growth leaks into the fire.
        let f = RadialFire::new(100.0, 400.0, 0.01);
        let safe = f.safe_set();
        let slow = AnalyticDiskComplement::new([0.0, 0.0], linear_growth(f.radius(0.0), 0.0, 0.5));
        let p = [f.radius(100.0) - 1.0, 0.0];
        assert!(slow.contains(p, 100.0, 0.0).unwrap());
        assert!(!safe.contains(p, 100.0, 0.0).unwrap());
    }
}
