//! Empirical fit of the ISS tracking envelope.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Helicopter, Vehicle};
use crate::base::{IssBound, Trajectory};
use crate::error::{Error, Result};
use crate::ode::{propagate, InputHold, Stepper};
use crate::scalar::Scalar;
use crate::TimeGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisturbanceFamily {
    Constant,
    PiecewiseConstant,
    Sinusoidal,
    White,
}

impl DisturbanceFamily {
    pub const ALL: [DisturbanceFamily; 4] = [
        DisturbanceFamily::Constant,
        DisturbanceFamily::PiecewiseConstant,
        DisturbanceFamily::Sinusoidal,
        DisturbanceFamily::White,
    ];
}

/// Bounded signal of one family, sampled on demand.
struct Signal {
    family: DisturbanceFamily,
    amp: f64,
    dir: Vec<f64>,
    omega: f64,
    phase: f64,
    hold_until: f64,
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if m > 1e-3 && m <= 1.0 {
            return v.into_iter().map(|a| a / m).collect();
        }
    }
}

impl Signal {
    fn new(family: DisturbanceFamily, amp: f64, n: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            family,
            amp,
            dir: unit(rng, n),
            omega: rng.gen_range(0.1..2.0),
            phase: rng.gen_range(0.0..std::f64::consts::TAU),
            hold_until: 0.0,
        }
    }

    fn sample<S: Scalar>(&mut self, t: f64, rng: &mut ChaCha8Rng, out: &mut [S]) {
        let scale = match self.family {
            DisturbanceFamily::Constant => 1.0,
            DisturbanceFamily::PiecewiseConstant => {
                if t >= self.hold_until {
                    self.dir = unit(rng, self.dir.len());
                    self.hold_until = t + rng.gen_range(0.5..3.0);
                }
                1.0
            }
            DisturbanceFamily::Sinusoidal => (self.omega * t + self.phase).sin(),
            DisturbanceFamily::White => {
                self.dir = unit(rng, self.dir.len());
                rng.gen_range(0.0..=1.0f64).sqrt()
            }
        };
        for (o, d) in out.iter_mut().zip(&self.dir) {
            *o = S::of(self.amp * scale * d);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig<S> {
    /// Fixed decay rate of the envelope (1/s).
    pub decay: S,
    pub delta_max: S,
    pub w_bar: S,
    pub dt: S,
    pub fit_runs: usize,
    pub holdout_runs: usize,
    /// Multiplier applied to the empirical constants.
    pub safety: S,
    pub seed: u64,
}

impl<S: Scalar> Default for CalibrationConfig<S> {
    fn default() -> Self {
        Self {
            decay: S::of(0.5),
            delta_max: S::of(2.0),
            w_bar: S::of(0.2),
            dt: S::of(0.05),
            fit_runs: 100,
            holdout_runs: 100,
            safety: S::of(1.5),
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport<S> {
    pub bound: IssBound<S>,
    pub gain_empirical: S,
    pub disturbance_gain_empirical: S,
    pub holdout_runs: usize,
    pub holdout_exceedances: usize,
    /// Largest observed error / envelope ratio on the held-out runs.
    pub holdout_worst_ratio: S,
}

/// Tracks `reference` from an initial error `delta_vec`, with disturbance
/// and estimation-noise signals of amplitude `d_amp` / `v_amp`. Returns the
/// tracking error at every grid point.
#[allow(clippy::too_many_arguments)]
fn tracking_errors<S: Scalar, V: Vehicle<S>>(
    vehicle: &V,
    reference: &Trajectory<S>,
    delta_vec: &[S],
    family: DisturbanceFamily,
    d_amp: f64,
    v_amp: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<S>> {
    let n = vehicle.state_dim();
    let nd = vehicle.noise_dim();
    let grid = *reference.grid();
    let mut x = vec![S::zero(); n];
    vehicle.perturb(reference.first_state(), delta_vec, &mut x);
    let mut x_hat = vec![S::zero(); n];
    let mut u = vec![S::zero(); vehicle.input_dim()];
    let mut d = vec![S::zero(); nd];
    let mut v = vec![S::zero(); nd];
    let mut dist_sig = Signal::new(family, d_amp, nd, rng);
    let mut noise_sig = Signal::new(family, v_amp, nd, rng);
    let mut stepper = Stepper::new(vehicle);
    let mut errs = Vec::with_capacity(grid.n_steps() + 1);
    errs.push(vehicle.tracking_error(&x, reference.first_state()));
    for i in 0..grid.n_steps() {
        let t = grid.time(i);
        noise_sig.sample(t.as_f64(), rng, &mut v);
        vehicle.perturb(&x, &v, &mut x_hat);
        vehicle.track(&x_hat, reference.state(i), reference.input(i), &mut u)?;
        dist_sig.sample(t.as_f64(), rng, &mut d);
        stepper.step_held(t, grid.dt(), &mut x, &u, Some(&d))?;
        errs.push(vehicle.tracking_error(&x, reference.state(i + 1)));
    }
    Ok(errs)
}

fn scaled_unit<S: Scalar>(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> Vec<S> {
    unit(rng, n).into_iter().map(|a| S::of(a * norm)).collect()
}

/// Fits `M` (initial-error gain) from undisturbed runs and `c` from
/// disturbed runs started on the reference, each inflated by the safety
/// factor, then checks the bound on fresh references with both effects
/// combined.
pub fn calibrate_iss<S, V, G>(vehicle: &V, mut reference: G, cfg: &CalibrationConfig<S>) -> Result<CalibrationReport<S>>
where
    S: Scalar,
    V: Vehicle<S>,
    G: FnMut(&mut ChaCha8Rng) -> Result<Trajectory<S>>,
{
    if cfg.fit_runs == 0 || !(cfg.delta_max > S::zero()) || !(cfg.w_bar > S::zero()) {
        return Err(Error::Config("calibration needs runs and positive error / disturbance levels".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let nd = vehicle.noise_dim();
    let lam = cfg.decay.as_f64();
    let w = cfg.w_bar.as_f64();
    let mut m_emp = 0.0f64;
    let mut c_emp = 0.0f64;
    for run in 0..cfg.fit_runs {
        let r = reference(&mut rng)?;
        let delta = cfg.delta_max.as_f64() * rng.gen_range(0.1..=1.0);
        let dv = scaled_unit(&mut rng, nd, delta);
        let errs = tracking_errors(vehicle, &r, &dv, DisturbanceFamily::Constant, 0.0, 0.0, &mut rng)?;
        for (i, e) in errs.iter().enumerate() {
            let t = r.grid().time(i).as_f64() - r.t_start().as_f64();
            m_emp = m_emp.max(e.as_f64() / (delta * (-lam * t).exp()));
        }
        let family = DisturbanceFamily::ALL[run % 4];
        let zero = vec![S::zero(); nd];
        let errs = tracking_errors(vehicle, &r, &zero, family, w, w, &mut rng)?;
        for e in errs {
            c_emp = c_emp.max(e.as_f64() / w);
        }
    }
    let bound = IssBound::new(
        S::of((cfg.safety.as_f64() * m_emp).max(1.0)),
        cfg.decay,
        S::of(cfg.safety.as_f64() * c_emp),
    )?;
    let mut exceed = 0;
    let mut worst = 0.0f64;
    for run in 0..cfg.holdout_runs {
        let r = reference(&mut rng)?;
        let delta = cfg.delta_max.as_f64() * rng.gen_range(0.0..=1.0);
        let dv = scaled_unit(&mut rng, nd, delta);
        let family = DisturbanceFamily::ALL[run % 4];
        let errs = tracking_errors(vehicle, &r, &dv, family, w, w, &mut rng)?;
        let mut bad = false;
        for (i, e) in errs.iter().enumerate() {
            let t = r.grid().time(i) - r.t_start();
            let env = bound.envelope(S::of(delta), cfg.w_bar, t)?;
            worst = worst.max(e.as_f64() / env.as_f64());
            bad |= *e > env;
        }
        exceed += bad as usize;
    }
    Ok(CalibrationReport {
        bound,
        gain_empirical: S::of(m_emp),
        disturbance_gain_empirical: S::of(c_emp),
        holdout_runs: cfg.holdout_runs,
        holdout_exceedances: exceed,
        holdout_worst_ratio: S::of(worst),
    })
}

/// Feasible helicopter reference: the model driven by gentle random
/// sinusoidal inputs from a random speed and heading.
pub fn random_helicopter_reference<S: Scalar>(
    model: &Helicopter<S>,
    rng: &mut ChaCha8Rng,
    duration: S,
    dt: S,
) -> Result<Trajectory<S>> {
    let speed = rng.gen_range(10.0..20.0);
    let heading = rng.gen_range(-3.14..3.14);
    let (a1, w1, p1) = (rng.gen_range(0.0..0.3), rng.gen_range(0.1..0.5), rng.gen_range(0.0..6.28));
    let (a2, w2, p2) = (rng.gen_range(0.0..0.3), rng.gen_range(0.05..0.5), rng.gen_range(0.0..6.28));
    let policy = move |t: S, _x: &[S], u: &mut [S]| -> Result<()> {
        let t = t.as_f64();
        u[0] = S::of(a1 * (w1 * t + p1).sin());
        u[1] = S::of(a2 * (w2 * t + p2).sin());
        Ok(())
    };
    let x0 = [S::zero(), S::zero(), S::of(speed), S::of(heading)];
    propagate(model, &policy, &x0, TimeGrid::spanning(S::zero(), duration, dt)?, InputHold::ZeroOrderHold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vehicles::DoubleIntegrator;

    #[test]
    fn helicopter_bound_dominates_holdout() {
        let h = Helicopter::<f64>::default();
        let cfg = CalibrationConfig { fit_runs: 24, holdout_runs: 24, ..Default::default() };
        let rep = calibrate_iss(&h, |rng| random_helicopter_reference(&h, rng, 20.0, 0.05), &cfg).unwrap();
        assert_eq!(rep.holdout_exceedances, 0, "{rep:?}");
        assert!(rep.bound.gain >= 1.0);
        assert!(rep.holdout_worst_ratio < 1.0);
    }

    #[test]
    fn double_integrator_bound_dominates_holdout() {
        let v = DoubleIntegrator::<f64>::unbounded();
        let cfg = CalibrationConfig { fit_runs: 16, holdout_runs: 16, ..Default::default() };
        let gen = |rng: &mut ChaCha8Rng| {
            let a = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let pol = move |t: f64, _: &[f64], u: &mut [f64]| -> Result<()> {
                u[0] = a[0] * (0.3 * t).sin();
                u[1] = a[1] * (0.2 * t).cos();
                Ok(())
            };
            propagate(&v, &pol, &[0.0, 0.0, 1.0, 0.0], TimeGrid::spanning(0.0, 15.0, 0.05)?, InputHold::ZeroOrderHold)
        };
        let rep = calibrate_iss(&v, gen, &cfg).unwrap();
        assert_eq!(rep.holdout_exceedances, 0, "{rep:?}");
    }

    #[test]
    fn signals_respect_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for fam in DisturbanceFamily::ALL {
            let mut s = Signal::new(fam, 0.7, 4, &mut rng);
            let mut out = [0.0f64; 4];
            for i in 0..500 {
                s.sample(i as f64 * 0.05, &mut rng, &mut out);
                assert!(out.iter().map(|a| a * a).sum::<f64>().sqrt() <= 0.7 + 1e-12);
            }
        }
    }
}
