//! Fixed-step classical Runge-Kutta propagation of open- and closed-loop
//! dynamics.
//!
//! Closed-loop propagation supports two input conventions. Under
//! [`InputHold::ZeroOrderHold`] the policy is sampled once at the start of each
//! step and held across the four stages, which is exactly how the simulated
//! plant applies inputs; propagated candidates are then reproduced to
//! round-off by the plant. Under [`InputHold::Continuous`] the policy is
//! evaluated at every stage, i.e. RK4 on `x' = f(x, pi(t, x))`.

use crate::base::{TimeGrid, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Initial value problem `x' = rhs(t, x)`, `x(t_start) = x0` on `grid`.
pub struct IvpSpec<S, F> {
    pub rhs: F,
    pub x0: Vec<S>,
    pub grid: TimeGrid<S>,
}

/// Integrates an open-loop IVP with classical RK4. The returned trajectory
/// carries no inputs.
pub fn integrate<S, F>(spec: &IvpSpec<S, F>) -> Result<Trajectory<S>>
where
    S: Scalar,
    F: Fn(S, &[S], &mut [S]),
{
    let n = spec.x0.len();
    check_finite(&spec.x0, spec.grid.t_start())?;
    let grid = spec.grid;
    let h = grid.dt();
    let half = h / S::of(2.0);
    let six = S::of(6.0);
    let mut states = Vec::with_capacity((grid.n_steps() + 1) * n);
    states.extend_from_slice(&spec.x0);
    let mut x = spec.x0.clone();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n], vec![S::zero(); n]);
    for i in 0..grid.n_steps() {
        let t = grid.time(i);
        (spec.rhs)(t, &x, &mut k1);
        check_derivative(&k1, t)?;
        axpy(&x, half, &k1, &mut tmp);
        (spec.rhs)(t + half, &tmp, &mut k2);
        check_derivative(&k2, t)?;
        axpy(&x, half, &k2, &mut tmp);
        (spec.rhs)(t + half, &tmp, &mut k3);
        check_derivative(&k3, t)?;
        axpy(&x, h, &k3, &mut tmp);
        (spec.rhs)(t + h, &tmp, &mut k4);
        check_derivative(&k4, t)?;
        for j in 0..n {
            x[j] += h / six * (k1[j] + (k2[j] + k3[j]) * S::of(2.0) + k4[j]);
        }
        check_finite(&x, grid.time(i + 1))?;
        states.extend_from_slice(&x);
    }
    Trajectory::new(grid, n, 0, states, Vec::new(), None)
}

/// Controlled dynamics `x' = f(x, u)`.
pub trait Dynamics<S: Scalar>: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn rhs(&self, x: &[S], u: &[S], dx: &mut [S]) -> Result<()>;

    /// Clamps `u` to the admissible input set.
    fn saturate(&self, _u: &mut [S]) {}

    /// Adds an additive disturbance `d` to a computed derivative.
    fn add_disturbance(&self, _x: &[S], d: &[S], dx: &mut [S]) {
        for (o, &v) in dx.iter_mut().zip(d) {
            *o += v;
        }
    }
}

impl<S: Scalar, D: Dynamics<S> + ?Sized> Dynamics<S> for &D {
    fn state_dim(&self) -> usize {
        (**self).state_dim()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn rhs(&self, x: &[S], u: &[S], dx: &mut [S]) -> Result<()> {
        (**self).rhs(x, u, dx)
    }
    fn saturate(&self, u: &mut [S]) {
        (**self).saturate(u)
    }
    fn add_disturbance(&self, x: &[S], d: &[S], dx: &mut [S]) {
        (**self).add_disturbance(x, d, dx)
    }
}

/// Feedback law `u = pi(t, x)`.
pub trait Policy<S: Scalar>: Send + Sync {
    fn control(&self, t: S, x: &[S], u: &mut [S]) -> Result<()>;
}

impl<S, F> Policy<S> for F
where
    S: Scalar,
    F: Fn(S, &[S], &mut [S]) -> Result<()> + Send + Sync,
{
    fn control(&self, t: S, x: &[S], u: &mut [S]) -> Result<()> {
        self(t, x, u)
    }
}

/// How a closed-loop propagation samples its policy within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputHold {
    #[default]
    ZeroOrderHold,
    Continuous,
}

/// Reusable RK4 stepper for controlled dynamics.
pub struct Stepper<'a, S, D: ?Sized> {
    dynamics: &'a D,
    k: [Vec<S>; 4],
    tmp: Vec<S>,
    u: Vec<S>,
}

impl<'a, S: Scalar, D: Dynamics<S> + ?Sized> Stepper<'a, S, D> {
    pub fn new(dynamics: &'a D) -> Self {
        let n = dynamics.state_dim();
        let z = || vec![S::zero(); n];
        Self {
            dynamics,
            k: [z(), z(), z(), z()],
            tmp: z(),
            u: vec![S::zero(); dynamics.input_dim()],
        }
    }

    fn eval(&mut self, stage: usize, x_is_tmp: bool, x: &[S], u: &[S], d: Option<&[S]>, t: S) -> Result<()> {
        let xs: &[S] = if x_is_tmp { &self.tmp } else { x };
        self.dynamics
            .rhs(xs, u, &mut self.k[stage])
            .map_err(|e| Error::Propagation { t: t.as_f64(), reason: e.to_string() })?;
        if let Some(d) = d {
            self.dynamics.add_disturbance(xs, d, &mut self.k[stage]);
        }
        check_derivative(&self.k[stage], t)
    }

    /// One RK4 step of length `h` from `x` with input `u` held constant and
    /// an optional constant additive disturbance. Updates `x` in place.
    pub fn step_held(&mut self, t: S, h: S, x: &mut [S], u: &[S], d: Option<&[S]>) -> Result<()> {
        let half = h / S::of(2.0);
        self.eval(0, false, x, u, d, t)?;
        axpy(x, half, &self.k[0], &mut self.tmp);
        self.eval(1, true, x, u, d, t + half)?;
        axpy(x, half, &self.k[1], &mut self.tmp);
        self.eval(2, true, x, u, d, t + half)?;
        axpy(x, h, &self.k[2], &mut self.tmp);
        self.eval(3, true, x, u, d, t + h)?;
        self.combine(h, x);
        check_finite(x, t + h)
    }

    /// One RK4 step with the policy evaluated at every stage. Writes the
    /// input computed at the step start to `u_start`.
    pub fn step_continuous<P: Policy<S> + ?Sized>(
        &mut self,
        t: S,
        h: S,
        x: &mut [S],
        policy: &P,
        u_start: &mut [S],
    ) -> Result<()> {
        let half = h / S::of(2.0);
        let offsets = [S::zero(), half, half, h];
        for (s, &offset) in offsets.iter().enumerate() {
            if s == 0 {
                self.tmp.copy_from_slice(x);
            } else {
                axpy(x, offset, &self.k[s - 1], &mut self.tmp);
            }
            let ts = t + offset;
            policy
                .control(ts, &self.tmp, &mut self.u)
                .map_err(|e| Error::Propagation { t: ts.as_f64(), reason: e.to_string() })?;
            self.dynamics.saturate(&mut self.u);
            if s == 0 {
                u_start.copy_from_slice(&self.u);
            }
            let u = std::mem::take(&mut self.u);
            let r = self.eval(s, true, x, &u, None, ts);
            self.u = u;
            r?;
        }
        self.combine(h, x);
        check_finite(x, t + h)
    }

    fn combine(&self, h: S, x: &mut [S]) {
        let two = S::of(2.0);
        let w = h / S::of(6.0);
        for j in 0..x.len() {
            x[j] += w * (self.k[0][j] + (self.k[1][j] + self.k[2][j]) * two + self.k[3][j]);
        }
    }
}

/// Propagates the closed loop `x' = f(x, pi(t, x))` over `grid`.
pub fn propagate<S, D, P>(
    dynamics: &D,
    policy: &P,
    x0: &[S],
    grid: TimeGrid<S>,
    hold: InputHold,
) -> Result<Trajectory<S>>
where
    S: Scalar,
    D: Dynamics<S> + ?Sized,
    P: Policy<S> + ?Sized,
{
    let mut out = Segment::new(dynamics, x0, grid.n_steps())?;
    out.run(dynamics, policy, grid, 0, grid.n_steps(), hold)?;
    out.finish(grid, None)
}

/// Propagates tracking for `[t_k, t_k + t_switch)` and backup afterwards,
/// over `[t_k, t_k + t_switch + t_backup]`. The input at the switch instant
/// comes from the backup policy.
#[allow(clippy::too_many_arguments)]
pub fn integrate_switched<S, D, PT, PB>(
    dynamics: &D,
    x0: &[S],
    track: &PT,
    backup: &PB,
    t_k: S,
    t_switch: S,
    t_backup: S,
    dt: S,
    hold: InputHold,
) -> Result<Trajectory<S>>
where
    S: Scalar,
    D: Dynamics<S> + ?Sized,
    PT: Policy<S> + ?Sized,
    PB: Policy<S> + ?Sized,
{
    if !(t_backup > S::zero()) {
        return Err(Error::Config(format!("backup duration must be positive, got {t_backup}")));
    }
    let n_s = crate::base::time_grid_steps(t_switch, dt)?;
    let n_b = crate::base::time_grid_steps(t_backup, dt)?;
    let grid = TimeGrid::new(t_k, dt, n_s + n_b)?;
    let mut seg = Segment::new(dynamics, x0, grid.n_steps())?;
    seg.run(dynamics, track, grid, 0, n_s, hold)?;
    seg.run(dynamics, backup, grid, n_s, n_s + n_b, hold)?;
    seg.finish(grid, Some(n_s))
}

/// Growing state/input buffers for closed-loop propagation.
pub(crate) struct Segment<S> {
    state_dim: usize,
    input_dim: usize,
    states: Vec<S>,
    inputs: Vec<S>,
    x: Vec<S>,
}

impl<S: Scalar> Segment<S> {
    pub(crate) fn new<D: Dynamics<S> + ?Sized>(dynamics: &D, x0: &[S], steps: usize) -> Result<Self> {
        let n = dynamics.state_dim();
        if x0.len() != n {
            return Err(Error::Config(format!("initial state has {} entries, expected {n}", x0.len())));
        }
        check_finite(x0, S::zero())?;
        let mut states = Vec::with_capacity((steps + 1) * n);
        states.extend_from_slice(x0);
        Ok(Self {
            state_dim: n,
            input_dim: dynamics.input_dim(),
            states,
            inputs: Vec::with_capacity(steps * dynamics.input_dim()),
            x: x0.to_vec(),
        })
    }

    /// Advances steps `from..to` of `grid` under `policy`.
    pub(crate) fn run<D, P>(
        &mut self,
        dynamics: &D,
        policy: &P,
        grid: TimeGrid<S>,
        from: usize,
        to: usize,
        hold: InputHold,
    ) -> Result<()>
    where
        D: Dynamics<S> + ?Sized,
        P: Policy<S> + ?Sized,
    {
        let mut stepper = Stepper::new(dynamics);
        let mut u = vec![S::zero(); self.input_dim];
        let h = grid.dt();
        for i in from..to {
            let t = grid.time(i);
            match hold {
                InputHold::ZeroOrderHold => {
                    policy
                        .control(t, &self.x, &mut u)
                        .map_err(|e| Error::Propagation { t: t.as_f64(), reason: e.to_string() })?;
                    dynamics.saturate(&mut u);
                    check_finite(&u, t)?;
                    stepper.step_held(t, h, &mut self.x, &u, None)?;
                }
                InputHold::Continuous => {
                    stepper.step_continuous(t, h, &mut self.x, policy, &mut u)?;
                }
            }
            self.inputs.extend_from_slice(&u);
            self.states.extend_from_slice(&self.x);
        }
        Ok(())
    }

    /// Continues from the first `steps` steps of another segment's buffers.
    pub(crate) fn resume(state_dim: usize, input_dim: usize, states: &[S], inputs: &[S], steps: usize, extra: usize) -> Self {
        let mut st = Vec::with_capacity((steps + extra + 1) * state_dim);
        st.extend_from_slice(&states[..(steps + 1) * state_dim]);
        let mut inp = Vec::with_capacity((steps + extra) * input_dim);
        inp.extend_from_slice(&inputs[..steps * input_dim]);
        let x = st[steps * state_dim..].to_vec();
        Self { state_dim, input_dim, states: st, inputs: inp, x }
    }

    pub(crate) fn current(&self) -> &[S] {
        &self.x
    }

    /// Steps completed so far (kept even when a later step failed).
    pub(crate) fn steps(&self) -> usize {
        self.states.len() / self.state_dim - 1
    }

    pub(crate) fn states(&self) -> &[S] {
        &self.states
    }

    pub(crate) fn inputs(&self) -> &[S] {
        &self.inputs
    }

    pub(crate) fn finish(self, grid: TimeGrid<S>, switch_index: Option<usize>) -> Result<Trajectory<S>> {
        Trajectory::new(grid, self.state_dim, self.input_dim, self.states, self.inputs, switch_index)
    }
}

#[inline]
fn axpy<S: Scalar>(x: &[S], a: S, k: &[S], out: &mut [S]) {
    for ((o, &xi), &ki) in out.iter_mut().zip(x).zip(k) {
        *o = xi + a * ki;
    }
}

fn check_finite<S: Scalar>(x: &[S], t: S) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Propagation { t: t.as_f64(), reason: "non-finite state".into() })
    }
}

fn check_derivative<S: Scalar>(k: &[S], t: S) -> Result<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Propagation { t: t.as_f64(), reason: "non-finite derivative".into() })
    }
}
