use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Uniform time grid `t_start + i * dt`, `i = 0..=n_steps`.
///
/// Grid times are computed multiplicatively so there is no accumulated drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<S> {
    t_start: S,
    dt: S,
    n_steps: usize,
}

impl<S: Scalar> TimeGrid<S> {
    pub fn new(t_start: S, dt: S, n_steps: usize) -> Result<Self> {
        if !(dt > S::zero()) || !dt.is_finite() {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if n_steps == 0 {
            return Err(Error::Config("time grid needs at least one step".into()));
        }
        if !t_start.is_finite() {
            return Err(Error::Config("non-finite grid start".into()));
        }
        Ok(Self { t_start, dt, n_steps })
    }

    /// Grid spanning `[t_start, t_start + duration]`; `duration` must be a
    /// whole multiple of `dt`.
    pub fn spanning(t_start: S, duration: S, dt: S) -> Result<Self> {
        let n = steps_in(duration, dt)?;
        Self::new(t_start, dt, n)
    }

    #[inline]
    pub fn t_start(&self) -> S {
        self.t_start
    }

    #[inline]
    pub fn dt(&self) -> S {
        self.dt
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    #[inline]
    pub fn time(&self, i: usize) -> S {
        self.t_start + self.dt * S::of_usize(i)
    }

    #[inline]
    pub fn t_end(&self) -> S {
        self.time(self.n_steps)
    }

    pub fn contains(&self, t: S) -> bool {
        self.locate(t).is_ok()
    }

    /// Returns `(i, frac)` with `t = time(i) + frac * dt`, `0 <= frac < 1`,
    /// except at the final grid point where `(n_steps, 0)` is returned.
    /// Times within a relative snap tolerance of a grid point land on it.
    pub fn locate(&self, t: S) -> Result<(usize, S)> {
        let s = (t - self.t_start) / self.dt;
        let n = S::of_usize(self.n_steps);
        let tol = S::grid_snap();
        if !s.is_finite() || s < -tol || s > n + tol {
            return Err(Error::OutOfRange {
                t: t.as_f64(),
                start: self.t_start.as_f64(),
                end: self.t_end().as_f64(),
            });
        }
        let r = s.round();
        if (s - r).abs() <= tol {
            let i = r.max(S::zero()).to_usize().unwrap_or(0).min(self.n_steps);
            return Ok((i, S::zero()));
        }
        let i = s.floor().max(S::zero()).to_usize().unwrap_or(0);
        if i >= self.n_steps {
            return Ok((self.n_steps, S::zero()));
        }
        Ok((i, s - S::of_usize(i)))
    }

    /// Index of the grid point at `t`, if `t` is (within tolerance) a grid time.
    pub fn index_of(&self, t: S) -> Option<usize> {
        match self.locate(t) {
            Ok((i, f)) if f == S::zero() => Some(i),
            _ => None,
        }
    }
}

/// Number of whole `dt` steps in `duration`; errors if not grid aligned.
pub(crate) fn steps_in<S: Scalar>(duration: S, dt: S) -> Result<usize> {
    if !(dt > S::zero()) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if duration < S::zero() || !duration.is_finite() {
        return Err(Error::Config(format!("duration must be non-negative, got {duration}")));
    }
    let s = duration / dt;
    let r = s.round();
    if (s - r).abs() > S::grid_snap() {
        return Err(Error::Config(format!(
            "duration {duration} is not a multiple of dt {dt}"
        )));
    }
    Ok(r.to_usize().unwrap_or(0))
}
