use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::TimeGrid;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// State trajectory on a uniform grid.
///
/// `states` holds `n_steps + 1` state vectors and `inputs` holds `n_steps`
/// input vectors, input `i` being held over `[t_i, t_{i+1})`. Storage is
/// flat, row-major. `switch_index` marks where the generating policy changed
/// from tracking to backup.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S> {
    grid: TimeGrid<S>,
    state_dim: usize,
    input_dim: usize,
    states: Vec<S>,
    inputs: Vec<S>,
    switch_index: Option<usize>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn new(
        grid: TimeGrid<S>,
        state_dim: usize,
        input_dim: usize,
        states: Vec<S>,
        inputs: Vec<S>,
        switch_index: Option<usize>,
    ) -> Result<Self> {
        let n = grid.n_steps();
        if state_dim == 0 {
            return Err(Error::Config("state dimension must be positive".into()));
        }
        if states.len() != (n + 1) * state_dim {
            return Err(Error::Config(format!(
                "expected {} state values, got {}",
                (n + 1) * state_dim,
                states.len()
            )));
        }
        if inputs.len() != n * input_dim {
            return Err(Error::Config(format!(
                "expected {} input values, got {}",
                n * input_dim,
                inputs.len()
            )));
        }
        if let Some(k) = switch_index {
            if k > n {
                return Err(Error::Config(format!("switch index {k} beyond {n} steps")));
            }
        }
        Ok(Self { grid, state_dim, input_dim, states, inputs, switch_index })
    }

    /// Builds a trajectory from per-step rows.
    pub fn from_rows(
        grid: TimeGrid<S>,
        states: &[Vec<S>],
        inputs: &[Vec<S>],
        switch_index: Option<usize>,
    ) -> Result<Self> {
        let sd = states.first().map_or(0, Vec::len);
        let id = inputs.first().map_or(0, Vec::len);
        if states.iter().any(|s| s.len() != sd) || inputs.iter().any(|u| u.len() != id) {
            return Err(Error::Config("ragged trajectory rows".into()));
        }
        Self::new(
            grid,
            sd,
            id,
            states.concat(),
            inputs.concat(),
            switch_index,
        )
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid<S> {
        &self.grid
    }

    #[inline]
    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    #[inline]
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    #[inline]
    pub fn switch_index(&self) -> Option<usize> {
        self.switch_index
    }

    pub fn switch_time(&self) -> Option<S> {
        self.switch_index.map(|k| self.grid.time(k))
    }

    #[inline]
    pub fn t_start(&self) -> S {
        self.grid.t_start()
    }

    #[inline]
    pub fn t_end(&self) -> S {
        self.grid.t_end()
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.grid.n_steps()
    }

    #[inline]
    pub fn state(&self, i: usize) -> &[S] {
        &self.states[i * self.state_dim..(i + 1) * self.state_dim]
    }

    #[inline]
    pub fn input(&self, i: usize) -> &[S] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }

    pub fn first_state(&self) -> &[S] {
        self.state(0)
    }

    pub fn last_state(&self) -> &[S] {
        self.state(self.n_steps())
    }

    pub fn states(&self) -> impl Iterator<Item = &[S]> {
        self.states.chunks_exact(self.state_dim)
    }

    /// Evaluates the state at `t` with linear interpolation between grid points.
    pub fn eval(&self, t: S) -> Result<Vec<S>> {
        let mut out = vec![S::zero(); self.state_dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    pub fn eval_into(&self, t: S, out: &mut [S]) -> Result<()> {
        let (i, frac) = self.grid.locate(t)?;
        let a = self.state(i);
        if frac == S::zero() {
            out.copy_from_slice(a);
        } else {
            let b = self.state(i + 1);
            for ((o, &x0), &x1) in out.iter_mut().zip(a).zip(b) {
                *o = x0 + (x1 - x0) * frac;
            }
        }
        Ok(())
    }

    /// Input held at `t` (zero-order hold); the final grid point reuses the
    /// last input.
    pub fn input_at(&self, t: S) -> Result<&[S]> {
        let (i, _) = self.grid.locate(t)?;
        Ok(self.input(i.min(self.n_steps() - 1)))
    }

    /// Appends a trajectory that starts where this one ends. The first state
    /// of `tail` is dropped in favour of this trajectory's last state.
    pub fn concat(&self, tail: &Trajectory<S>) -> Result<Trajectory<S>> {
        if tail.state_dim != self.state_dim || tail.input_dim != self.input_dim {
            return Err(Error::Config("dimension mismatch in concatenation".into()));
        }
        let dt = self.grid.dt();
        if (tail.grid.dt() - dt).abs() > dt * S::grid_snap()
            || (tail.t_start() - self.t_end()).abs() > dt * S::grid_snap()
        {
            return Err(Error::Config("concatenated segments are not contiguous".into()));
        }
        let n = self.n_steps() + tail.n_steps();
        let grid = TimeGrid::new(self.t_start(), dt, n)?;
        let mut states = self.states.clone();
        states.extend_from_slice(&tail.states[self.state_dim..]);
        let mut inputs = self.inputs.clone();
        inputs.extend_from_slice(&tail.inputs);
        let switch_index = self
            .switch_index
            .or_else(|| tail.switch_index.map(|k| k + self.n_steps()));
        Trajectory::new(grid, self.state_dim, self.input_dim, states, inputs, switch_index)
    }

    /// Writes the CSV form `t,x0,..,u0,..,switch_index`. The final row has
    /// blank inputs; `switch_index` is repeated on every row, or blank.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut header = String::from("t");
        for i in 0..self.state_dim {
            write!(header, ",x{i}").ok();
        }
        for i in 0..self.input_dim {
            write!(header, ",u{i}").ok();
        }
        header.push_str(",switch_index");
        writeln!(w, "{header}")?;
        let sw = self.switch_index.map(|k| k.to_string()).unwrap_or_default();
        for i in 0..=self.n_steps() {
            let mut line = format!("{}", self.grid.time(i));
            for x in self.state(i) {
                write!(line, ",{x}").ok();
            }
            for j in 0..self.input_dim {
                if i < self.n_steps() {
                    write!(line, ",{}", self.input(i)[j]).ok();
                } else {
                    line.push(',');
                }
            }
            write!(line, ",{sw}").ok();
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Parses the CSV form produced by [`Trajectory::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty trajectory file".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.first() != Some(&"t") || cols.last() != Some(&"switch_index") {
            return Err(Error::Parse(format!("bad trajectory header: {header}")));
        }
        let state_dim = cols.iter().filter(|c| c.starts_with('x')).count();
        let input_dim = cols.iter().filter(|c| c.starts_with('u')).count();
        let mut times = Vec::new();
        let mut states = Vec::new();
        let mut inputs = Vec::new();
        let mut switch_index = None;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != cols.len() {
                return Err(Error::Parse(format!("bad row: {line}")));
            }
            times.push(parse::<S>(f[0])?);
            for v in &f[1..=state_dim] {
                states.push(parse::<S>(v)?);
            }
            let ins = &f[1 + state_dim..1 + state_dim + input_dim];
            if ins.iter().all(|v| !v.is_empty()) {
                for v in ins {
                    inputs.push(parse::<S>(v)?);
                }
            }
            let sw = f[cols.len() - 1].trim();
            if !sw.is_empty() {
                switch_index =
                    Some(sw.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?);
            }
        }
        if times.len() < 2 {
            return Err(Error::Parse("trajectory needs at least two rows".into()));
        }
        let n = times.len() - 1;
        let dt = (times[n] - times[0]) / S::of_usize(n);
        let grid = TimeGrid::new(times[0], dt, n)?;
        Trajectory::new(grid, state_dim, input_dim, states, inputs, switch_index)
    }
}

pub(crate) fn parse<S: Scalar>(s: &str) -> Result<S> {
    s.trim()
        .parse::<S>()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}
