use rayon::prelude::*;

use super::redistance::redistance;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::sets::Grid2;

/// Level-set fire: `phi <= 0` is burning. Evolves by
/// `phi_t + sigma |grad phi| = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FireField<S> {
    grid: Grid2<S>,
    phi: Vec<S>,
    sigma: Vec<S>,
    sigma_max: S,
    t: S,
    reinit_every: usize,
    since_reinit: usize,
}

impl<S: Scalar> FireField<S> {
    pub fn new(grid: Grid2<S>, phi: Vec<S>, sigma: Vec<S>, sigma_max: S, t: S) -> Result<Self> {
        if phi.len() != grid.len() || sigma.len() != grid.len() {
            return Err(Error::Config("fire field arrays must match the grid".into()));
        }
        if sigma.iter().any(|&s| !(s >= S::zero() && s <= sigma_max)) {
            return Err(Error::Config(format!("rate of spread must lie in [0, {sigma_max}]")));
        }
        if phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("level set must be finite".into()));
        }
        Ok(Self { grid, phi, sigma, sigma_max, t, reinit_every: 20, since_reinit: 0 })
    }

    /// Fire occupying `burning(p) <= 0` of a level function sampled on the
    /// grid, then redistanced.
    pub fn from_level(grid: Grid2<S>, level: impl Fn([S; 2]) -> S, sigma: Vec<S>, sigma_max: S) -> Result<Self> {
        let mut phi: Vec<S> = (0..grid.len()).map(|k| level(grid.node_of(k))).collect();
        redistance(&grid, &mut phi);
        Self::new(grid, phi, sigma, sigma_max, S::zero())
    }

    pub fn with_reinit_every(mut self, steps: usize) -> Self {
        self.reinit_every = steps;
        self
    }

    pub fn grid(&self) -> &Grid2<S> {
        &self.grid
    }

    pub fn phi(&self) -> &[S] {
        &self.phi
    }

    pub fn sigma(&self) -> &[S] {
        &self.sigma
    }

    pub fn sigma_max(&self) -> S {
        self.sigma_max
    }

    pub fn t(&self) -> S {
        self.t
    }

    /// One first-order Godunov upwind step. Redistances every
    /// `reinit_every` steps (0 disables). A field with zero spread
    /// everywhere is left untouched.
    pub fn step(&mut self, dt: S) -> Result<()> {
        if !(dt > S::zero()) || self.sigma_max * dt > self.grid.cell * S::of(0.5) {
            return Err(Error::Config(format!(
                "CFL violated: sigma_max * dt = {} exceeds half a cell ({})",
                self.sigma_max * dt,
                self.grid.cell * S::of(0.5)
            )));
        }
        if self.sigma_max == S::zero() {
            self.t += dt;
            return Ok(());
        }
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.cell);
        let phi = &self.phi;
        let sigma = &self.sigma;
        let mut next = vec![S::zero(); phi.len()];
        next.par_chunks_mut(nx).enumerate().for_each(|(j, row)| {
            for i in 0..nx {
                let k = j * nx + i;
                let v = phi[k];
                let s = sigma[k];
                if s == S::zero() {
                    row[i] = v;
                    continue;
                }
                let w = if i > 0 { phi[k - 1] } else { v };
                let e = if i + 1 < nx { phi[k + 1] } else { v };
                let so = if j > 0 { phi[k - nx] } else { v };
                let no = if j + 1 < ny { phi[k + nx] } else { v };
                let dxm = (v - w) / h;
                let dxp = (e - v) / h;
                let dym = (v - so) / h;
                let dyp = (no - v) / h;
                let z = S::zero();
                let gx = dxm.max(z).powi(2).max(dxp.min(z).powi(2));
                let gy = dym.max(z).powi(2).max(dyp.min(z).powi(2));
                row[i] = v - dt * s * (gx + gy).sqrt();
            }
        });
        self.phi = next;
        self.t += dt;
        self.since_reinit += 1;
        if self.reinit_every > 0 && self.since_reinit >= self.reinit_every {
            self.redistance();
        }
        Ok(())
    }

    /// Steps until `t_end`, with steps no longer than `dt`.
    pub fn advance_to(&mut self, t_end: S, dt: S) -> Result<()> {
        let tol = dt * S::of(1e-9);
        while self.t + tol < t_end {
            let h = dt.min(t_end - self.t);
            self.step(h)?;
        }
        Ok(())
    }

    pub fn redistance(&mut self) {
        redistance(&self.grid, &mut self.phi);
        self.since_reinit = 0;
    }

    /// Interpolated level value at `p` (positive is safe).
    pub fn true_distance(&self, p: [S; 2]) -> Result<S> {
        self.grid
            .bilinear(&self.phi, p)
            .ok_or_else(|| Error::Domain(format!("point ({}, {}) outside the fire grid", p[0], p[1])))
    }

    pub fn is_burning_node(&self, k: usize) -> bool {
        self.phi[k] <= S::zero()
    }

    pub fn burning_area(&self) -> S {
        let n = self.phi.iter().filter(|&&v| v <= S::zero()).count();
        S::of_usize(n) * self.grid.cell * self.grid.cell
    }

    /// Distance from `origin` along `angle` to the first zero crossing of
    /// the interpolated front, scanning outward from a burning origin.
    pub fn front_distance_along(&self, origin: [S; 2], angle: S, max: S) -> Option<S> {
        let step = self.grid.cell * S::of(0.05);
        let (c, s) = (angle.cos(), angle.sin());
        let at = |r: S| self.grid.bilinear(&self.phi, [origin[0] + r * c, origin[1] + r * s]);
        let mut prev_r = S::zero();
        let mut prev = at(prev_r)?;
        let mut r = step;
        while r <= max {
            let v = at(r)?;
            if (prev <= S::zero()) != (v <= S::zero()) {
                return Some(prev_r + step * prev.abs() / (prev - v).abs());
            }
            prev = v;
            prev_r = r;
            r += step;
        }
        None
    }

    /// Zero-crossing points along grid edges (plot data for front contours).
    pub fn front_points(&self) -> Vec<[S; 2]> {
        let g = &self.grid;
        let mut out = Vec::new();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let k = g.index(i, j);
                let a = self.phi[k];
                let mut edge = |b: S, di: S, dj: S| {
                    if (a > S::zero()) != (b > S::zero()) {
                        let f = a / (a - b);
                        let p = g.node(i, j);
                        out.push([p[0] + f * di * g.cell, p[1] + f * dj * g.cell]);
                    }
                };
                if i + 1 < g.nx {
                    edge(self.phi[k + 1], S::one(), S::zero());
                }
                if j + 1 < g.ny {
                    edge(self.phi[k + g.nx], S::zero(), S::one());
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(extent: f64, cell: f64, r0: f64, sigma: impl Fn([f64; 2]) -> f64, sigma_max: f64) -> FireField<f64> {
        let g = Grid2::centered(extent, cell).unwrap();
        let s = (0..g.len()).map(|k| sigma(g.node_of(k))).collect();
        FireField::from_level(g, |p| p[0].hypot(p[1]) - r0, s, sigma_max).unwrap()
    }

    #[test]
    fn constant_speed_circle_expands_linearly() {
        let c = 8.0 / 3.6;
        let mut f = circle(4000.0, 10.0, 500.0, |_| c, c);
        f.advance_to(600.0, 2.0).unwrap();
        let expected = 500.0 + c * 600.0;
        for a in 0..16 {
            let ang = a as f64 * std::f64::consts::TAU / 16.0;
            let r = f.front_distance_along([0.0, 0.0], ang, 3000.0).unwrap();
            assert!((r - expected).abs() <= 20.0, "angle {ang}: {r} vs {expected}");
        }
    }

    #[test]
    fn zero_speed_freezes_front() {
        let mut f = circle(400.0, 10.0, 100.0, |_| 0.0, 1.0);
        let before = f.phi().to_vec();
        for _ in 0..10 {
            f.step(1.0).unwrap();
        }
        assert_eq!(f.phi(), &before[..]);
    }

    #[test]
    fn fast_sector_outruns_slow_sector() {
        let mut f = circle(1600.0, 10.0, 200.0, |p| if p[0] > 0.0 { 2.0 } else { 0.5 }, 2.0);
        f.advance_to(200.0, 2.0).unwrap();
        let east = f.front_distance_along([0.0, 0.0], 0.0, 800.0).unwrap();
        let west = f.front_distance_along([0.0, 0.0], std::f64::consts::PI, 800.0).unwrap();
        assert!(east > west + 100.0, "{east} vs {west}");
    }

    #[test]
    fn cfl_is_enforced() {
        let mut f = circle(400.0, 10.0, 100.0, |_| 3.0, 3.0);
        assert!(matches!(f.step(2.0), Err(Error::Config(_))));
        assert!(f.step(1.0).is_ok());
    }

    #[test]
    fn burning_region_never_shrinks() {
        let mut f = circle(1000.0, 10.0, 150.0, |p| 0.5 + 0.4 * (p[0] / 97.0).sin(), 0.9);
        let mut prev = f.phi().to_vec();
        for n in 0..45 {
            f.step(2.0).unwrap();
            if (n + 1) % 20 != 0 {
                for (a, b) in f.phi().iter().zip(&prev) {
                    assert!(a <= b);
                }
            }
            for (k, &b) in prev.iter().enumerate() {
                if b <= 0.0 {
                    assert!(f.is_burning_node(k));
                }
            }
            prev = f.phi().to_vec();
        }
    }

    #[test]
    fn reinit_keeps_front_within_a_cell() {
        let mut f = circle(1000.0, 10.0, 200.0, |p| 0.5 + 0.3 * (p[1] / 130.0).cos(), 0.8);
        f = f.with_reinit_every(0);
        for _ in 0..30 {
            f.step(2.0).unwrap();
        }
        let before: Vec<f64> = (0..16).map(|a| f.front_distance_along([0.0, 0.0], a as f64 * 0.39, 600.0).unwrap()).collect();
        f.redistance();
        for (a, r0) in before.iter().enumerate() {
            let r1 = f.front_distance_along([0.0, 0.0], a as f64 * 0.39, 600.0).unwrap();
            assert!((r1 - r0).abs() <= 10.0);
        }
    }

    #[test]
    fn true_distance_examples() {
        let r0 = 16000.0 / std::f64::consts::TAU;
        let f = circle(7000.0, 10.0, r0, |_| 1.0, 1.0);
        let d = f.true_distance([3000.0, 0.0]).unwrap();
        assert!((d - (3000.0 - r0)).abs() <= 10.0, "{d}");
        assert!((d - 454.0).abs() <= 10.0);
        assert!(f.true_distance([r0, 0.0]).unwrap().abs() <= 10.0);
        assert!(f.true_distance([0.0, 100.0]).unwrap() < 0.0);
        assert!(f.true_distance([4000.0, 0.0]).is_err());
    }
}
