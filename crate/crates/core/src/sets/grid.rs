use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Node-centred 2-D grid: node `(i, j)` sits at `origin + (i, j) * cell`.
/// Samples are stored row-major, `j * nx + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2<S> {
    pub origin: [S; 2],
    pub cell: S,
    pub nx: usize,
    pub ny: usize,
}

impl<S: Scalar> Grid2<S> {
    pub fn new(origin: [S; 2], cell: S, nx: usize, ny: usize) -> Result<Self> {
        if !(cell > S::zero()) {
            return Err(Error::Config(format!("cell size must be positive, got {cell}")));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::Config(format!("grid needs at least 2x2 nodes, got {nx}x{ny}")));
        }
        Ok(Self { origin, cell, nx, ny })
    }

    /// Square grid of side `extent` centred on the origin.
    pub fn centered(extent: S, cell: S) -> Result<Self> {
        let n = (extent / cell).round().to_usize().unwrap_or(0) + 1;
        let half = S::of_usize(n - 1) * cell / S::of(2.0);
        Self::new([-half, -half], cell, n, n)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> [S; 2] {
        [
            self.origin[0] + self.cell * S::of_usize(i),
            self.origin[1] + self.cell * S::of_usize(j),
        ]
    }

    #[inline]
    pub fn node_of(&self, idx: usize) -> [S; 2] {
        self.node(idx % self.nx, idx / self.nx)
    }

    pub fn max_corner(&self) -> [S; 2] {
        self.node(self.nx - 1, self.ny - 1)
    }

    /// Length of the grid diagonal.
    pub fn diagonal(&self) -> S {
        let c = self.max_corner();
        (c[0] - self.origin[0]).hypot(c[1] - self.origin[1])
    }

    /// Distance from `p` to the grid's bounding box (zero inside).
    pub fn outside_distance(&self, p: [S; 2]) -> S {
        let hi = self.max_corner();
        let dx = (self.origin[0] - p[0]).max(p[0] - hi[0]).max(S::zero());
        let dy = (self.origin[1] - p[1]).max(p[1] - hi[1]).max(S::zero());
        dx.hypot(dy)
    }

    pub fn clamp(&self, p: [S; 2]) -> [S; 2] {
        let hi = self.max_corner();
        [p[0].max(self.origin[0]).min(hi[0]), p[1].max(self.origin[1]).min(hi[1])]
    }

    /// Bilinear interpolation of `values` at `p`, or `None` outside the grid.
    pub fn bilinear(&self, values: &[S], p: [S; 2]) -> Option<S> {
        let fx = (p[0] - self.origin[0]) / self.cell;
        let fy = (p[1] - self.origin[1]) / self.cell;
        let mx = S::of_usize(self.nx - 1);
        let my = S::of_usize(self.ny - 1);
        if !(fx >= S::zero() && fy >= S::zero() && fx <= mx && fy <= my) {
            return None;
        }
        let i = fx.floor().to_usize()?.min(self.nx - 2);
        let j = fy.floor().to_usize()?.min(self.ny - 2);
        let ax = fx - S::of_usize(i);
        let ay = fy - S::of_usize(j);
        let v00 = values[self.index(i, j)];
        let v10 = values[self.index(i + 1, j)];
        let v01 = values[self.index(i, j + 1)];
        let v11 = values[self.index(i + 1, j + 1)];
        let b = v00 + (v10 - v00) * ax;
        let t = v01 + (v11 - v01) * ax;
        Some(b + (t - b) * ay)
    }

    /// Nearest node index to `p` (clamped into the grid).
    pub fn nearest(&self, p: [S; 2]) -> (usize, usize) {
        let q = self.clamp(p);
        let i = ((q[0] - self.origin[0]) / self.cell).round().to_usize().unwrap_or(0);
        let j = ((q[1] - self.origin[1]) / self.cell).round().to_usize().unwrap_or(0);
        (i.min(self.nx - 1), j.min(self.ny - 1))
    }

    pub fn same_layout(&self, other: &Grid2<S>) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_fields() {
        let g = Grid2::new([-1.0f64, 2.0], 0.5, 5, 4).unwrap();
        let vals: Vec<f64> = (0..g.len())
            .map(|k| {
                let p = g.node_of(k);
                3.0 * p[0] - 2.0 * p[1] + 1.0
            })
            .collect();
        for p in [[-1.0, 2.0], [0.3, 2.7], [1.0, 3.5], [-0.75, 3.1]] {
            let v = g.bilinear(&vals, p).unwrap();
            assert!((v - (3.0 * p[0] - 2.0 * p[1] + 1.0)).abs() < 1e-12);
        }
        assert!(g.bilinear(&vals, [1.01, 3.0]).is_none());
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = Grid2::centered(3000.0f64, 10.0).unwrap();
        assert_eq!(g.nx, 301);
        assert_eq!(g.origin, [-1500.0, -1500.0]);
        assert_eq!(g.max_corner(), [1500.0, 1500.0]);
        assert_eq!(g.nearest([0.0, 0.0]), (150, 150));
    }
}
