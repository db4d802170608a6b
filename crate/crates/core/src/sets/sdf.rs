use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::edt::distance_to_seeds;
use super::grid::Grid2;
use super::TimeVaryingSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CellState {
    Free,
    Burning,
    Unknown,
}

impl CellState {
    /// Burning and unknown cells are both treated as unsafe.
    #[inline]
    pub fn is_blocked(self) -> bool {
        !matches!(self, CellState::Free)
    }
}

/// A thermal measurement: per-node cell states stamped with a time.
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmask<S> {
    grid: Grid2<S>,
    cells: Vec<CellState>,
    t: S,
}

impl<S: Scalar> Bitmask<S> {
    pub fn new(grid: Grid2<S>, cells: Vec<CellState>, t: S) -> Result<Self> {
        if cells.len() != grid.len() {
            return Err(Error::Config(format!(
                "bitmask has {} cells, grid needs {}",
                cells.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, cells, t })
    }

    pub fn from_fn(grid: Grid2<S>, t: S, mut f: impl FnMut([S; 2]) -> CellState) -> Self {
        let cells = (0..grid.len()).map(|k| f(grid.node_of(k))).collect();
        Self { grid, cells, t }
    }

    pub fn grid(&self) -> &Grid2<S> {
        &self.grid
    }

    pub fn cells(&self) -> &[CellState] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [CellState] {
        &mut self.cells
    }

    pub fn t(&self) -> S {
        self.t
    }

    pub fn get(&self, i: usize, j: usize) -> CellState {
        self.cells[self.grid.index(i, j)]
    }

    pub fn count(&self, state: CellState) -> usize {
        self.cells.iter().filter(|&&c| c == state).count()
    }
}

/// Perceived safe set: a signed distance grid sampled at `t_meas`, shrunk
/// over time at the worst-case spread rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfForecastSet<S> {
    grid: Grid2<S>,
    phi0: Vec<S>,
    t_meas: S,
    spread_max: S,
}

impl<S: Scalar> SdfForecastSet<S> {
    pub fn new(grid: Grid2<S>, phi0: Vec<S>, t_meas: S, spread_max: S) -> Result<Self> {
        if phi0.len() != grid.len() {
            return Err(Error::Config(format!("sdf has {} samples, grid needs {}", phi0.len(), grid.len())));
        }
        if !(spread_max >= S::zero()) || !t_meas.is_finite() {
            return Err(Error::Config("spread rate must be non-negative and t_meas finite".into()));
        }
        if phi0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sdf samples must be finite".into()));
        }
        Ok(Self { grid, phi0, t_meas, spread_max })
    }

    pub fn grid(&self) -> &Grid2<S> {
        &self.grid
    }

    pub fn phi0(&self) -> &[S] {
        &self.phi0
    }

    pub fn t_meas(&self) -> S {
        self.t_meas
    }

    pub fn spread_max(&self) -> S {
        self.spread_max
    }

    pub fn with_spread_max(mut self, spread_max: S) -> Self {
        self.spread_max = spread_max;
        self
    }

    /// Field value at the measurement time. Points within one cell outside
    /// the grid are extrapolated conservatively; anything further is
    /// unsafe (`-inf`).
    pub fn value_at_measurement(&self, p: [S; 2]) -> S {
        if let Some(v) = self.grid.bilinear(&self.phi0, p) {
            return v;
        }
        let out = self.grid.outside_distance(p);
        if !(out <= self.grid.cell) {
            return S::neg_infinity();
        }
        self.grid.bilinear(&self.phi0, self.grid.clamp(p)).map_or(S::neg_infinity(), |v| v - out)
    }

    /// Central-difference gradient of the interpolated field.
    pub fn gradient(&self, p: [S; 2]) -> Option<[S; 2]> {
        let h = self.grid.cell * S::of(0.5);
        let f = |q: [S; 2]| self.grid.bilinear(&self.phi0, self.grid.clamp(q));
        let gx = (f([p[0] + h, p[1]])? - f([p[0] - h, p[1]])?) / (h + h);
        let gy = (f([p[0], p[1] + h])? - f([p[0], p[1] - h])?) / (h + h);
        Some([gx, gy])
    }

    /// Smallest and largest sample.
    pub fn range(&self) -> (S, S) {
        self.phi0
            .iter()
            .fold((S::infinity(), S::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

impl<S: Scalar> TimeVaryingSet<S> for SdfForecastSet<S> {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        if t < self.t_meas {
            return Err(Error::BeforeMeasurement { t: t.as_f64(), t_meas: self.t_meas.as_f64() });
        }
        Ok(self.value_at_measurement(p) - self.spread_max * (t - self.t_meas))
    }
}

/// Signed distance field from a measurement, positive in free space.
///
/// Free nodes get their distance to the nearest non-free node minus one
/// cell, and nodes within a cell diagonal of a non-free node are pinned to
/// zero. Every grid cell that touches a non-free node is therefore
/// non-positive everywhere under bilinear interpolation, so the perceived
/// set never claims a point whose cell could contain fire.
pub fn build_sdf_from_bitmask<S: Scalar>(mask: &Bitmask<S>, spread_max: S) -> Result<SdfForecastSet<S>> {
    let g = *mask.grid();
    let cells = mask.cells();
    if !cells.iter().any(|c| !c.is_blocked()) {
        return Err(Error::EmptySafeSet);
    }
    let phi = match distance_to_seeds::<S>(g.nx, g.ny, |k| cells[k].is_blocked()) {
        None => vec![g.diagonal(); g.len()],
        Some(d_out) => {
            let d_in = distance_to_seeds::<S>(g.nx, g.ny, |k| !cells[k].is_blocked())
                .expect("at least one free node");
            let two = S::of(2.0);
            (0..g.len())
                .map(|k| {
                    if cells[k].is_blocked() {
                        -d_in[k] * g.cell
                    } else if d_out[k] < two {
                        S::zero()
                    } else {
                        (d_out[k] - S::one()) * g.cell
                    }
                })
                .collect()
        }
    };
    SdfForecastSet::new(g, phi, mask.t(), spread_max)
}

/// Outcome of a Monte Carlo nesting check.
#[derive(Debug, Clone, PartialEq)]
pub enum NestingReport<S> {
    Holds { samples: usize },
    Violated { p: [S; 2], t: S, older: S, newer: S },
}

impl<S> NestingReport<S> {
    pub fn holds(&self) -> bool {
        matches!(self, NestingReport::Holds { .. })
    }
}

/// Samples points of the older set (over `[newer.t_meas, newer.t_meas + horizon]`)
/// and checks they also belong to the newer one.
pub fn check_nesting<S: Scalar, A: TimeVaryingSet<S>, B: TimeVaryingSet<S>>(
    older: &A,
    newer: &B,
    bounds: ([S; 2], [S; 2]),
    times: (S, S),
    samples: usize,
    seed: u64,
) -> Result<NestingReport<S>> {
    if !(times.0 <= times.1) {
        return Err(Error::Domain("nesting check needs an ordered time window".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = |lo: S, hi: S| lo + (hi - lo) * S::of(rng.gen::<f64>());
    let (lo, hi) = bounds;
    for _ in 0..samples {
        let p = [u(lo[0], hi[0]), u(lo[1], hi[1])];
        let t = u(times.0, times.1);
        let a = older.signed_distance(p, t)?;
        if a >= S::zero() {
            let b = newer.signed_distance(p, t)?;
            if b < S::zero() {
                return Ok(NestingReport::Violated { p, t, older: a, newer: b });
            }
        }
    }
    Ok(NestingReport::Holds { samples })
}

impl<S: Scalar> SdfForecastSet<S> {
    /// Nesting check against a later snapshot over the overlap of both grids.
    pub fn nested_in(&self, newer: &SdfForecastSet<S>, horizon: S, samples: usize, seed: u64) -> Result<NestingReport<S>> {
        if !(self.t_meas < newer.t_meas) {
            return Err(Error::Domain("older snapshot must predate the newer one".into()));
        }
        let (a, b) = (self.grid, newer.grid);
        let lo = [a.origin[0].max(b.origin[0]), a.origin[1].max(b.origin[1])];
        let (ha, hb) = (a.max_corner(), b.max_corner());
        let hi = [ha[0].min(hb[0]), ha[1].min(hb[1])];
        if !(lo[0] < hi[0] && lo[1] < hi[1]) {
            return Err(Error::Domain("snapshots do not overlap".into()));
        }
        check_nesting(self, newer, (lo, hi), (newer.t_meas, newer.t_meas + horizon), samples, seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{erode, AnalyticDiskComplement};
    use proptest::prelude::{prop_assert, proptest};

    fn disk_mask(radius: f64, cell: f64, extent: f64, t: f64) -> Bitmask<f64> {
        let g = Grid2::centered(extent, cell).unwrap();
        Bitmask::from_fn(g, t, |p| {
            if p[0].hypot(p[1]) <= radius {
                CellState::Burning
            } else {
                CellState::Free
            }
        })
    }

    #[test]
    fn forecast_examples() {
        let g = Grid2::new([0.0f64, 0.0], 10.0, 3, 3).unwrap();
        let s = SdfForecastSet::new(g, vec![50.0; 9], 100.0, 8.0 / 3.6).unwrap();
        assert!(s.contains([10.0, 10.0], 100.0, 0.0).unwrap());
        assert!(!s.contains([10.0, 10.0], 130.0, 0.0).unwrap());
        assert!((s.signed_distance([10.0, 10.0], 130.0).unwrap() - (50.0 - 30.0 * 8.0 / 3.6)).abs() < 1e-12);
        assert!(matches!(s.signed_distance([10.0, 10.0], 99.0), Err(Error::BeforeMeasurement { .. })));
        // Outside the padded grid is unsafe, not an error.
        assert!(!s.contains([100.0, 10.0], 100.0, -1e9).unwrap());
        assert!(s.contains([25.0, 10.0], 100.0, 0.0).unwrap());
    }

    #[test]
    fn single_burning_cell() {
        let g = Grid2::centered(100.0f64, 10.0).unwrap();
        let mask = Bitmask::from_fn(g, 0.0, |p| {
            if p[0].abs() < 1e-9 && p[1].abs() < 1e-9 {
                CellState::Burning
            } else {
                CellState::Free
            }
        });
        let s = build_sdf_from_bitmask(&mask, 0.0).unwrap();
        let v = s.signed_distance([30.0, 0.0], 0.0).unwrap();
        assert!((v - 30.0).abs() <= 10.0 * 2f64.sqrt(), "{v}");
        assert!(s.signed_distance([0.0, 0.0], 0.0).unwrap() < 0.0);
    }

    #[test]
    fn disk_distance() {
        let mask = disk_mask(500.0, 10.0, 1600.0, 0.0);
        let s = build_sdf_from_bitmask(&mask, 0.0).unwrap();
        let v = s.signed_distance([600.0, 0.0], 0.0).unwrap();
        assert!((v - 100.0).abs() <= 10.0, "{v}");
        let v = s.signed_distance([0.0, -700.0], 0.0).unwrap();
        assert!((v - 200.0).abs() <= 10.0, "{v}");
        assert!(s.signed_distance([0.0, 0.0], 0.0).unwrap() < -400.0);
    }

    #[test]
    fn degenerate_masks() {
        let g = Grid2::centered(100.0f64, 10.0).unwrap();
        let all_fire = Bitmask::from_fn(g, 0.0, |_| CellState::Burning);
        assert_eq!(build_sdf_from_bitmask(&all_fire, 1.0), Err(Error::EmptySafeSet));
        let unknown = Bitmask::from_fn(g, 0.0, |_| CellState::Unknown);
        assert_eq!(build_sdf_from_bitmask(&unknown, 1.0), Err(Error::EmptySafeSet));
        let clear = Bitmask::from_fn(g, 0.0, |_| CellState::Free);
        let s = build_sdf_from_bitmask(&clear, 1.0).unwrap();
        assert!(s.phi0().iter().all(|&v| v >= g.diagonal()));
    }

    #[test]
    fn cells_touching_fire_are_never_perceived_safe() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid2::new([0.0f64, 0.0], 10.0, 30, 25).unwrap();
        let mask = Bitmask::from_fn(g, 0.0, |_| if rng.gen_bool(0.05) { CellState::Burning } else { CellState::Free });
        let s = build_sdf_from_bitmask(&mask, 0.0).unwrap();
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let corners = [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)];
                if corners.iter().any(|&(a, b)| mask.get(a, b).is_blocked()) {
                    for &(fx, fy) in &[(0.5, 0.5), (0.1, 0.9), (0.0, 0.3), (1.0, 1.0)] {
                        let p = [(i as f64 + fx) * 10.0, (j as f64 + fy) * 10.0];
                        assert!(s.signed_distance(p, 0.0).unwrap() <= 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn unknown_counts_as_fire() {
        let g = Grid2::centered(200.0f64, 10.0).unwrap();
        let mask = Bitmask::from_fn(g, 0.0, |p| if p[0] > 50.0 { CellState::Unknown } else { CellState::Free });
        let s = build_sdf_from_bitmask(&mask, 0.0).unwrap();
        assert!(s.signed_distance([60.0, 0.0], 0.0).unwrap() < 0.0);
        assert!(s.signed_distance([0.0, 0.0], 0.0).unwrap() > 30.0);
    }

    #[test]
    fn erosion_equals_margin_shift() {
        let s = build_sdf_from_bitmask(&disk_mask(300.0, 10.0, 1000.0, 5.0), 2.0).unwrap();
        let e = erode(&s, 37.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let p = [rng.gen_range(-520.0..520.0), rng.gen_range(-520.0..520.0)];
            let t = rng.gen_range(5.0..60.0);
            assert_eq!(e.contains(p, t, 0.0).unwrap(), s.contains(p, t, 37.5).unwrap());
        }
    }

    #[test]
    fn appendix_perceived_set_matches_closed_form() {
        // B_k(t) = {|p| >= r_k + 2 (t - t_k)} represented analytically.
        let (r_k, t_k) = (100.0, 3.0);
        let b = AnalyticDiskComplement::new([0.0, 0.0], super::super::linear_growth(r_k, t_k, 2.0));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let p = [rng.gen_range(-400.0..400.0), rng.gen_range(-400.0..400.0)];
            let t = rng.gen_range(t_k..t_k + 100.0);
            let closed: bool = (p[0] as f64).hypot(p[1]) >= r_k + 2.0 * (t - t_k);
            assert_eq!(b.contains(p, t, 0.0).unwrap(), closed);
        }
    }

    #[test]
    fn nesting_examples() {
        let older = build_sdf_from_bitmask(&disk_mask(300.0, 10.0, 1000.0, 0.0), 2.0).unwrap();
        let mut same_later = older.clone();
        same_later.t_meas = 10.0;
        assert!(older.nested_in(&same_later, 60.0, 2000, 1).unwrap().holds());

        // Newer claims the fire is smaller than it could possibly have become.
        let shrunk = build_sdf_from_bitmask(&disk_mask(200.0, 10.0, 1000.0, 10.0), 2.0).unwrap();
        let grown = build_sdf_from_bitmask(&disk_mask(400.0, 10.0, 1000.0, 10.0), 2.0).unwrap();
        assert!(older.nested_in(&shrunk, 60.0, 2000, 1).unwrap().holds());
        match older.nested_in(&grown, 60.0, 20_000, 1).unwrap() {
            NestingReport::Violated { older, newer, .. } => assert!(older >= 0.0 && newer < 0.0),
            r => panic!("expected violation, got {r:?}"),
        }
        assert!(same_later.nested_in(&older, 1.0, 10, 1).is_err());
    }

    #[test]
    fn analytic_nesting_with_bounded_growth() {
        let b_k = AnalyticDiskComplement::new([0.0, 0.0], super::super::linear_growth(100.0, 0.0, 2.0));
        let b_k1 = AnalyticDiskComplement::new([0.0, 0.0], super::super::linear_growth(115.0, 10.0, 2.0));
        let r = check_nesting(&b_k, &b_k1, ([-500.0, -500.0], [500.0, 500.0]), (10.0, 200.0), 5000, 2).unwrap();
        assert!(r.holds());
    }

    proptest! {
        #[test]
        fn forecast_shrinks_over_time(px in -480.0f64..480.0, py in -480.0f64..480.0,
                                      t1 in 0.0f64..100.0, dt in 0.0f64..100.0, m in -50.0f64..50.0) {
            let s = build_sdf_from_bitmask(&disk_mask(250.0, 20.0, 1000.0, 0.0), 2.2).unwrap();
            if s.contains([px, py], t1 + dt, m).unwrap() {
                prop_assert!(s.contains([px, py], t1, m).unwrap());
            }
        }

        #[test]
        fn sdf_is_lipschitz_up_to_interpolation(ax in -480.0f64..480.0, ay in -480.0f64..480.0,
                                                bx in -480.0f64..480.0, by in -480.0f64..480.0) {
            let s = build_sdf_from_bitmask(&disk_mask(250.0, 20.0, 1000.0, 0.0), 0.0).unwrap();
            let da = s.signed_distance([ax, ay], 0.0).unwrap();
            let db = s.signed_distance([bx, by], 0.0).unwrap();
            let d = (ax - bx).hypot(ay - by);
            prop_assert!((da - db).abs() <= d + 2.0 * 20.0 * 2f64.sqrt());
        }
    }
}
