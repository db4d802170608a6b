use crate::error::{Error, Result};
use crate::sets::{build_sdf_from_bitmask, Bitmask, Grid2, SdfForecastSet};

/// Fuses windowed thermal images into one perceived signed distance field.
///
/// Each image gives a sound lower bound on the distance to the fire at its
/// own time (unseen nodes count as burning). Older bounds stay valid after
/// shrinking at the assumed spread rate, so the memory keeps the pointwise
/// maximum of all of them.
#[derive(Debug, Clone)]
pub struct PerceptionMemory {
    grid: Grid2<f64>,
    spread: f64,
    phi: Vec<f64>,
    t: f64,
    images: usize,
}

impl PerceptionMemory {
    pub fn new(grid: Grid2<f64>, spread: f64) -> Self {
        Self { grid, spread, phi: vec![f64::NEG_INFINITY; grid.len()], t: f64::NEG_INFINITY, images: 0 }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn images(&self) -> usize {
        self.images
    }

    pub fn update(&mut self, mask: &Bitmask<f64>) -> Result<()> {
        if !mask.grid().same_layout(&self.grid) {
            return Err(Error::Config("image grid differs from the memory grid".into()));
        }
        if self.images > 0 && mask.t() < self.t {
            return Err(Error::BeforeMeasurement { t: mask.t(), t_meas: self.t });
        }
        let decay = if self.images == 0 { 0.0 } else { self.spread * (mask.t() - self.t) };
        match build_sdf_from_bitmask(mask, self.spread) {
            Ok(fresh) => {
                for (m, &f) in self.phi.iter_mut().zip(fresh.phi0()) {
                    *m = (*m - decay).max(f);
                }
            }
            // Nothing free in view: only the aged memory remains.
            Err(Error::EmptySafeSet) => self.phi.iter_mut().for_each(|m| *m -= decay),
            Err(e) => return Err(e),
        }
        self.t = mask.t();
        self.images += 1;
        Ok(())
    }

    /// Perceived set as of the latest image.
    pub fn forecast(&self) -> Result<SdfForecastSet<f64>> {
        if self.images == 0 || self.phi.iter().any(|v| !v.is_finite()) {
            return Err(Error::EmptySafeSet);
        }
        SdfForecastSet::new(self.grid, self.phi.clone(), self.t, self.spread)
    }
}
