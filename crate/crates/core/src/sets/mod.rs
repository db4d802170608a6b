//! Time-varying sets: safe sets, perceived sets with worst-case forecasts,
//! backup sets, and erosion.

mod backup;
mod edt;
mod grid;
mod io;
mod sdf;

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{dist, Scalar};

pub use backup::BackupSet;
pub use edt::distance_to_seeds;
pub use grid::Grid2;
pub use io::{read_bitmask, read_sdf, write_bitmask, write_sdf};
pub use sdf::{build_sdf_from_bitmask, check_nesting, Bitmask, CellState, NestingReport, SdfForecastSet};

/// A set in the plane that may change over time, queried by signed distance
/// (positive inside).
pub trait TimeVaryingSet<S: Scalar>: Send + Sync {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S>;

    fn contains(&self, p: [S; 2], t: S, margin: S) -> Result<bool> {
        Ok(self.signed_distance(p, t)? >= margin)
    }
}

impl<S: Scalar, T: TimeVaryingSet<S> + ?Sized> TimeVaryingSet<S> for &T {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        (**self).signed_distance(p, t)
    }
}

impl<S: Scalar, T: TimeVaryingSet<S> + ?Sized> TimeVaryingSet<S> for Arc<T> {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        (**self).signed_distance(p, t)
    }
}

impl<S: Scalar, T: TimeVaryingSet<S> + ?Sized> TimeVaryingSet<S> for Box<T> {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        (**self).signed_distance(p, t)
    }
}

/// `A ⊖ B(R)`: the set of points at least `R` inside `A`.
#[derive(Debug, Clone)]
pub struct Eroded<T, S> {
    inner: T,
    radius: S,
}

impl<T, S: Scalar> Eroded<T, S> {
    pub fn inner(&self) -> &T {
        &self.inner
    }

    pub fn radius(&self) -> S {
        self.radius
    }
}

impl<S: Scalar, T: TimeVaryingSet<S>> TimeVaryingSet<S> for Eroded<T, S> {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        Ok(self.inner.signed_distance(p, t)? - self.radius)
    }
}

pub fn erode<S: Scalar, T: TimeVaryingSet<S>>(set: T, radius: S) -> Result<Eroded<T, S>> {
    if !(radius >= S::zero()) {
        return Err(Error::Domain(format!("erosion radius must be non-negative, got {radius}")));
    }
    Ok(Eroded { inner: set, radius })
}

/// Everything outside a disk whose radius grows with time.
pub struct AnalyticDiskComplement<S, F> {
    pub center: [S; 2],
    pub radius_at: F,
}

impl<S: Scalar, F: Fn(S) -> S + Send + Sync> AnalyticDiskComplement<S, F> {
    pub fn new(center: [S; 2], radius_at: F) -> Self {
        Self { center, radius_at }
    }
}

impl<S: Scalar, F: Fn(S) -> S + Send + Sync> TimeVaryingSet<S> for AnalyticDiskComplement<S, F> {
    fn signed_distance(&self, p: [S; 2], t: S) -> Result<S> {
        Ok(dist(&p, &self.center) - (self.radius_at)(t))
    }
}

/// Radius `r_k + speed * (t - t_k)`, the worst-case growth of a disk whose
/// radius was `r_k` at `t_k`.
pub fn linear_growth<S: Scalar>(r_k: S, t_k: S, speed: S) -> impl Fn(S) -> S + Send + Sync + Clone {
    move |t| r_k + speed * (t - t_k)
}

/// Static half-plane `{p : n . p <= offset}` with unit normal `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane<S> {
    normal: [S; 2],
    offset: S,
}

impl<S: Scalar> HalfPlane<S> {
    pub fn new(normal: [S; 2], offset: S) -> Result<Self> {
        let n = normal[0].hypot(normal[1]);
        if !(n > S::zero() && n.is_finite()) {
            return Err(Error::DegenerateGeometry("half-plane normal must be non-zero".into()));
        }
        Ok(Self { normal: [normal[0] / n, normal[1] / n], offset: offset / n })
    }
}

impl<S: Scalar> TimeVaryingSet<S> for HalfPlane<S> {
    fn signed_distance(&self, p: [S; 2], _t: S) -> Result<S> {
        Ok(self.offset - self.normal[0] * p[0] - self.normal[1] * p[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disk_erosion_example() {
        let s = AnalyticDiskComplement::new([0.0f64, 0.0], |_| 2000.0);
        let e = erode(&s, 100.0).unwrap();
        assert!(!e.contains([2050.0, 0.0], 0.0, 0.0).unwrap());
        assert!(e.contains([2150.0, 0.0], 0.0, 0.0).unwrap());
        assert!(erode(&s, -1.0).is_err());
        let z = erode(&s, 0.0).unwrap();
        assert_eq!(z.signed_distance([3.0, 4.0], 1.0).unwrap(), s.signed_distance([3.0, 4.0], 1.0).unwrap());
    }

    proptest! {
        #[test]
        fn disk_is_one_lipschitz(ax in -50.0f64..50.0, ay in -50.0f64..50.0,
                                 bx in -50.0f64..50.0, by in -50.0f64..50.0, t in 0.0f64..10.0) {
            let s = AnalyticDiskComplement::new([1.0, -2.0], linear_growth(3.0, 0.0, 2.0));
            let da = s.signed_distance([ax, ay], t).unwrap();
            let db = s.signed_distance([bx, by], t).unwrap();
            prop_assert!((da - db).abs() <= dist(&[ax, ay], &[bx, by]) + 1e-12);
        }

        #[test]
        fn erosion_is_monotone(r1 in 0.0f64..5.0, extra in 0.0f64..5.0,
                               px in -20.0f64..20.0, py in -20.0f64..20.0) {
            let s = AnalyticDiskComplement::new([0.0, 0.0], |_| 4.0);
            let e1 = erode(&s, r1).unwrap();
            let e2 = erode(&s, r1 + extra).unwrap();
            if e2.contains([px, py], 0.0, 0.0).unwrap() {
                prop_assert!(e1.contains([px, py], 0.0, 0.0).unwrap());
            }
        }

        #[test]
        fn contains_matches_signed_distance(px in -20.0f64..20.0, py in -20.0f64..20.0, m in -3.0f64..3.0) {
            let s = AnalyticDiskComplement::new([0.0, 0.0], |_| 4.0);
            let sd = s.signed_distance([px, py], 0.0).unwrap();
            prop_assert_eq!(s.contains([px, py], 0.0, m).unwrap(), sd >= m);
        }
    }
}
