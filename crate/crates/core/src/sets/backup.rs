use std::sync::Arc;

use super::sdf::SdfForecastSet;
use super::TimeVaryingSet;
use crate::error::Result;
use crate::scalar::{dist, norm, wrap_angle, Scalar};

/// Controlled-invariant set associated with a backup controller. States are
/// laid out with the planar position in the first two components.
#[derive(Debug, Clone)]
pub enum BackupSet<S> {
    /// Ball in (position, velocity) space whose centre escapes radially:
    /// position `(offset + r_k + speed (t - t_k)) n`, velocity `speed n`.
    MovingBall { n: [S; 2], r_k: S, t_k: S, speed: S, offset: S, radius: S },
    /// Stationary position ball with a velocity ceiling.
    StopBall { center: [S; 2], radius: S, max_speed: S },
    /// Flying along `heading` at least `min_speed` fast, with forecast
    /// clearance of at least `clearance`. State is (x, y, speed, heading).
    EscapeHeading {
        forecast: Arc<SdfForecastSet<S>>,
        heading: S,
        heading_tol: S,
        min_speed: S,
        clearance: S,
    },
}

impl<S: Scalar> BackupSet<S> {
    /// The unit ball moving radially away from a disk fire of radius `r_k`.
    pub fn moving_ball(n: [S; 2], r_k: S, t_k: S) -> Self {
        BackupSet::MovingBall { n, r_k, t_k, speed: S::of(2.0), offset: S::one(), radius: S::one() }
    }

    /// Centre of a [`BackupSet::MovingBall`] at time `t`.
    pub fn ball_center(&self, t: S) -> Option<[S; 4]> {
        match *self {
            BackupSet::MovingBall { n, r_k, t_k, speed, offset, .. } => {
                let s = offset + r_k + speed * (t - t_k);
                Some([s * n[0], s * n[1], speed * n[0], speed * n[1]])
            }
            _ => None,
        }
    }

    /// How far inside the set the state is (positive inside). For the
    /// escape variant only the clearance term is reported; the kinematic
    /// conditions are folded in as `-inf` when violated.
    pub fn depth(&self, x: &[S], t: S) -> Result<S> {
        match self {
            BackupSet::MovingBall { radius, .. } => {
                let c = self.ball_center(t).expect("moving ball");
                Ok(*radius - dist(&x[..4], &c))
            }
            BackupSet::StopBall { center, radius, max_speed } => {
                if norm(&x[2..4]) > *max_speed {
                    return Ok(S::neg_infinity());
                }
                Ok(*radius - dist(&x[..2], center))
            }
            BackupSet::EscapeHeading { forecast, heading, heading_tol, min_speed, clearance } => {
                let err = wrap_angle(x[3] - *heading).abs();
                if err > *heading_tol || x[2] * err.cos() < *min_speed {
                    return Ok(S::neg_infinity());
                }
                Ok(forecast.signed_distance([x[0], x[1]], t)? - *clearance)
            }
        }
    }

    pub fn contains(&self, x: &[S], t: S, margin: S) -> Result<bool> {
        Ok(self.depth(x, t)? >= margin)
    }

    /// Planar points whose clearance certifies the whole set at time `t`:
    /// the boundary circle of the position projection for ball variants,
    /// or the state's own position for the escape variant.
    pub fn witness_points(&self, x: &[S], t: S, count: usize) -> Vec<[S; 2]> {
        let ring = |c: [S; 2], r: S| {
            (0..count)
                .map(|i| {
                    let a = S::of(std::f64::consts::TAU) * S::of_usize(i) / S::of_usize(count);
                    [c[0] + r * a.cos(), c[1] + r * a.sin()]
                })
                .collect()
        };
        match *self {
            BackupSet::MovingBall { radius, .. } => {
                let c = self.ball_center(t).expect("moving ball");
                ring([c[0], c[1]], radius)
            }
            BackupSet::StopBall { center, radius, .. } => ring(center, radius),
            BackupSet::EscapeHeading { .. } => vec![[x[0], x[1]]],
        }
    }

    /// Whether certifying the set requires following the backup continuation
    /// (the set is described relative to the trajectory rather than in
    /// closed form).
    pub fn needs_continuation(&self) -> bool {
        matches!(self, BackupSet::EscapeHeading { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{build_sdf_from_bitmask, Bitmask, CellState, Grid2};

    #[test]
    fn moving_ball_matches_closed_form() {
        let c = BackupSet::moving_ball([1.0f64, 0.0], 100.0, 5.0);
        assert_eq!(c.ball_center(5.0).unwrap(), [101.0, 0.0, 2.0, 0.0]);
        assert_eq!(c.ball_center(7.5).unwrap(), [106.0, 0.0, 2.0, 0.0]);
        assert!(c.contains(&[101.0, 0.0, 2.0, 0.0], 5.0, 0.0).unwrap());
        assert!(c.contains(&[101.6, 0.0, 2.0, 0.8], 5.0, 0.0).unwrap());
        assert!(!c.contains(&[101.6, 0.0, 2.0, 0.81], 5.0, 0.0).unwrap());
        let w = c.witness_points(&[0.0; 4], 5.0, 8);
        assert_eq!(w.len(), 8);
        for p in w {
            assert!(((p[0] - 101.0).hypot(p[1]) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn stop_ball_membership() {
        let c = BackupSet::StopBall { center: [3.0f64, 4.0], radius: 0.5, max_speed: 0.1 };
        assert!(c.contains(&[3.2, 4.0, 0.05, 0.0], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[3.2, 4.0, 0.2, 0.0], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[3.6, 4.0, 0.0, 0.0], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[3.2, 4.0, 0.0, 0.0], 0.0, 0.4).unwrap());
    }

    #[test]
    fn escape_heading_membership() {
        let g = Grid2::centered(2000.0f64, 10.0).unwrap();
        let mask = Bitmask::from_fn(g, 0.0, |p| if p[0] < -500.0 { CellState::Burning } else { CellState::Free });
        let f = Arc::new(build_sdf_from_bitmask(&mask, 2.0).unwrap());
        let c = BackupSet::EscapeHeading { forecast: f, heading: 0.0, heading_tol: 0.3, min_speed: 3.2, clearance: 20.0 };
        assert!(c.contains(&[0.0, 0.0, 15.0, 0.1], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[0.0, 0.0, 15.0, 0.5], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[0.0, 0.0, 3.0, 0.0], 0.0, 0.0).unwrap());
        assert!(!c.contains(&[-490.0, 0.0, 15.0, 0.0], 0.0, 0.0).unwrap());
        assert!(c.needs_continuation());
    }
}
