use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::fire::{smooth_random_sigma, FireField, SigmaSpec};
use crate::sets::Grid2;

/// Keyhole-shaped unburnt bay cut radially into the initial fire: a
/// straight neck from the edge ending in a round chamber. The neck closes
/// long before the chamber burns out, trapping anything that follows the
/// standoff contour inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pocket {
    /// Direction from the fire centre to the bay mouth.
    pub angle: f64,
    pub width: f64,
    pub depth: f64,
    pub chamber: f64,
}

/// Initial fire: a disk at the origin with bays opening along the
/// counter-clockwise flight path from the start bearing.
#[derive(Debug, Clone, PartialEq)]
pub struct FireGeometry {
    pub radius: f64,
    pub pockets: Vec<Pocket>,
}

/// Bearing of the start position (the vehicle starts below the fire,
/// heading east, so it circles counter-clockwise).
pub const START_BEARING: f64 = -std::f64::consts::FRAC_PI_2;

/// Arc length along the standoff orbit from the start bearing to the
/// first bay.
pub const POCKET_LEAD: f64 = 650.0;

impl FireGeometry {
    pub fn new(cfg: &ScenarioConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
        // The first bay sits a short way along the flight path; the rest
        // are spread over the arc flown in the first ~3/4 of the run.
        let orbit = cfg.fire_radius + cfg.standoff;
        let lead = POCKET_LEAD / orbit;
        let arc = (0.75 * cfg.duration * cfg.target_speed / orbit).min(1.8 * std::f64::consts::PI);
        let n = cfg.pockets;
        let slot = (arc - lead).max(0.0) / n.max(1) as f64;
        let pockets = (0..n)
            .map(|i| {
                let centre = START_BEARING + lead + slot * i as f64;
                Pocket {
                    angle: centre + rng.gen_range(-0.05..0.05),
                    width: cfg.pocket_width * rng.gen_range(0.9..1.1),
                    depth: cfg.pocket_depth * rng.gen_range(0.85..1.15),
                    chamber: cfg.pocket_chamber * rng.gen_range(0.9..1.1),
                }
            })
            .collect();
        Self { radius: cfg.fire_radius, pockets }
    }

    /// Level function, positive outside the fire (distance-like, exact
    /// sign; redistanced on the grid afterwards).
    pub fn level(&self, p: [f64; 2]) -> f64 {
        let mut phi = p[0].hypot(p[1]) - self.radius;
        for k in &self.pockets {
            let (c, s) = (k.angle.cos(), k.angle.sin());
            // Local frame: `a` along the bay axis, `b` across.
            let a = p[0] * c + p[1] * s;
            let b = -p[0] * s + p[1] * c;
            let lo = self.radius - k.depth;
            let hi = self.radius + k.width;
            let half_len = 0.5 * (hi - lo);
            let qa = (a - 0.5 * (lo + hi)).abs() - half_len;
            let qb = b.abs() - 0.5 * k.width;
            let neck = qa.max(0.0).hypot(qb.max(0.0)) + qa.max(qb).min(0.0);
            let chamber = (a - lo).hypot(b) - k.chamber;
            phi = phi.max(-neck.min(chamber));
        }
        phi
    }

    /// Start state `(x, y, speed, heading)`.
    pub fn start_state(&self, cfg: &ScenarioConfig) -> [f64; 4] {
        let r = self.radius + cfg.start_distance;
        let (c, s) = (START_BEARING.cos(), START_BEARING.sin());
        [r * c, r * s, cfg.target_speed, START_BEARING + std::f64::consts::FRAC_PI_2]
    }
}

/// True fire for a scenario: geometry plus a seeded spread-rate field.
pub fn initial_fire(cfg: &ScenarioConfig) -> Result<(FireGeometry, FireField<f64>)> {
    let grid = Grid2::centered(cfg.arena, cfg.cell)?;
    let geom = FireGeometry::new(cfg);
    let sigma = smooth_random_sigma(&grid, &SigmaSpec::new(cfg.sigma_max_true, cfg.seed));
    let g = geom.clone();
    let field = FireField::from_level(grid, move |p| g.level(p), sigma, cfg.sigma_max_true)?;
    Ok((geom, field))
}
