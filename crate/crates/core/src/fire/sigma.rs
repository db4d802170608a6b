use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;
use crate::sets::Grid2;

/// Parameters of the hidden rate-of-spread field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSpec<S> {
    pub sigma_max: S,
    /// Lower end of the field as a fraction of `sigma_max`.
    pub floor: S,
    /// Shortest and longest wavelength of the random modes (m).
    pub wavelengths: (S, S),
    pub modes: usize,
    pub seed: u64,
}

impl<S: Scalar> SigmaSpec<S> {
    pub fn new(sigma_max: S, seed: u64) -> Self {
        Self { sigma_max, floor: S::of(0.2), wavelengths: (S::of(400.0), S::of(2500.0)), modes: 12, seed }
    }
}

/// Smooth random field on the nodes of `grid`, scaled into
/// `[floor, 1] * sigma_max` (both ends attained).
pub fn smooth_random_sigma<S: Scalar>(grid: &Grid2<S>, spec: &SigmaSpec<S>) -> Vec<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tau = std::f64::consts::TAU;
    let (lo, hi) = (spec.wavelengths.0.as_f64(), spec.wavelengths.1.as_f64());
    let modes: Vec<(f64, f64, f64, f64)> = (0..spec.modes.max(1))
        .map(|_| {
            let wl = lo * (hi / lo).powf(rng.gen::<f64>());
            let dir = rng.gen::<f64>() * tau;
            let phase = rng.gen::<f64>() * tau;
            let amp = rng.gen_range(0.5..1.0);
            (tau / wl * dir.cos(), tau / wl * dir.sin(), phase, amp)
        })
        .collect();
    let raw: Vec<f64> = (0..grid.len())
        .map(|k| {
            let p = grid.node_of(k);
            let (x, y) = (p[0].as_f64(), p[1].as_f64());
            modes.iter().map(|&(kx, ky, ph, a)| a * (kx * x + ky * y + ph).sin()).sum()
        })
        .collect();
    let (mn, mx) = raw.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = (mx - mn).max(1e-12);
    let floor = spec.floor.as_f64();
    raw.into_iter()
        .map(|v| {
            let u = (v - mn) / span;
            spec.sigma_max * S::of(floor + (1.0 - floor) * u)
        })
        .collect()
}
