use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bounds on the additive state disturbance `d` and measurement disturbance `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisturbanceSpec<S> {
    pub d_bar: S,
    pub v_bar: S,
    pub seed: u64,
}

impl<S: Scalar> DisturbanceSpec<S> {
    pub fn new(d_bar: S, v_bar: S, seed: u64) -> Result<Self> {
        if d_bar < S::zero() || v_bar < S::zero() {
            return Err(Error::Domain("disturbance bounds must be non-negative".into()));
        }
        Ok(Self { d_bar, v_bar, seed })
    }

    pub fn none() -> Self {
        Self { d_bar: S::zero(), v_bar: S::zero(), seed: 0 }
    }

    /// `w_bar = max(d_bar, v_bar)`.
    pub fn w_bar(&self) -> S {
        self.d_bar.max(self.v_bar)
    }

    pub fn sampler(&self) -> DisturbanceSampler<S> {
        DisturbanceSampler {
            spec: *self,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }
}

/// Seeded source of bounded disturbance vectors.
///
/// Samples are drawn uniformly in the ball of the configured radius.
#[derive(Debug, Clone)]
pub struct DisturbanceSampler<S> {
    spec: DisturbanceSpec<S>,
    rng: ChaCha8Rng,
}

impl<S: Scalar> DisturbanceSampler<S> {
    pub fn state(&mut self, out: &mut [S]) {
        let r = self.spec.d_bar;
        sample_ball(&mut self.rng, r, out);
    }

    pub fn measurement(&mut self, out: &mut [S]) {
        let r = self.spec.v_bar;
        sample_ball(&mut self.rng, r, out);
    }
}

/// Uniform sample from the closed ball of radius `radius` in `out.len()` dimensions.
pub(crate) fn sample_ball<S: Scalar, R: Rng>(rng: &mut R, radius: S, out: &mut [S]) {
    if radius <= S::zero() || out.is_empty() {
        out.iter_mut().for_each(|v| *v = S::zero());
        return;
    }
    let n = out.len();
    let mut sq = 0.0f64;
    let mut raw = vec![0.0f64; n];
    while sq < 1e-24 {
        sq = 0.0;
        for r in raw.iter_mut() {
            // Box-Muller on each coordinate.
            let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            let u2: f64 = rng.gen();
            *r = (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos();
            sq += *r * *r;
        }
    }
    let rad: f64 = rng.gen::<f64>().powf(1.0 / n as f64) * radius.as_f64();
    let scale = rad / sq.sqrt();
    for (o, r) in out.iter_mut().zip(raw) {
        *o = S::of(r * scale);
    }
    // Guard against rounding pushing the sample past the bound.
    let nrm = crate::scalar::norm(out);
    if nrm > radius {
        let k = radius / nrm;
        out.iter_mut().for_each(|v| *v *= k);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::norm;

    #[test]
    fn samples_respect_bounds() {
        let spec = DisturbanceSpec::new(0.3f64, 1.5, 42).unwrap();
        assert_eq!(spec.w_bar(), 1.5);
        let mut s = spec.sampler();
        let mut d = [0.0; 4];
        let mut v = [0.0; 4];
        for _ in 0..2000 {
            s.state(&mut d);
            s.measurement(&mut v);
            assert!(norm(&d) <= 0.3);
            assert!(norm(&v) <= 1.5);
        }
    }

    #[test]
    fn seeded_sampler_is_reproducible() {
        let spec = DisturbanceSpec::new(1.0f32, 1.0, 7).unwrap();
        let (mut a, mut b) = (spec.sampler(), spec.sampler());
        let (mut x, mut y) = ([0.0f32; 3], [0.0f32; 3]);
        for _ in 0..10 {
            a.state(&mut x);
            b.state(&mut y);
            assert_eq!(x, y);
        }
    }

    #[test]
    fn zero_bound_gives_zero() {
        let mut s = DisturbanceSpec::<f64>::none().sampler();
        let mut d = [5.0; 2];
        s.state(&mut d);
        assert_eq!(d, [0.0, 0.0]);
    }
}
