use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponential class-KL / linear class-K pair bounding tracking error:
/// `beta(delta, t) = gain * delta * exp(-decay * t)`, `gamma(w) = disturbance_gain * w`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IssBound<S> {
    pub gain: S,
    pub decay: S,
    pub disturbance_gain: S,
}

impl<S: Scalar> IssBound<S> {
    pub fn new(gain: S, decay: S, disturbance_gain: S) -> Result<Self> {
        if !(gain >= S::one()) {
            return Err(Error::Domain(format!("ISS gain must be >= 1, got {gain}")));
        }
        if !(decay > S::zero()) {
            return Err(Error::Domain(format!("ISS decay must be > 0, got {decay}")));
        }
        if !(disturbance_gain >= S::zero()) {
            return Err(Error::Domain(format!(
                "ISS disturbance gain must be >= 0, got {disturbance_gain}"
            )));
        }
        Ok(Self { gain, decay, disturbance_gain })
    }

    /// Bound that is identically zero: a perfect tracker.
    pub fn exact() -> Self {
        Self { gain: S::one(), decay: S::one(), disturbance_gain: S::zero() }
    }

    #[inline]
    pub fn beta(&self, delta: S, t: S) -> S {
        self.gain * delta * (-self.decay * t).exp()
    }

    #[inline]
    pub fn gamma(&self, w: S) -> S {
        self.disturbance_gain * w
    }

    /// `beta(delta, t_elapsed) + gamma(w_bar)`.
    pub fn envelope(&self, delta: S, w_bar: S, t_elapsed: S) -> Result<S> {
        if delta < S::zero() || w_bar < S::zero() || t_elapsed < S::zero() {
            return Err(Error::Domain(format!(
                "ISS envelope needs non-negative arguments (delta={delta}, w={w_bar}, t={t_elapsed})"
            )));
        }
        Ok(self.beta(delta, t_elapsed) + self.gamma(w_bar))
    }

    /// Tube radius `R = beta(r, 0) + gamma(w_bar)`.
    pub fn tube_radius(&self, r: S, w_bar: S) -> Result<S> {
        self.envelope(r, w_bar, S::zero())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zero_inputs_give_zero() {
        let b = IssBound::new(3.0, 0.7, 2.0).unwrap();
        assert_eq!(b.envelope(0.0, 0.0, 5.0).unwrap(), 0.0);
    }

    #[test]
    fn unit_beta_at_origin() {
        let b = IssBound::new(1.0, 1.0, 1.0).unwrap();
        assert_eq!(b.envelope(1.0, 0.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn formula_value() {
        let b = IssBound::new(2.0, 0.5, 0.3).unwrap();
        let v = b.envelope(0.1, 0.2, 2.0).unwrap();
        let expected = 2.0 * 0.1 * (-1.0f64).exp() + 0.06;
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.1336).abs() < 1e-4);
    }

    #[test]
    fn negative_arguments_rejected() {
        let b = IssBound::new(1.0, 1.0, 1.0).unwrap();
        assert!(b.envelope(-1.0, 0.0, 0.0).is_err());
        assert!(b.envelope(1.0, -0.1, 0.0).is_err());
        assert!(b.envelope(1.0, 0.0, -2.0).is_err());
        assert!(IssBound::new(0.5, 1.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn envelope_non_increasing(m in 1.0f64..5.0, lam in 0.01f64..3.0, c in 0.0f64..4.0,
                                   d in 0.0f64..10.0, w in 0.0f64..2.0,
                                   t1 in 0.0f64..50.0, dt in 1e-3f64..50.0) {
            let b = IssBound::new(m, lam, c).unwrap();
            let a = b.envelope(d, w, t1).unwrap();
            let z = b.envelope(d, w, t1 + dt).unwrap();
            prop_assert!(a >= z);
            if d > 0.0 && lam * (t1 + dt) < 30.0 {
                prop_assert!(a > z);
            }
        }

        #[test]
        fn tube_radius_dominates_r(m in 1.0f64..5.0, c in 0.0f64..4.0, r in 0.0f64..10.0, w in 0.0f64..2.0) {
            let b = IssBound::new(m, 1.0, c).unwrap();
            let big_r = b.tube_radius(r, w).unwrap();
            prop_assert!(big_r >= r);
            prop_assert!((big_r - (m * r + c * w)).abs() <= 1e-12 * (1.0 + big_r));
        }
    }
}
