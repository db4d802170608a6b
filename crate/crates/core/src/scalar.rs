//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type usable by the gatekeeper machinery: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + FromStr
    + Sum
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance used when snapping query times onto a grid.
    fn grid_snap() -> Self {
        Self::of(1e-6)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Euclidean norm of a slice.
pub fn norm<S: Scalar>(v: &[S]) -> S {
    v.iter().fold(S::zero(), |acc, &x| acc + x * x).sqrt()
}

/// Euclidean distance between two slices of equal length.
pub fn dist<S: Scalar>(a: &[S], b: &[S]) -> S {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
        .sqrt()
}

/// Distance between two planar points.
#[inline]
pub fn dist2<S: Scalar>(a: [S; 2], b: [S; 2]) -> S {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle<S: Scalar>(a: S) -> S {
    let two_pi = S::PI() + S::PI();
    let mut w = a % two_pi;
    if w > S::PI() {
        w -= two_pi;
    } else if w <= -S::PI() {
        w += two_pi;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-0.5f64) + 0.5).abs() < 1e-15);
        assert!((wrap_angle(7.0f32) - (7.0 - 2.0 * std::f32::consts::PI)).abs() < 1e-5);
    }

    #[test]
    fn norms() {
        assert_eq!(norm(&[3.0f64, 4.0]), 5.0);
        assert_eq!(dist(&[1.0f64, 1.0], &[4.0, 5.0]), 5.0);
        assert_eq!(dist2([0.0f32, 0.0], [3.0, 4.0]), 5.0);
    }
}
