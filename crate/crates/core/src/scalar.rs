//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Tolerance floor for checks that are nominally exact: `max(abs, 1e3 * eps)`.
    #[inline]
    fn tol_floor(abs: f64) -> Self {
        let floor = Self::epsilon() * Self::lit(1e3);
        Self::lit(abs).max(floor)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Maps an angle into `[0, 2π)`.
#[inline]
pub fn wrap_angle<T: Real>(a: T) -> T {
    let period = T::TAU();
    let mut r = a % period;
    if r < T::zero() {
        r += period;
    }
    if r >= period {
        r = T::zero();
    }
    r
}

/// Maps an angle difference into `(-π, π]`.
#[inline]
pub fn wrap_diff<T: Real>(a: T) -> T {
    let period = T::TAU();
    let mut r = wrap_angle(a);
    if r > T::PI() {
        r -= period;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_stays_in_fundamental_domain() {
        for &a in &[-1e-300, -7.0, 0.0, 6.283185307179586, 100.0, -2.0 * std::f64::consts::PI] {
            let w = wrap_angle(a);
            assert!((0.0..std::f64::consts::TAU).contains(&w), "{a} -> {w}");
        }
        assert!((wrap_diff(3.5f64) - (3.5 - std::f64::consts::TAU)).abs() < 1e-15);
        assert_eq!(wrap_diff(std::f64::consts::PI), std::f64::consts::PI);
    }

    #[test]
    fn literals_round_trip_for_both_widths() {
        assert_eq!(<f64 as Real>::lit(0.25), 0.25);
        assert_eq!(<f32 as Real>::lit(0.25), 0.25f32);
        assert!(<f32 as Real>::tol_floor(1e-10) > 1e-10);
    }
}
