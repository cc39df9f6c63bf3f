//! Scalar abstraction shared by every numeric kernel in the crate.
//!
//! All geometry, channel, beampattern and closed-form code is written against
//! [`Real`] so the same routines run in `f32` (fast sweeps) or `f64`
//! (reference results). Sampling goes through the trait rather than through
//! `rand_distr` bounds so callers never have to repeat `where StandardNormal:
//! Distribution<T>` clauses.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot hold,
    /// which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }

    /// Converts a count.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Standard normal draw.
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Complementary error function.
    fn erfc(self) -> Self;

    /// Bessel function of the first kind, order one.
    fn bessel_j1(self) -> Self;
}

impl Real for f64 {
    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }

    #[inline]
    fn bessel_j1(self) -> Self {
        libm::j1(self)
    }
}

impl Real for f32 {
    #[inline]
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }

    #[inline]
    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }

    #[inline]
    fn bessel_j1(self) -> Self {
        libm::j1f(self)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle<T: Real>(angle: T) -> T {
    let two_pi = T::TAU();
    let shifted = (angle + T::PI()) % two_pi;
    let shifted = if shifted < T::zero() {
        shifted + two_pi
    } else {
        shifted
    };
    let wrapped = shifted - T::PI();
    // `%` can land exactly on +pi after the shift for inputs just below -pi.
    if wrapped >= T::PI() {
        wrapped - two_pi
    } else {
        wrapped
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn wrap_angle_range() {
        for &a in &[0.0, PI, -PI, 3.0 * PI, -3.0 * PI, 7.1, -7.1, 1e-17 - PI] {
            let w = wrap_angle(a);
            assert!((-PI..PI).contains(&w), "{a} -> {w}");
            assert!(((a - w) / (2.0 * PI)).round() * 2.0 * PI - (a - w) < 1e-9);
        }
        assert_eq!(wrap_angle(PI), -PI);
    }

    #[test]
    fn erfc_both_widths() {
        assert!((Real::erfc(0.0_f64) - 1.0).abs() < 1e-15);
        assert!((Real::erfc(1.0_f32) - 0.157_299_2).abs() < 1e-6);
    }
}
