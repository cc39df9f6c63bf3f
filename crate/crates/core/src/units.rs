//! Power unit conversions. Everything inside the crate is linear; decibels
//! only appear at configuration and output boundaries.

use crate::scalar::Real;

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// `10 log10(x)`; zero maps to negative infinity.
pub fn linear_to_db<T: Real>(linear: T) -> T {
    T::lit(10.0) * linear.log10()
}

pub fn deg_to_rad<T: Real>(deg: T) -> T {
    deg.to_radians()
}

pub fn rad_to_deg<T: Real>(rad: T) -> T {
    rad.to_degrees()
}
