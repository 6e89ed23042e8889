//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Tolerances quoted throughout the crate
/// (for example `1e-12` on probability sums) are meaningful for `f64`; the
/// `f32` instantiation is usable but only to single precision.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal, rounding to the nearest representable value.
    fn lit(x: f64) -> Self;

    /// Widens to `f64`.
    fn as_f64(self) -> f64;

    /// Clamps into `[-bound, bound]`.
    fn clip_abs(self, bound: Self) -> Self {
        self.max(-bound).min(bound)
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

/// Tie-breaking argmax: the lowest index wins among equal maxima.
pub fn argmax<T: Real>(xs: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x <= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// Tie-breaking argmin: the lowest index wins among equal minima.
pub fn argmin<T: Real>(xs: &[T]) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, &x) in xs.iter().enumerate() {
        match best {
            Some((_, b)) if x >= b => {}
            _ => best = Some((i, x)),
        }
    }
    best.map(|(i, _)| i)
}

/// `ceil` that ignores relative rounding noise below `1e-12`, so that a
/// quotient such as `1.0 / 0.1 = 10.000000000000002` rounds to `10`.
pub(crate) fn stable_ceil(x: f64) -> f64 {
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-12 * x.abs().max(1.0) {
        nearest
    } else {
        x.ceil()
    }
}
