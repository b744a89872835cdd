//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};
use std::str::FromStr;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar type the penalty functions, predictors and optimizer are generic over.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + FromStr
    + Send
    + Sync
    + 'static
{
    /// Largest `|x / alpha|` for which `2^(x / alpha)` is evaluated directly by the
    /// softplus family. Beyond it the exact linear (or saturated) asymptote is returned.
    ///
    /// `2^t` overflows at `t = 1024` for `f64` and `t = 128` for `f32`.
    const SOFTPLUS_MASK: f64;

    /// Converts an `f64` literal. Only used with values representable in every
    /// implementing type.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {
    const SOFTPLUS_MASK: f64 = 100.0;
}

impl Scalar for f64 {
    const SOFTPLUS_MASK: f64 = 700.0;
}

/// Dot product of two equal-length slices.
#[inline]
pub(crate) fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Euclidean norm, rescaled so it cannot overflow for finite input.
pub(crate) fn norm2<T: Scalar>(a: &[T]) -> T {
    let scale = a.iter().fold(T::zero(), |m, &x| m.max(x.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let sum: T = a.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * sum.sqrt()
}

#[inline]
pub(crate) fn max_abs<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |m, &x| {
        if x.is_nan() {
            T::nan()
        } else {
            m.max(x.abs())
        }
    })
}
