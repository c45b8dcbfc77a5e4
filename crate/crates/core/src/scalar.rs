//! Scalar abstraction shared by the numeric kernel and the copula calculus.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point type the likelihood machinery is written against.
///
/// Implemented for `f32` and `f64`. Statistical tolerances quoted in the
/// tests assume `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal; all supported types can represent it approximately.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Smallest positive value the likelihood pieces are clamped to.
    fn tiny() -> Self;
}

impl Real for f64 {
    #[inline]
    fn tiny() -> Self {
        1e-300
    }
}

impl Real for f32 {
    #[inline]
    fn tiny() -> Self {
        f32::MIN_POSITIVE
    }
}
