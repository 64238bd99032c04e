//! Floating point scalar abstraction for the numeric kernels.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Scalar type of network matrices and CUSUM statistics: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` into the scalar type, rounding if narrower.
#[inline]
pub fn from_f64<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("finite f64 converts to any Scalar")
}

/// Converts a scalar into `f64`.
#[inline]
pub fn to_f64<S: Scalar>(x: S) -> f64 {
    x.to_f64().expect("Scalar converts to f64")
}
