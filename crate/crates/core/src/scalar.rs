//! Scalar abstraction shared by every numerical module.
//!
//! All of the math in this crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. The crate root exports `f64` aliases for
//! the common types.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Never fails for finite inputs.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("finite literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize fits in float")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).unwrap_or(f64::NAN)
    }

    /// Default relative tolerance for symmetry checks: `1e-12`, but never
    /// tighter than a few ulps of the type.
    #[inline]
    fn default_symmetry_tol() -> Self {
        let eps = Self::epsilon() * Self::lit(8.0);
        Self::lit(1e-12).max(eps)
    }
}

impl Real for f32 {}
impl Real for f64 {}
