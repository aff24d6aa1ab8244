use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of matrices and key/value sets.
///
/// Reductions widen every element to `f64` and narrow the result back, so
/// `f32` inputs get 64-bit accumulation while `f64` inputs are unaffected.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Sum + Send + Sync + 'static
{
    /// Bit width of the storage type.
    const BITS: u32;

    fn widen(self) -> f64;

    fn narrow(value: f64) -> Self;
}

impl Scalar for f32 {
    const BITS: u32 = 32;

    #[inline(always)]
    fn widen(self) -> f64 {
        self as f64
    }

    #[inline(always)]
    fn narrow(value: f64) -> Self {
        value as f32
    }
}

impl Scalar for f64 {
    const BITS: u32 = 64;

    #[inline(always)]
    fn widen(self) -> f64 {
        self
    }

    #[inline(always)]
    fn narrow(value: f64) -> Self {
        value
    }
}
