//! Scalar abstraction: every numerical routine in this crate is generic over
//! a floating-point scalar so the same code runs in `f32` or `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar used throughout the crate.
pub trait Real:
    Float + NumAssign + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Converts an `f64` constant into the working scalar type.
///
/// Conversion from `f64` is total for both `f32` and `f64` (it may round,
/// never fail), so the unwrap cannot trip for the types this crate supports.
#[inline]
pub fn real<R: Real>(x: f64) -> R {
    R::from_f64(x).expect("f64 converts into every supported scalar")
}

/// Converts a `usize` count into the working scalar type.
#[inline]
pub fn real_from_usize<R: Real>(x: usize) -> R {
    real(x as f64)
}
