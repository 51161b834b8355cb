//! Floating-point scalar abstraction for the decoding path.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Scalar type for LLRs and channel values.
///
/// Implemented for `f32` and `f64` via the blanket impl. `f64` is the
/// default everywhere; `f32` roughly halves the decoder's memory traffic at
/// the cost of earlier message saturation (see
/// [`DecoderConfig`](crate::decoder::DecoderConfig) for the clamp
/// consequences).
pub trait Real:
    Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl<T> Real for T where
    T: Float + FromPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into `T`. Panics only if `T` cannot represent
/// any rounding of `x`, which does not happen for `f32`/`f64`.
#[inline]
pub(crate) fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("constant representable in scalar type")
}
