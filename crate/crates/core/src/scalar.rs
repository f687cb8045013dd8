//! Scalar abstraction for the numeric kernels.
//!
//! Queueing and statistics routines are generic over [`Scalar`] so they can
//! run at `f32` or `f64`. The rest of the pipeline uses the concrete alias
//! [`crate::Real`].

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar usable by the generic numeric kernels.
///
/// Implemented for `f32` and `f64` via the blanket impl; anything that is a
/// [`Float`] with primitive conversions qualifies.
pub trait Scalar:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}

/// Converts an `f64` constant into any [`Scalar`].
///
/// Every finite `f64` is representable (with rounding) in both supported
/// scalar types, so this never fails for the constants used internally.
pub fn real<S: Scalar>(x: f64) -> S {
    S::from_f64(x).expect("finite f64 constant must convert into Scalar")
}
