use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar used by the numeric pipeline stages.
///
/// Implemented for `f32` and `f64` through the blanket impl; all public
/// numeric types default to `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum<Self>
    + Debug
    + Display
    + serde::Serialize
    + Send
    + Sync
    + 'static
{
    /// Conversion from a count or index; panics only when the count cannot
    /// be represented at all, which no realistic corpus reaches.
    fn from_count(value: usize) -> Self {
        <Self as FromPrimitive>::from_usize(value)
            .unwrap_or_else(|| panic!("count {value} not representable in scalar type"))
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum<T>
        + Debug
        + Display
        + serde::Serialize
        + Send
        + Sync
        + 'static
{
}
