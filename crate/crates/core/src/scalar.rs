use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point element type accepted by the tensors and learners.
///
/// Implemented for `f32` and `f64`. Everything the service and bench run
/// is `f64`; `f32` exists for callers that want the smaller footprint and
/// accept looser convergence.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from an `f64` literal or cell value.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }

    /// Widening conversion used by the codec and reporting paths.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).unwrap_or_else(Self::nan)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::Scalar;

    #[test]
    fn conversions_round_trip_for_both_widths() {
        assert_eq!(<f64 as Scalar>::of(1.5).as_f64(), 1.5);
        assert_eq!(<f32 as Scalar>::of(0.25).as_f64(), 0.25);
        assert_eq!(<f64 as Scalar>::of_usize(7), 7.0);
    }
}
