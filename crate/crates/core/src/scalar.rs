//! Scalar abstraction shared by every numeric container in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point element type of reservoirs, readouts and stimuli.
///
/// Implemented for `f32` and `f64`. Configuration values are carried as
/// `f64` and converted once at construction time through [`Scalar::of`].
pub trait Scalar:
    Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal or config value, rounding to the nearest
    /// representable value.
    #[inline]
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 is representable in every Scalar")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn relu(self) -> Self {
        if self > Self::zero() {
            self
        } else {
            Self::zero()
        }
    }
}

impl<T> Scalar for T where
    T: Float
        + NumAssign
        + FromPrimitive
        + ToPrimitive
        + Sum
        + Default
        + Debug
        + Display
        + Send
        + Sync
        + Serialize
        + DeserializeOwned
        + 'static
{
}
