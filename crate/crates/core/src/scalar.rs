//! Scalar abstraction for likelihoods, link weights and corpus averages.
//!
//! Everything numeric in the pipeline is generic over [`Score`]; `f64` is the
//! default used by the crate-root aliases, `f32` works wherever memory matters
//! more than the last few digits.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Score:
    Float + FromPrimitive + FromStr + Debug + Display + Default + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and wire payloads.
    fn from_f64_lossy(value: f64) -> Self {
        <Self as NumCast>::from(value).unwrap_or_else(Self::nan)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// True when the value lies in the half-open probability range (0, 1].
    fn is_probability(self) -> bool {
        self.is_finite() && self > Self::zero() && self <= Self::one()
    }
}

impl<T> Score for T where
    T: Float
        + FromPrimitive
        + FromStr
        + Debug
        + Display
        + Default
        + Serialize
        + DeserializeOwned
        + Send
        + Sync
        + 'static
{
}
