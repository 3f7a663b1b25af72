//! Scalar abstraction shared by every real-valued computation in the crate.
//!
//! Logits, probabilities, losses and similarity scores are all generic over
//! [`Real`], which is implemented for `f32` and `f64`. Counts (LCS lengths,
//! edit distances) stay `usize`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// A floating-point scalar usable throughout the toolkit.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real")
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        Self::from_usize(n).expect("usize is representable in every Real")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real converts to f64")
    }

    /// `ln(max(p, min_positive))`, the floor used whenever a probability is
    /// exactly zero so logits stay finite.
    #[inline]
    fn ln_floor(self) -> Self {
        self.max(Self::min_positive_value()).ln()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Numerically stable log-sum-exp. Returns `-inf` for an empty slice.
pub fn log_sum_exp<T: Real>(xs: &[T]) -> T {
    let max = xs.iter().copied().fold(T::neg_infinity(), T::max);
    if !max.is_finite() {
        return max;
    }
    let sum: T = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// Softmax of a logit slice.
pub fn softmax<T: Real>(xs: &[T]) -> Vec<T> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|&x| (x - lse).exp()).collect()
}
