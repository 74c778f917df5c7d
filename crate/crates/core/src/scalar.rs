//! Scalar abstraction for the signal path.
//!
//! Everything between axis projection and bit harvesting is written against
//! [`Scalar`], so the same pipeline runs in `f32` or `f64`. Cross-device
//! agreement depends on rounding magnitudes in the thousands to the nearest
//! integer, so `f64` is the precision the rest of the crate assumes.

use std::fmt::Debug;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable by the signal path: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, for configuration constants.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 converts to every Scalar")
    }

    fn of_usize(value: usize) -> Self {
        Self::from_usize(value).expect("usize converts to every Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
