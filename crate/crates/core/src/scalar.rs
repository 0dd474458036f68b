//! Scalar abstraction for the numeric core.
//!
//! Everything in this crate is generic over [`Scalar`]; the crate root
//! exposes `f64` aliases for the common case.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, NumAssign};

/// Floating-point scalar: `f32` or `f64`. `Float` brings `NumCast`, so
/// conversions ride along without extra bounds.
pub trait Scalar:
    Float + NumAssign + Sum + Display + LowerExp + Debug + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for tolerances and seeded draws.
    fn from_f64(v: f64) -> Self {
        <Self as num_traits::NumCast>::from(v).expect("f64 -> Scalar conversion")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar -> f64 conversion")
    }

    /// Count -> scalar, for averaging over examples.
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_f64(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
