//! Scalar traits the scoring and probability code is written against.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_traits::{Float, FromPrimitive, PrimInt, Signed, ToPrimitive};

/// Signed integer type backing exact scores (`i32`, `i64`, `i128`).
pub trait ScoreInt:
    PrimInt + Integer + Signed + FromPrimitive + Hash + Debug + Display + Send + Sync + 'static
{
    fn from_count(n: u32) -> Self {
        Self::from_u32(n).expect("count fits in score integer")
    }
}

impl<T> ScoreInt for T where
    T: PrimInt + Integer + Signed + FromPrimitive + Hash + Debug + Display + Send + Sync + 'static
{
}

/// Floating point type used for probabilities (`f32`, `f64`).
pub trait Probability: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static {
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl<T> Probability for T where T: Float + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static {}

/// Decimal rendering of an exact ratio with a fixed number of places.
pub fn ratio_to_f64<I: ScoreInt>(r: &num_rational::Ratio<I>) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}
