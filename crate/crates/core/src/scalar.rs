//! Generic floating-point scalar used throughout the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, NumAssign, NumCast};

/// Floating-point scalar the image pipeline is generic over: `f32` or `f64`.
///
/// The default pipeline (and everything touched by gradient checks) runs in
/// `f64`; `f32` is available for memory-bound workloads.
pub trait Scalar:
    Float + NumCast + NumAssign + Sum + Send + Sync + Debug + Display + 'static
{
    /// Lossy cast from `f64`; exact for every constant this crate uses.
    fn from_f64(v: f64) -> Self {
        <Self as NumCast>::from(v).expect("finite f64 converts to any Scalar")
    }

    /// Widen to `f64` (exact for `f32` and `f64`).
    fn to_f64(self) -> f64 {
        <f64 as NumCast>::from(self).expect("Scalar converts to f64")
    }

    fn from_usize(v: usize) -> Self {
        <Self as NumCast>::from(v).expect("usize converts to Scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
