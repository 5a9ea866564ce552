use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive};

use crate::poly::Coeff;

/// Floating-point scalar used throughout the geometry code.
pub trait Real:
    Float + FloatConst + FromPrimitive + Coeff + Debug + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` literal; never fails for the supported types.
    fn c(x: f64) -> Self;

    fn to_f64_lossy(self) -> f64;
}

impl Real for f64 {
    #[inline]
    fn c(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self
    }
}

impl Real for f32 {
    #[inline]
    fn c(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}
