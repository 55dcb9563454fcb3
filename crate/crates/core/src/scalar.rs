//! Scalar abstractions.
//!
//! Closed-form ratios only need field arithmetic, so they are written against
//! [`Field`] and can be evaluated exactly over [`BigRational`]. Anything that
//! touches logarithms, special functions or series goes through [`Real`].

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};

/// Field arithmetic with an ordering; implemented by `f32`, `f64` and
/// [`BigRational`].
pub trait Field: Clone + Num + FromPrimitive + PartialOrd + Debug {
    /// Converts a finite `f64` into this scalar exactly (binary fractions are
    /// exact rationals). `None` for non-finite input.
    fn from_f64_exact(value: f64) -> Option<Self>;

    /// Nearest `f64`.
    fn to_f64_lossy(&self) -> f64;

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar")
    }
}

/// Floating-point scalar used for log-space numerics.
pub trait Real:
    Field + Float + FloatConst + Display + Sum + Send + Sync + 'static
{
    /// Converts an `f64` constant into this type.
    fn c(value: f64) -> Self {
        <Self as FromPrimitive>::from_f64(value).expect("f64 constant representable")
    }
}

macro_rules! impl_float_scalar {
    ($t:ty) => {
        impl Field for $t {
            fn from_f64_exact(value: f64) -> Option<Self> {
                value.is_finite().then_some(value as $t)
            }

            fn to_f64_lossy(&self) -> f64 {
                *self as f64
            }
        }

        impl Real for $t {}
    };
}

impl_float_scalar!(f32);
impl_float_scalar!(f64);

impl Field for BigRational {
    fn from_f64_exact(value: f64) -> Option<Self> {
        BigRational::from_float(value)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or_else(|| {
            // Ratio::to_f64 gives up on huge numerators; fall back on scaling.
            let num = self.numer().to_f64().unwrap_or(f64::NAN);
            let den = self.denom().to_f64().unwrap_or(f64::NAN);
            num / den
        })
    }

    fn from_count(n: u64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }
}
