//! Coefficient fields.
//!
//! Series and matrix code is written against [`Scalar`], an exact field.
//! Pruning of zero coefficients and exact-equality checks are only meaningful
//! for exact arithmetic, so floating point types are deliberately not
//! implemented.

use std::fmt::{Debug, Display};
use std::ops::Neg;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// An exact field usable as a series coefficient.
pub trait Scalar:
    Num + Neg<Output = Self> + Clone + Debug + Display + Send + Sync + 'static
{
    fn from_i64(n: i64) -> Self;

    fn from_frac(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    /// `Some(n)` when the value is an integer that fits in an `i64`.
    fn to_i64_exact(&self) -> Option<i64>;

    fn is_negative_value(&self) -> bool;

    fn abs_value(&self) -> Self {
        if self.is_negative_value() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Scalar for BigRational {
    fn from_i64(n: i64) -> Self {
        BigRational::from_integer(BigInt::from(n))
    }

    fn to_i64_exact(&self) -> Option<i64> {
        if self.is_integer() {
            self.numer().to_i64()
        } else {
            None
        }
    }

    fn is_negative_value(&self) -> bool {
        self.is_negative()
    }
}

macro_rules! small_ratio_scalar {
    ($($int:ty),*) => {$(
        impl Scalar for Ratio<$int> {
            fn from_i64(n: i64) -> Self {
                Ratio::from_integer(n as $int)
            }

            fn to_i64_exact(&self) -> Option<i64> {
                if self.is_integer() {
                    self.numer().to_i64()
                } else {
                    None
                }
            }

            fn is_negative_value(&self) -> bool {
                *self.numer() < <$int>::zero()
            }
        }
    )*};
}

small_ratio_scalar!(i64, i128);
