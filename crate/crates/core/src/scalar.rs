//! Scalar abstraction for the nilpotent Lie kernel.
//!
//! Group arithmetic only needs a field with exact conversion from small
//! rationals, so the same code runs over `f32`, `f64` and exact rationals.
//! Quantities that need roots (homogeneous norm) additionally require
//! [`num_traits::Float`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Num, ToPrimitive};

pub trait Scalar: Num + Clone + Debug + PartialOrd + ToPrimitive + std::ops::Neg<Output = Self> + Send + Sync {
    /// Exact (or correctly rounded) value of `num / den`.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn from_int(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
}

impl Scalar for f64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }
}

impl Scalar for f32 {
    fn from_ratio(num: i64, den: i64) -> Self {
        (num as f64 / den as f64) as f32
    }
}

impl Scalar for BigRational {
    fn from_ratio(num: i64, den: i64) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
}

impl Scalar for Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }
}
