//! Number types the basis and matrix-element code can run over.
//!
//! [`RadicalSum`] gives exact results; `f64` is the fallback used when a
//! normalization leaves the ring.

use core::fmt::Debug;

use crate::exact::{sqrt_rational, ExactError, RadicalSum, Rational};
use num_traits::ToPrimitive;

pub trait Scalar: Clone + Debug + PartialEq {
    /// Whether arithmetic is exact.
    const EXACT: bool;

    fn zero() -> Self;
    fn from_radical(r: &RadicalSum) -> Self;
    fn sqrt_of(q: &Rational) -> Result<Self, ExactError>;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Product that reports leaving the exact ring instead of panicking.
    fn try_mul(&self, other: &Self) -> Result<Self, ExactError>;
    fn neg(&self) -> Self;
    /// `1 / √self` for a positive value.
    fn inv_sqrt(&self) -> Result<Self, ExactError>;
    fn to_f64(&self) -> f64;
    /// Zero test.  Exact for [`RadicalSum`]; relative to `scale` for floats.
    fn negligible(&self, scale: f64) -> bool;
    fn signum(&self) -> i32;
}

impl Scalar for RadicalSum {
    const EXACT: bool = true;

    fn zero() -> Self {
        RadicalSum::zero()
    }
    fn from_radical(r: &RadicalSum) -> Self {
        r.clone()
    }
    fn sqrt_of(q: &Rational) -> Result<Self, ExactError> {
        sqrt_rational(q)
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn try_mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.checked_mul(other)
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn inv_sqrt(&self) -> Result<Self, ExactError> {
        match self.as_rational() {
            Some(q) if q > Rational::from_integer(0.into()) => sqrt_rational(&q.recip()),
            Some(_) => Err(ExactError::Negative),
            None => crate::exact::rad_sqrt(self)?.inverse(),
        }
    }
    fn to_f64(&self) -> f64 {
        RadicalSum::to_f64(self)
    }
    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }
    fn signum(&self) -> i32 {
        RadicalSum::signum(self)
    }
}

/// Relative threshold below which a float is treated as zero.
pub const FLOAT_ZERO: f64 = 1e-10;

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn from_radical(r: &RadicalSum) -> Self {
        r.to_f64()
    }
    fn sqrt_of(q: &Rational) -> Result<Self, ExactError> {
        let x = q.to_f64().unwrap_or(f64::NAN);
        if x < 0.0 {
            Err(ExactError::Negative)
        } else {
            Ok(libm::sqrt(x))
        }
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn try_mul(&self, other: &Self) -> Result<Self, ExactError> {
        Ok(self * other)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn inv_sqrt(&self) -> Result<Self, ExactError> {
        if *self <= 0.0 {
            Err(ExactError::Negative)
        } else {
            Ok(1.0 / libm::sqrt(*self))
        }
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= FLOAT_ZERO * scale.max(1.0)
    }
    fn signum(&self) -> i32 {
        if *self > 0.0 {
            1
        } else if *self < 0.0 {
            -1
        } else {
            0
        }
    }
}
