//! Exact rational arithmetic helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Signed;

pub type Rational = num_rational::BigRational;

pub fn from_i64(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub(crate) fn numer_abs(r: &Rational) -> BigInt {
    r.numer().abs()
}

/// Largest integer `<= r`.
pub fn floor(r: &Rational) -> Rational {
    Rational::from_integer(r.numer().div_floor(r.denom()))
}

/// Smallest integer `>= r`.
pub fn ceil(r: &Rational) -> Rational {
    Rational::from_integer(-((-r.numer()).div_floor(r.denom())))
}
