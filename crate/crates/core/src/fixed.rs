//! Binary fixed-point arithmetic on big integers: a value `v` stands for
//! `v · 2^-bits`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Fixed {
    bits: u32,
}

impl Fixed {
    pub fn new(bits: u32) -> Self {
        assert!(bits >= 1);
        Fixed { bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn one(&self) -> BigInt {
        BigInt::one() << self.bits
    }

    /// Shift right by `bits`, rounding to nearest.
    pub fn from_int(&self, v: &BigInt) -> BigInt {
        v << self.bits
    }

    pub fn from_rational(&self, r: &BigRational) -> BigInt {
        round_div(&(r.numer() << self.bits), r.denom())
    }

    /// Exact value; the denominator is a power of two, so reducing only
    /// needs the trailing zeros of the numerator.
    pub fn to_rational(&self, v: &BigInt) -> BigRational {
        let shift = v.trailing_zeros().unwrap_or(0).min(self.bits as u64);
        BigRational::new_raw(v >> shift, BigInt::one() << (self.bits as u64 - shift))
    }

    pub fn div(&self, a: &BigInt, b: &BigInt) -> BigInt {
        round_div(&(a << self.bits), b)
    }

    /// Square root of a nonnegative value, rounded down.
    pub fn sqrt(&self, a: &BigInt) -> BigInt {
        assert!(!a.is_negative());
        (a << self.bits).sqrt()
    }

    pub fn log2(&self, v: &BigInt) -> f64 {
        log2_big(v) - self.bits as f64
    }
}

/// `a / b` rounded to nearest, for `b > 0`.
pub(crate) fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let twice: BigInt = a * 2 + b;
    num_integer::Integer::div_floor(&twice, &(b * 2))
}

/// `log2(|v|)`, `-inf` for zero.
pub(crate) fn log2_big(v: &BigInt) -> f64 {
    if v.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = v.bits();
    let shift = bits.saturating_sub(64);
    let top = (v.abs() >> shift).to_f64().unwrap_or(f64::MAX);
    top.log2() + shift as f64
}
