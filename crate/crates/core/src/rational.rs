//! Exact rational helpers: continued-fraction rounding and string parsing.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// The rational closest to `x` among those with denominator at most `max_den`,
/// preferring the smaller denominator on ties.
pub fn best_approximation(x: &BigRational, max_den: &BigInt) -> BigRational {
    assert!(
        max_den >= &BigInt::one(),
        "denominator bound must be positive"
    );
    let (mut p, mut q) = (x.numer().clone(), x.denom().clone());
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    loop {
        let (a, r) = p.div_mod_floor(&q);
        let k2 = &a * &k1 + &k0;
        if &k2 > max_den {
            let t = (max_den - &k0) / &k1;
            let semi = BigRational::new(&h0 + &t * &h1, &k0 + &t * &k1);
            let conv = BigRational::new(h1, k1);
            return if (&semi - x).abs() < (&conv - x).abs() {
                semi
            } else {
                conv
            };
        }
        let h2 = &a * &h1 + &h0;
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        if r.is_zero() {
            return BigRational::new(h1, k1);
        }
        (p, q) = (q, r);
    }
}

/// Parses `"3/2"`, `"-4"` or `"0.75"`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let text = text.trim();
    let bad = || Error::invalid(format!("`{text}` is not a rational number"));
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let digits: BigInt = format!("{whole}{frac}").parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(digits, scale));
    }
    let value: BigRational = text.parse().map_err(|_| bad())?;
    Ok(value)
}

/// `"p/q"`, or `"p"` for integers.
pub fn format_rational(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn approximations_of_pi() {
        let pi = q(314159265, 100000000);
        assert_eq!(best_approximation(&pi, &7.into()), q(22, 7));
        assert_eq!(best_approximation(&pi, &100.into()), q(311, 99));
        assert_eq!(best_approximation(&pi, &113.into()), q(355, 113));
        assert_eq!(best_approximation(&pi, &1.into()), q(3, 1));
    }

    #[test]
    fn recovers_nearby_fraction() {
        let x = q(3, 2) + BigRational::new(1.into(), BigInt::from(10).pow(30));
        assert_eq!(best_approximation(&x, &1000.into()), q(3, 2));
        assert_eq!(best_approximation(&q(-7, 3), &10.into()), q(-7, 3));
        assert_eq!(best_approximation(&q(-7, 3), &2.into()), q(-5, 2));
    }

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_rational("3/2").unwrap(), q(3, 2));
        assert_eq!(parse_rational("1.4").unwrap(), q(7, 5));
        assert_eq!(parse_rational("-2").unwrap(), q(-2, 1));
        assert!(parse_rational("x").is_err());
        assert!(parse_rational("1.").is_err());
        assert_eq!(format_rational(&q(6, 4)), "3/2");
        assert_eq!(format_rational(&q(4, 2)), "2");
    }
}
