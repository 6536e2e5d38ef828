//! Exact rational scalars over the ground field.
//!
//! Everything in this crate is computed over the rationals; no floating
//! point appears anywhere. Values are kept in lowest terms with positive
//! denominator by the underlying representation.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar, always in lowest terms with positive denominator.
pub type Scalar = BigRational;

/// Scalar from an integer.
pub fn from_int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Scalar `p/q`, reduced. Panics if `q == 0`.
pub fn ratio(p: i64, q: i64) -> Scalar {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

/// The zero scalar.
pub fn zero() -> Scalar {
    BigRational::zero()
}

/// The unit scalar.
pub fn one() -> Scalar {
    BigRational::one()
}

/// `(-1)^k` as a scalar.
pub fn neg_one_pow(k: i64) -> Scalar {
    if k.rem_euclid(2) == 0 {
        one()
    } else {
        -one()
    }
}

/// `n!` as a scalar.
pub fn factorial(n: usize) -> Scalar {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    BigRational::from_integer(acc)
}

/// Binomial coefficient `C(n, k)` as a scalar.
pub fn binomial(n: usize, k: usize) -> Scalar {
    if k > n {
        return zero();
    }
    let mut acc = BigRational::one();
    for i in 0..k {
        acc *= BigRational::new(BigInt::from(n - i), BigInt::from(i + 1));
    }
    acc
}

/// Parses a rational written as `p/q` or a bare integer `p`.
pub fn parse(text: &str) -> Result<Scalar> {
    let s = text.trim();
    let (num, den) = match s.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (s, "1"),
    };
    let p: BigInt = num
        .parse()
        .map_err(|_| Error::Argument(format!("invalid rational `{text}`")))?;
    let q: BigInt = den
        .parse()
        .map_err(|_| Error::Argument(format!("invalid rational `{text}`")))?;
    if q.is_zero() {
        return Err(Error::Argument(format!("zero denominator in `{text}`")));
    }
    Ok(BigRational::new(p, q))
}

/// Renders a rational as `p/q` (always with explicit denominator).
pub fn render(x: &Scalar) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

/// Absolute value.
pub fn abs(x: &Scalar) -> Scalar {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render_round_trip() {
        for s in ["3/4", "-7/2", "0/1", "5/1"] {
            let x = parse(s).unwrap();
            assert_eq!(render(&x), s.replace("0/1", "0/1"));
        }
        assert_eq!(parse("6/8").unwrap(), ratio(3, 4));
        assert_eq!(parse("5").unwrap(), from_int(5));
        assert_eq!(parse("-5 / 10").unwrap(), ratio(-1, 2));
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse("1/0").is_err());
        assert!(parse("a/b").is_err());
        assert!(parse("1.5").is_err());
    }

    #[test]
    fn factorial_and_binomial() {
        assert_eq!(factorial(0), one());
        assert_eq!(factorial(5), from_int(120));
        assert_eq!(binomial(5, 2), from_int(10));
        assert_eq!(binomial(3, 5), zero());
    }

    #[test]
    fn neg_one_pow_parity() {
        assert_eq!(neg_one_pow(0), one());
        assert_eq!(neg_one_pow(3), -one());
        assert_eq!(neg_one_pow(-1), -one());
        assert_eq!(neg_one_pow(-2), one());
    }
}
