//! Exact integer and rational helpers: factorials, binomials, powers and
//! parsing/printing of rationals.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative count.
pub type BigCount = BigUint;

pub fn factorial(m: u64) -> BigUint {
    let mut acc = BigUint::one();
    for i in 2..=m {
        acc *= i;
    }
    acc
}

/// `m!` for a possibly negative `m`; negative arguments give `None`.
pub fn factorial_signed(m: i64) -> Option<BigUint> {
    (m >= 0).then(|| factorial(m as u64))
}

/// Binomial coefficient, zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Binomial coefficient with signed arguments; zero outside `0 <= k <= n`.
pub fn binomial_signed(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        BigUint::zero()
    } else {
        binomial(n as u64, k as u64)
    }
}

pub fn pow_u(base: u64, exp: u64) -> BigUint {
    num_traits::pow(BigUint::from(base), exp as usize)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_uint(n: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(n.clone()))
}

/// Integer power of a rational, negative exponents allowed (base must be nonzero then).
pub fn rat_pow(base: &BigRational, exp: i64) -> BigRational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), (-exp) as usize)
    }
}

pub fn floor_to_int(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

pub fn ceil_to_int(x: &BigRational) -> BigInt {
    x.ceil().to_integer()
}

/// Smallest integer `c >= 0` with `c^q >= x` for a nonnegative rational `x`.
pub fn ceil_root(x: &BigRational, q: u32) -> BigUint {
    assert!(q >= 1);
    if !x.is_positive() {
        return BigUint::zero();
    }
    let num = x.numer().magnitude().clone();
    let den = x.denom().magnitude().clone();
    let mut c = (&num / &den).nth_root(q);
    // c^q * den >= num
    while num_traits::pow(c.clone(), q as usize) * &den < num {
        c += 1u32;
    }
    while !c.is_zero() && num_traits::pow(&c - 1u32, q as usize) * &den >= num {
        c -= 1u32;
    }
    c
}

/// Parses `"3"`, `"-2/7"` or a plain decimal like `"0.125"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a rational number: {s:?}"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let negative = int_part.starts_with('-');
        let int_digits = int_part.trim_start_matches(['-', '+']);
        if !frac_part.chars().all(|c| c.is_ascii_digit()) || frac_part.is_empty() {
            return Err(bad());
        }
        let whole: BigInt = if int_digits.is_empty() {
            BigInt::zero()
        } else {
            int_digits.parse().map_err(|_| bad())?
        };
        let frac: BigInt = frac_part.parse().map_err(|_| bad())?;
        let scale = num_traits::pow(BigInt::from(10), frac_part.len());
        let mut value = BigRational::new(whole * &scale + frac, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let p: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(p))
}

/// Canonical `p/q` (or `p` when integral) rendering.
pub fn format_rational(x: &BigRational) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Best-effort float conversion, for human-facing report fields only.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    if let Some(v) = x.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale down huge numerators/denominators by bit length.
    let nb = x.numer().bits() as i64;
    let db = x.denom().bits() as i64;
    let shift_n = (nb - 900).max(0) as u64;
    let shift_d = (db - 900).max(0) as u64;
    let n = (x.numer() >> shift_n).to_f64().unwrap_or(f64::NAN);
    let d = (x.denom() >> shift_d).to_f64().unwrap_or(f64::NAN);
    n / d * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

pub fn uint_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

/// `a / b` as an exact rational of two counts.
pub fn ratio_of(a: &BigUint, b: &BigUint) -> BigRational {
    Ratio::new(BigInt::from(a.clone()), BigInt::from(b.clone()))
}

/// `|x|` rounded toward zero to an `u64`, saturating.
pub fn to_u64_saturating(x: &BigUint) -> u64 {
    x.to_u64().unwrap_or(u64::MAX)
}

/// Exact integer square root floor.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Decimal-string serde adapter for `BigUint` (counts overflow JSON numbers).
pub mod decimal {
    use num_bigint::BigUint;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Serde adapter rendering a rational as `"p/q"`.
pub mod rational_str {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_rational(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse_rational(&s).map_err(serde::de::Error::custom)
    }
}
