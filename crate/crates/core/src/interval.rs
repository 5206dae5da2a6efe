//! Outward-rounded rational interval arithmetic.
//!
//! Every transcendental quantity the crate compares against (powers of `e`,
//! `exp`, `log2`, square roots) is enclosed in an [`Interval`] whose endpoints
//! are exact rationals. Intermediate endpoints are rounded to a fixed number of
//! significant bits, always away from the true value, so an inequality decided
//! on the endpoints holds for the true value.

use std::fmt;
use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::exact::{format_rational, rational_to_f64};

/// Significant bits kept on each endpoint after rounding.
pub const PRECISION_BITS: u64 = 192;

const TAYLOR_TERMS: usize = 40;

#[derive(Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{:.12e}, {:.12e}]",
            rational_to_f64(&self.lo),
            rational_to_f64(&self.hi)
        )
    }
}

fn pow2(e: u64) -> BigInt {
    BigInt::one() << e
}

fn round_magnitude(x: &BigRational, up: bool) -> BigRational {
    debug_assert!(x.is_positive());
    let e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let shift = PRECISION_BITS as i64 - e;
    if shift >= 0 {
        let scale = pow2(shift as u64);
        let scaled = x * BigRational::from_integer(scale.clone());
        let q = if up { scaled.ceil() } else { scaled.floor() };
        q / BigRational::from_integer(scale)
    } else {
        let scale = pow2((-shift) as u64);
        let scaled = x / BigRational::from_integer(scale.clone());
        let q = if up { scaled.ceil() } else { scaled.floor() };
        q * BigRational::from_integer(scale)
    }
}

/// Largest representable value `<= x`.
pub fn round_down(x: &BigRational) -> BigRational {
    if x.is_zero() {
        x.clone()
    } else if x.is_positive() {
        round_magnitude(x, false)
    } else {
        -round_magnitude(&-x, true)
    }
}

/// Smallest representable value `>= x`.
pub fn round_up(x: &BigRational) -> BigRational {
    if x.is_zero() {
        x.clone()
    } else if x.is_positive() {
        round_magnitude(x, true)
    } else {
        -round_magnitude(&-x, false)
    }
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn point(x: BigRational) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn from_uint(x: &BigUint) -> Self {
        Interval::point(BigRational::from_integer(BigInt::from(x.clone())))
    }

    fn rounded(lo: BigRational, hi: BigRational) -> Self {
        Interval::new(round_down(&lo), round_up(&hi))
    }

    pub fn is_positive(&self) -> bool {
        self.lo.is_positive()
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval::rounded(&self.lo + &other.lo, &self.hi + &other.hi)
    }

    pub fn sub(&self, other: &Interval) -> Interval {
        Interval::rounded(&self.lo - &other.hi, &self.hi - &other.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi.clone(), -self.lo.clone())
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let c = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval::rounded(lo, hi)
    }

    pub fn scale(&self, k: &BigRational) -> Interval {
        self.mul(&Interval::point(k.clone()))
    }

    /// Reciprocal of an interval that excludes zero.
    pub fn recip(&self) -> Interval {
        assert!(
            self.lo.is_positive() || self.hi.is_negative(),
            "reciprocal of an interval containing zero"
        );
        Interval::rounded(self.hi.recip(), self.lo.recip())
    }

    pub fn div(&self, other: &Interval) -> Interval {
        self.mul(&other.recip())
    }

    /// Integer power of a positive interval; negative exponents allowed.
    pub fn powi(&self, exp: i64) -> Interval {
        assert!(self.is_positive(), "powi needs a positive interval");
        if exp < 0 {
            return self.powi(-exp).recip();
        }
        let mut result = Interval::point(BigRational::one());
        let mut base = self.clone();
        let mut e = exp as u64;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }

    /// Certainly `self < other`.
    pub fn certainly_lt(&self, other: &Interval) -> bool {
        self.hi < other.lo
    }

    /// Certainly `self <= other`.
    pub fn certainly_le(&self, other: &Interval) -> bool {
        self.hi <= other.lo
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn midpoint_f64(&self) -> f64 {
        (rational_to_f64(&self.lo) + rational_to_f64(&self.hi)) / 2.0
    }

    pub fn lo_string(&self) -> String {
        format_rational(&self.lo)
    }

    pub fn hi_string(&self) -> String {
        format_rational(&self.hi)
    }

    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }
}

/// `exp(y)` for `0 <= y <= 1/2` by Taylor series with remainder.
fn exp_small(y: &BigRational) -> Interval {
    debug_assert!(!y.is_negative());
    let mut lo_sum = BigRational::zero();
    let mut lo_term = BigRational::one();
    let mut hi_sum = BigRational::zero();
    let mut hi_term = BigRational::one();
    for k in 0..TAYLOR_TERMS {
        let next = BigRational::from_integer(BigInt::from(k + 1));
        lo_sum = round_down(&(lo_sum + &lo_term));
        lo_term = round_down(&(lo_term * y / &next));
        hi_sum = round_up(&(hi_sum + &hi_term));
        hi_term = round_up(&(hi_term * y / &next));
    }
    // The omitted tail is at most twice its first term when y <= 1/2.
    let tail = hi_term * BigRational::from_integer(BigInt::from(2));
    Interval::new(lo_sum, round_up(&(hi_sum + tail)))
}

/// Enclosure of `exp(x)` for any rational `x`.
pub fn exp(x: &BigRational) -> Interval {
    if x.is_negative() {
        return exp(&-x).recip();
    }
    // Halve until the argument is at most 1/2, then square back.
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut y = x.clone();
    let mut squarings = 0u32;
    while y > half {
        y /= BigRational::from_integer(BigInt::from(2));
        squarings += 1;
    }
    let mut result = exp_small(&y);
    for _ in 0..squarings {
        result = result.mul(&result);
    }
    result
}

/// Enclosure of Euler's number.
pub fn e() -> Interval {
    static E: OnceLock<Interval> = OnceLock::new();
    E.get_or_init(|| exp(&BigRational::one())).clone()
}

/// Enclosure of `log2(x)` for a positive rational `x`, accurate to about
/// `frac_bits` bits after the binary point.
pub fn log2(x: &BigRational, frac_bits: u32) -> Interval {
    assert!(x.is_positive(), "log2 of a nonpositive number");
    let two = BigRational::from_integer(BigInt::from(2));
    // Integer part.
    let mut int_part: i64 = x.numer().bits() as i64 - x.denom().bits() as i64;
    let scaled = |k: i64| -> BigRational {
        if k >= 0 {
            x / BigRational::from_integer(pow2(k as u64))
        } else {
            x * BigRational::from_integer(pow2((-k) as u64))
        }
    };
    let mut y = scaled(int_part);
    while y < BigRational::one() {
        int_part -= 1;
        y = scaled(int_part);
    }
    while y >= two {
        int_part += 1;
        y = scaled(int_part);
    }
    // Fractional bits by repeated squaring of an enclosure of y in [1, 2).
    let mut enc = Interval::point(y);
    let mut frac_lo = BigRational::zero();
    let mut weight = BigRational::one();
    for _ in 0..frac_bits {
        enc = enc.mul(&enc);
        weight /= &two;
        if enc.lo >= two {
            frac_lo += &weight;
            enc = Interval::rounded(&enc.lo / &two, &enc.hi / &two);
        } else if enc.hi < two {
            // bit is zero
        } else {
            // Enclosure straddles 2: stop, leaving the remaining width open.
            weight *= &two;
            break;
        }
    }
    let base = BigRational::from_integer(BigInt::from(int_part));
    let lo = &base + &frac_lo;
    let hi = lo.clone() + weight;
    Interval::new(lo, hi)
}

/// Enclosure of `sqrt(x)` for a nonnegative rational.
pub fn sqrt(x: &BigRational) -> Interval {
    assert!(!x.is_negative());
    if x.is_zero() {
        return Interval::point(BigRational::zero());
    }
    // sqrt(p/q) = sqrt(p*q*4^s)/(q*2^s)
    let s = PRECISION_BITS;
    let p = x.numer().magnitude();
    let q = x.denom().magnitude();
    let radicand = p * q * (BigUint::one() << (2 * s));
    let root = radicand.sqrt();
    let exact = &root * &root == radicand;
    let den = BigInt::from(q * (BigUint::one() << s));
    let lo = BigRational::new(BigInt::from(root.clone()), den.clone());
    let hi = if exact {
        lo.clone()
    } else {
        BigRational::new(BigInt::from(root + 1u32), den)
    };
    Interval::new(lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn e_enclosure_is_tight_and_correct() {
        let e = e();
        assert!(rational_to_f64(&e.lo) <= std::f64::consts::E + 1e-15);
        assert!(rational_to_f64(&e.hi) >= std::f64::consts::E - 1e-15);
        assert!(e.width() < rat(1, 1_000_000_000_000));
    }

    #[test]
    fn exp_matches_float_on_a_range() {
        for (p, q) in [(-7, 3), (0, 1), (1, 1000), (5, 2), (40, 1), (123, 7)] {
            let x = rat(p, q);
            let enc = exp(&x);
            let f = (p as f64 / q as f64).exp();
            assert!(rational_to_f64(&enc.lo) <= f * (1.0 + 1e-12));
            assert!(rational_to_f64(&enc.hi) >= f * (1.0 - 1e-12));
            assert!(enc.lo <= enc.hi);
        }
    }

    #[test]
    fn log2_of_powers_of_two_and_others() {
        let l = log2(&rat(8, 1), 40);
        assert!(l.contains(&rat(3, 1)));
        let l = log2(&rat(1, 4), 40);
        assert!(l.contains(&rat(-2, 1)));
        let l = log2(&rat(10, 1), 40);
        let f = 10f64.log2();
        assert!(rational_to_f64(&l.lo) <= f + 1e-12 && rational_to_f64(&l.hi) >= f - 1e-12);
        assert!(l.width() <= rat(1, 1 << 30));
    }

    #[test]
    fn sqrt_enclosure() {
        let s = sqrt(&rat(2, 1));
        assert!(s.lo < s.hi);
        assert!(s.lo.clone() * s.lo.clone() <= rat(2, 1));
        assert!(s.hi.clone() * s.hi.clone() >= rat(2, 1));
        let s = sqrt(&rat(9, 4));
        assert_eq!(s.lo, rat(3, 2));
        assert_eq!(s.hi, rat(3, 2));
    }

    #[test]
    fn rounding_is_directed() {
        let x = rat(1, 3);
        assert!(round_down(&x) <= x && x <= round_up(&x));
        let y = rat(-1, 3);
        assert!(round_down(&y) <= y && y <= round_up(&y));
    }
}
