//! Elementary estimates on binomials and factorials, checked with exact
//! rationals or rigorous enclosures, and the `f(j) = C(t,j)(u−j)!` profile.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, rat_from_uint, rat_pow};
use crate::interval::{self, Interval};

/// Which elementary inequality to evaluate, with its arguments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementaryBound {
    /// `C(n,k) ≤ (en/k)^k` for `n ≥ k ≥ 0` (the right side is 1 at `k = 0`).
    Binom { n: u64, k: u64 },
    /// `n!/k! ≥ (n/e)^(n−k)` for `n ≥ k ≥ 1`.
    Factorial { n: u64, k: u64 },
    /// `(x/b − 1)^(b−a) C(x,a) < C(x,b) < (x/a)^(b−a) C(x,a)` for `1 ≤ a < b`, `x ≥ 2b`.
    BinomRatio { a: u64, b: u64, x: u64 },
    /// `C(a+b,b)/C(a,b) < exp(b²/(a−b+1))` for `a ≥ b ≥ 1`.
    CloseBinomial { a: u64, b: u64 },
}

impl ElementaryBound {
    pub fn name(&self) -> &'static str {
        match self {
            ElementaryBound::Binom { .. } => "binom_bound",
            ElementaryBound::Factorial { .. } => "factorial_bound",
            ElementaryBound::BinomRatio { .. } => "binom_ratio",
            ElementaryBound::CloseBinomial { .. } => "close_binomial",
        }
    }
}

/// Outcome of an elementary check. `sides` lists the compared quantities in
/// the order they appear in the inequality; each is an enclosure (a point
/// interval when exact).
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub which: &'static str,
    pub holds: bool,
    pub sides: Vec<SideValue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SideValue {
    pub label: &'static str,
    pub lo: String,
    pub hi: String,
    pub approx: f64,
}

impl SideValue {
    fn of(label: &'static str, x: &Interval) -> Self {
        SideValue {
            label,
            lo: x.lo_string(),
            hi: x.hi_string(),
            approx: x.midpoint_f64(),
        }
    }
}

fn uint_iv(x: &BigUint) -> Interval {
    Interval::from_uint(x)
}

fn rat_iv(x: BigRational) -> Interval {
    Interval::point(x)
}

fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Evaluates one elementary inequality. A `true` result is a proof: every
/// transcendental side is enclosed and the comparison uses the unfavourable
/// endpoint. Inputs outside the hypothesis give [`Error::Hypothesis`].
pub fn elementary_bound_check(which: ElementaryBound) -> Result<BoundCheck> {
    match which {
        ElementaryBound::Binom { n, k } => {
            if k > n {
                return Err(Error::Hypothesis(format!("binom_bound needs n >= k, got n={n}, k={k}")));
            }
            let lhs = uint_iv(&binomial(n, k));
            let rhs = if k == 0 {
                rat_iv(BigRational::one())
            } else {
                interval::e().scale(&q(n, k)).powi(k as i64)
            };
            Ok(BoundCheck {
                which: which.name(),
                holds: lhs.certainly_le(&rhs),
                sides: vec![SideValue::of("binom", &lhs), SideValue::of("power", &rhs)],
            })
        }
        ElementaryBound::Factorial { n, k } => {
            if k == 0 || k > n {
                return Err(Error::Hypothesis(format!(
                    "factorial_bound needs n >= k >= 1, got n={n}, k={k}"
                )));
            }
            let lhs = rat_iv(rat_from_uint(&factorial(n)) / rat_from_uint(&factorial(k)));
            let rhs = interval::e().recip().scale(&q(n, 1)).powi((n - k) as i64);
            Ok(BoundCheck {
                which: which.name(),
                holds: rhs.certainly_le(&lhs),
                sides: vec![SideValue::of("falling_product", &lhs), SideValue::of("power", &rhs)],
            })
        }
        ElementaryBound::BinomRatio { a, b, x } => {
            if a == 0 || a >= b || x < 2 * b {
                return Err(Error::Hypothesis(format!(
                    "binom_ratio needs 1 <= a < b and x >= 2b, got a={a}, b={b}, x={x}"
                )));
            }
            let cxa = rat_from_uint(&binomial(x, a));
            let cxb = rat_from_uint(&binomial(x, b));
            let e = (b - a) as i64;
            let lower = rat_pow(&(q(x, b) - BigRational::one()), e) * &cxa;
            let upper = rat_pow(&q(x, a), e) * &cxa;
            let holds = lower < cxb && cxb < upper;
            Ok(BoundCheck {
                which: which.name(),
                holds,
                sides: vec![
                    SideValue::of("lower", &rat_iv(lower)),
                    SideValue::of("binom", &rat_iv(cxb)),
                    SideValue::of("upper", &rat_iv(upper)),
                ],
            })
        }
        ElementaryBound::CloseBinomial { a, b } => {
            if b == 0 || b > a {
                return Err(Error::Hypothesis(format!(
                    "close_binomial needs a >= b >= 1, got a={a}, b={b}"
                )));
            }
            let ratio = rat_from_uint(&binomial(a + b, b)) / rat_from_uint(&binomial(a, b));
            let lhs = rat_iv(ratio);
            let rhs = interval::exp(&q(b * b, a - b + 1));
            Ok(BoundCheck {
                which: which.name(),
                holds: lhs.certainly_lt(&rhs),
                sides: vec![SideValue::of("ratio", &lhs), SideValue::of("exp", &rhs)],
            })
        }
    }
}

/// `f(j) = C(t, j)·(u − j)!`; zero once `j > u` or `j > t`.
pub fn f_value(t: u64, u: u64, j: u64) -> BigUint {
    if j > u {
        return BigUint::zero();
    }
    binomial(t, j) * factorial(u - j)
}

/// `f(j)/f(j+1) = (j+1)(u−j)/(t−j)`, defined for `j < min(t, u)`.
pub fn f_step_ratio(t: u64, u: u64, j: u64) -> Result<BigRational> {
    if j >= t || j >= u {
        return Err(Error::OutOfRange(format!(
            "need j < min(t, u), got j={j}, t={t}, u={u}"
        )));
    }
    Ok(q((j + 1) * (u - j), t - j))
}

#[derive(Debug, Clone, Serialize)]
pub struct ArgmaxTable {
    pub j0: u64,
    pub table: Vec<FRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FRow {
    pub j: u64,
    #[serde(with = "crate::exact::decimal")]
    pub value: BigUint,
}

/// Exhaustive argmax of `f` over `j ∈ [0, ⌊u/2⌋]`, smallest index on ties.
pub fn f_argmax_j0(t: u64, u: u64) -> Result<ArgmaxTable> {
    if t == 0 || u == 0 {
        return Err(Error::OutOfRange(format!("need t, u >= 1, got t={t}, u={u}")));
    }
    let table: Vec<FRow> = (0..=u / 2)
        .map(|j| FRow {
            j,
            value: f_value(t, u, j),
        })
        .collect();
    let mut j0 = 0;
    for row in &table {
        if row.value > table[j0 as usize].value {
            j0 = row.j;
        }
    }
    Ok(ArgmaxTable { j0, table })
}

/// `Σ_{j ≤ ⌊u/10⌋} f(j)` against `√(t/u)·max_{j ≤ u} f(j)`.
///
/// The normalized ratio is irrational in general, so it is returned both as
/// an exact square and as an enclosure.
#[derive(Debug, Clone, Serialize)]
pub struct SumRatio {
    pub upper_index: u64,
    #[serde(with = "crate::exact::decimal")]
    pub sum: BigUint,
    #[serde(with = "crate::exact::decimal")]
    pub max: BigUint,
    pub argmax: u64,
    /// `(sum/max)²·u/t`, exact.
    #[serde(with = "crate::exact::rational_str")]
    pub ratio_squared: BigRational,
    pub ratio_lo: String,
    pub ratio_hi: String,
    pub ratio_approx: f64,
}

pub fn sum_f_ratio(t: u64, u: u64) -> Result<SumRatio> {
    if u < 10 || t == 0 {
        return Err(Error::OutOfRange(format!("need u >= 10 and t >= 1, got t={t}, u={u}")));
    }
    // Floor of 0.1u.
    let upper_index = u / 10;
    let sum: BigUint = (0..=upper_index).map(|j| f_value(t, u, j)).sum();
    let mut max = BigUint::zero();
    let mut argmax = 0;
    for j in 0..=u {
        let v = f_value(t, u, j);
        if v > max {
            max = v;
            argmax = j;
        }
    }
    let plain = rat_from_uint(&sum) / rat_from_uint(&max);
    let ratio_squared = &plain * &plain * q(u, t);
    let ratio = interval::sqrt(&ratio_squared);
    Ok(SumRatio {
        upper_index,
        sum,
        max,
        argmax,
        ratio_squared,
        ratio_lo: ratio.lo_string(),
        ratio_hi: ratio.hi_string(),
        ratio_approx: ratio.midpoint_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_examples_hold() {
        let c = elementary_bound_check(ElementaryBound::Binom { n: 4, k: 2 }).unwrap();
        assert!(c.holds);
        assert!((c.sides[1].approx - 29.5562).abs() < 1e-3);
        let c = elementary_bound_check(ElementaryBound::Factorial { n: 5, k: 2 }).unwrap();
        assert!(c.holds);
        assert!((c.sides[1].approx - 6.2236).abs() < 1e-3);
        assert!(
            elementary_bound_check(ElementaryBound::Binom { n: 7, k: 0 })
                .unwrap()
                .holds
        );
    }

    #[test]
    fn binom_ratio_orientation() {
        // With b > a the chain holds strictly.
        let c = elementary_bound_check(ElementaryBound::BinomRatio { a: 2, b: 3, x: 10 }).unwrap();
        assert!(c.holds);
        // C(10,3)=120, C(10,2)=45: lower (10/3 − 1)·45 = 105, upper 5·45 = 225.
        assert_eq!(c.sides[0].lo, "105");
        assert_eq!(c.sides[1].lo, "120");
        assert_eq!(c.sides[2].lo, "225");
        // The reverse orientation is outside the hypothesis.
        assert!(matches!(
            elementary_bound_check(ElementaryBound::BinomRatio { a: 3, b: 2, x: 10 }),
            Err(Error::Hypothesis(_))
        ));
        assert!(matches!(
            elementary_bound_check(ElementaryBound::BinomRatio { a: 1, b: 3, x: 5 }),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn reversed_chain_fails_numerically() {
        // For a = 3, b = 2, x = 10 the chain would read 30 < 45 < 36: the
        // right inequality is false, which is why a < b is required.
        let c103 = rat_from_uint(&binomial(10, 3));
        let upper = rat_pow(&q(10, 3), -1) * &c103;
        assert_eq!(upper, q(36, 1));
        assert!(rat_from_uint(&binomial(10, 2)) > upper);
    }

    #[test]
    fn close_binomial_edges() {
        assert!(
            elementary_bound_check(ElementaryBound::CloseBinomial { a: 1, b: 1 })
                .unwrap()
                .holds
        );
        assert!(
            elementary_bound_check(ElementaryBound::CloseBinomial { a: 100, b: 5 })
                .unwrap()
                .holds
        );
        assert!(elementary_bound_check(ElementaryBound::CloseBinomial { a: 5, b: 0 }).is_err());
    }

    #[test]
    fn argmax_examples() {
        let r = f_argmax_j0(20, 5).unwrap();
        assert_eq!(r.j0, 2);
        let vals: Vec<String> = r.table.iter().map(|row| row.value.to_string()).collect();
        assert_eq!(vals, ["120", "480", "1140"]);
        assert_eq!(f_argmax_j0(1, 1).unwrap().j0, 0);
        let big = f_argmax_j0(10_000, 100).unwrap();
        assert!((50..=200).contains(&big.j0), "j0 = {}", big.j0);
    }

    #[test]
    fn step_ratio_nondecreasing() {
        for (t, u) in [(20u64, 5u64), (100, 10), (400, 20), (7, 12)] {
            let mut prev: Option<BigRational> = None;
            for j in 0..(u / 2).min(t) {
                let r = f_step_ratio(t, u, j).unwrap();
                let lhs = rat_from_uint(&f_value(t, u, j)) / rat_from_uint(&f_value(t, u, j + 1));
                assert_eq!(lhs, r);
                if let Some(p) = &prev {
                    assert!(*p <= r, "t={t} u={u} j={j}");
                }
                prev = Some(r);
            }
        }
    }

    #[test]
    fn sum_ratio_positive() {
        for (t, u) in [(400, 20), (100, 10)] {
            let s = sum_f_ratio(t, u).unwrap();
            assert!(s.ratio_squared > BigRational::zero());
            assert!(s.ratio_approx > 0.0);
        }
        assert!(sum_f_ratio(10, 9).is_err());
        let s = sum_f_ratio(400, 20).unwrap();
        assert_eq!(s.sum.to_string(), "562000363888803840000");
        assert_eq!(s.max.to_string(), "2788360983670896737872851072994080");
        assert_eq!(s.argmax, 20);
        let s = sum_f_ratio(100, 10).unwrap();
        assert_eq!(s.sum.to_string(), "39916800");
        assert_eq!(s.max.to_string(), "17310309456440");
        assert!((s.ratio_approx - 7.292070960548209e-7).abs() < 1e-15);
    }
}
