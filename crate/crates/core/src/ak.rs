//! The extremal families `A_k`, their exact sizes and two-sided bounds, and
//! derangement counts.
//!
//! `A_k` (for fixed `n`, `t`) is the set of permutations fixing at least
//! `t + k` of the indices `1..=t+2k`. Translating by permutations on both
//! sides gives the double cosets `σ A_k τ`, which are handled here through
//! their "anchor": the partial permutation `{(τ⁻¹(j), σ(j)) : j ≤ t+2k}`.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{binomial, factorial, rat_from_uint};
use crate::interval::{self, Interval};
use crate::perm::{all_permutations, next_permutation, Cell, PartialPermutation, Permutation};

/// Default ceiling on `n` for materializing all of `Σ_n`.
pub const ENUMERATION_CAP: usize = 9;

/// Ground parameters shared by the bound calculators.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Parameters {
    pub n: usize,
    pub t: usize,
    pub u: usize,
    pub q: Option<usize>,
    #[serde(with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub eps: Option<BigRational>,
    #[serde(with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub delta: Option<BigRational>,
    #[serde(with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub big_m: Option<BigRational>,
}

mod opt_rational {
    use num_rational::BigRational;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(x: &Option<BigRational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_str(&crate::exact::format_rational(v)),
            None => s.serialize_none(),
        }
    }
}

impl Parameters {
    pub fn new(n: usize, t: usize) -> Result<Self> {
        if t == 0 || t > n {
            return Err(Error::OutOfRange(format!("need 1 <= t <= n, got n = {n}, t = {t}")));
        }
        Ok(Parameters {
            n,
            t,
            u: n - t,
            q: None,
            eps: None,
            delta: None,
            big_m: None,
        })
    }

    pub fn with_q(mut self, q: usize) -> Result<Self> {
        if q < self.t || q > self.n {
            return Err(Error::OutOfRange(format!(
                "need t <= q <= n, got q = {q} with t = {}, n = {}",
                self.t, self.n
            )));
        }
        self.q = Some(q);
        Ok(self)
    }

    /// Largest valid `k`, i.e. `⌊(n − t)/2⌋`.
    pub fn max_k(&self) -> usize {
        self.u / 2
    }
}

fn check_k(n: usize, t: usize, k: usize) -> Result<()> {
    if t > n {
        return Err(Error::OutOfRange(format!("t = {t} exceeds n = {n}")));
    }
    if 2 * k > n - t {
        return Err(Error::OutOfRange(format!(
            "k = {k} exceeds (n - t)/2 = {}",
            (n - t) / 2
        )));
    }
    Ok(())
}

/// Membership test and enumerator for `A_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AkFamily {
    pub n: usize,
    pub t: usize,
    pub k: usize,
}

/// Validates `k` and returns the family descriptor.
pub fn build_ak(n: usize, t: usize, k: usize) -> Result<AkFamily> {
    check_k(n, t, k)?;
    Ok(AkFamily { n, t, k })
}

impl AkFamily {
    /// Number of leading indices inspected, `t + 2k`.
    pub fn window(&self) -> usize {
        self.t + 2 * self.k
    }

    pub fn contains(&self, p: &Permutation) -> bool {
        if p.n() != self.n {
            return false;
        }
        let fixed = (1..=self.window()).filter(|&i| p.apply(i) == i).count();
        fixed >= self.t + self.k
    }

    /// All members in lexicographic order; refuses above `cap`.
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Permutation>> {
        if self.n > cap {
            return Err(Error::Budget(format!(
                "enumeration of Σ_{} exceeds the cap n <= {cap}",
                self.n
            )));
        }
        let mut out = Vec::new();
        let mut cur: Vec<usize> = (1..=self.n).collect();
        loop {
            let fixed = (0..self.window()).filter(|&i| cur[i] == i + 1).count();
            if fixed >= self.t + self.k {
                out.push(Permutation::from_images(cur.clone())?);
            }
            if !next_permutation(&mut cur) {
                break;
            }
        }
        Ok(out)
    }

    /// The anchor of `A_k` itself: the diagonal cells `(j, j)`, `j ≤ t+2k`.
    pub fn anchor(&self) -> PartialPermutation {
        PartialPermutation::new(self.n, (1..=self.window()).map(|j| Cell::new(j, j)))
            .expect("diagonal is a partial permutation")
    }
}

/// Anchor of the translate `σ A_k τ` (elements `σ ∘ π ∘ τ` with `π ∈ A_k`):
/// a permutation lies in the translate iff it contains at least `t + k`
/// cells of the returned set.
pub fn translate_anchor(sigma: &Permutation, tau: &Permutation, window: usize) -> PartialPermutation {
    let n = sigma.n();
    let tau_inv = tau.inverse();
    PartialPermutation::new(n, (1..=window).map(|j| Cell::new(tau_inv.apply(j), sigma.apply(j))))
        .expect("image of a diagonal under a bijection is a partial permutation")
}

/// Membership in `σ A_k τ`.
pub fn in_translate(p: &Permutation, sigma: &Permutation, tau: &Permutation, t: usize, k: usize) -> bool {
    let anchor = translate_anchor(sigma, tau, t + 2 * k);
    p.to_partial().meet(&anchor) >= t + k
}

/// Exact `|A_k|` by inclusion–exclusion over the exactly-fixed part of the window.
pub fn ak_size_exact(n: usize, t: usize, k: usize) -> Result<BigUint> {
    check_k(n, t, k)?;
    let s = t + 2 * k;
    let mut total = BigUint::zero();
    for j in t + k..=s {
        // Permutations fixing a given j-subset of the window and none of the other s - j window points.
        let mut signed = BigInt::zero();
        for i in 0..=s - j {
            let term = BigInt::from(binomial((s - j) as u64, i as u64) * factorial((n - j - i) as u64));
            if i % 2 == 0 {
                signed += term;
            } else {
                signed -= term;
            }
        }
        let count = signed
            .to_biguint()
            .ok_or_else(|| Error::Internal("negative inclusion-exclusion count".into()))?;
        total += binomial(s as u64, j as u64) * count;
    }
    Ok(total)
}

/// The two closed-form bounds on `|A_k|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AkBounds {
    /// May be negative for small `n`, hence signed.
    #[serde(serialize_with = "ser_bigint")]
    pub lower: BigInt,
    #[serde(with = "crate::exact::decimal")]
    pub upper: BigUint,
}

fn ser_bigint<S: serde::Serializer>(x: &BigInt, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&x.to_string())
}

/// `upper = C(t+2k, k)(n−t−k)!`,
/// `lower = C(t+2k, t+k)(n−t−k)! − (t+k+1)·C(t+2k, t+k+1)(n−t−k−1)!`.
pub fn ak_size_bounds(n: usize, t: usize, k: usize) -> Result<AkBounds> {
    check_k(n, t, k)?;
    let s = (t + 2 * k) as u64;
    let rest = (n - t - k) as u64;
    let upper = binomial(s, k as u64) * factorial(rest);
    let main = BigInt::from(binomial(s, (t + k) as u64) * factorial(rest));
    let next_binom = binomial(s, (t + k + 1) as u64);
    let correction = if next_binom.is_zero() || rest == 0 {
        BigUint::zero()
    } else {
        BigUint::from(t + k + 1) * next_binom * factorial(rest - 1)
    };
    Ok(AkBounds {
        lower: main - BigInt::from(correction),
        upper,
    })
}

/// `max_k |A_k|` and the smallest maximizing `k`.
pub fn max_ak_size(n: usize, t: usize) -> Result<(usize, BigUint)> {
    check_k(n, t, 0)?;
    let mut best = (0, ak_size_exact(n, t, 0)?);
    for k in 1..=(n - t) / 2 {
        let v = ak_size_exact(n, t, k)?;
        if v > best.1 {
            best = (k, v);
        }
    }
    Ok(best)
}

/// Number of derangements of `m` symbols, `Σ_j (−1)^j m!/j!`.
pub fn derangement_count(m: usize) -> BigUint {
    let mut acc = BigInt::zero();
    let mut term = BigInt::from(factorial(m as u64)); // m!/j! for j = 0
    for j in 0..=m {
        if j > 0 {
            term /= BigInt::from(j);
        }
        if j % 2 == 0 {
            acc += &term;
        } else {
            acc -= &term;
        }
    }
    acc.to_biguint().expect("derangement count is nonnegative")
}

/// Derangements by brute force over `Σ_m`.
pub fn derangement_count_enumerated(m: usize) -> BigUint {
    BigUint::from(all_permutations(m).iter().filter(|p| p.fixed_points() == 0).count())
}

/// Enclosure of `m!/e − 1`; `D(m)` is at least its upper endpoint.
pub fn derangement_lower_estimate(m: usize) -> Interval {
    interval::e()
        .recip()
        .scale(&rat_from_uint(&factorial(m as u64)))
        .sub(&Interval::point(BigRational::one()))
}

/// True when `D(m) ≥ m!/e − 1` is proven by the enclosure.
pub fn derangement_bound_holds(m: usize) -> bool {
    let d = Interval::from_uint(&derangement_count(m));
    derangement_lower_estimate(m).certainly_le(&d)
}
