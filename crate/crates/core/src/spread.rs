//! Spreadness: exact tests, maximal spread restrictions, and Monte-Carlo
//! estimates for random subsets containing a member.
//!
//! A family `F` is `r`-spread when every set `S` lies in at most an
//! `r^{-|S|}` fraction of the members. Only sets contained in some member can
//! violate this, so every test enumerates subsets of members.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};
use rand::Rng as _;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{format_rational, rational_to_f64};
use crate::family::Family;
use crate::interval::{self, Interval};
use crate::par::{self, Exec};
use crate::perm::{CellSet, PartialPermutation};

/// Default ceiling on the number of candidate sets `Σ 2^{|member|}`.
pub const DEFAULT_BUDGET: u64 = 1 << 24;

/// A set `S` with `|F[S]| > r^{-|S|}·|F|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    #[serde(serialize_with = "ser_pp")]
    pub set: PartialPermutation,
    pub count: usize,
    /// `r^{-|S|}·|F|`.
    #[serde(with = "crate::exact::rational_str")]
    pub threshold: BigRational,
}

pub(crate) fn ser_pp<S: serde::Serializer>(p: &PartialPermutation, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize as _;
    p.to_pairs().serialize(s)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpreadCertificate {
    #[serde(with = "crate::exact::rational_str")]
    pub r: BigRational,
    /// Every candidate `S` with `|S|` up to this value was checked and passed.
    pub verified_up_to: usize,
    pub witness_violation: Option<Violation>,
    pub candidates: usize,
}

impl SpreadCertificate {
    pub fn passed(&self) -> bool {
        self.witness_violation.is_none()
    }
}

fn check_r(r: &BigRational) -> Result<()> {
    if !r.is_positive() {
        return Err(Error::OutOfRange(format!(
            "r must be positive, got {}",
            format_rational(r)
        )));
    }
    Ok(())
}

fn check_budget(f: &Family, budget: u64) -> Result<()> {
    let mut total: u64 = 0;
    for m in f {
        let len = m.len() as u32;
        let part = if len >= 63 { u64::MAX } else { 1u64 << len };
        total = total.saturating_add(part);
        if total > budget {
            return Err(Error::Budget(format!(
                "subset enumeration needs more than {budget} candidate sets"
            )));
        }
    }
    Ok(())
}

/// `|F[S]|` for every nonempty `S` contained in some member.
fn subset_counts(f: &Family) -> HashMap<CellSet, usize> {
    let mut counts: HashMap<CellSet, usize> = HashMap::new();
    for m in f {
        for s in m.subsets() {
            if !s.is_empty() {
                *counts.entry(s.cellset().clone()).or_insert(0) += 1;
            }
        }
    }
    counts
}

/// `r^0, r^1, …, r^max`.
fn powers(r: &BigRational, max: usize) -> Vec<BigRational> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = BigRational::one();
    for _ in 0..=max {
        out.push(acc.clone());
        acc *= r;
    }
    out
}

fn as_rat(x: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

/// Exhaustive `r`-spreadness test. The reported violation, if any, is the
/// smallest by `(|S|, lexicographic order)`.
pub fn is_r_spread(f: &Family, r: &BigRational, budget: u64) -> Result<SpreadCertificate> {
    check_r(r)?;
    if f.is_empty() {
        return Err(Error::Precondition("spreadness of an empty family is undefined".into()));
    }
    check_budget(f, budget)?;
    let counts = subset_counts(f);
    let max = f.max_member_size();
    let pw = powers(r, max);
    let total = as_rat(f.len());
    let mut worst: Option<(usize, &CellSet, usize)> = None;
    for (s, &c) in &counts {
        let size = s.len();
        if as_rat(c) * &pw[size] > total {
            let better = match &worst {
                None => true,
                Some((ws, wset, _)) => (size, s) < (*ws, *wset),
            };
            if better {
                worst = Some((size, s, c));
            }
        }
    }
    let candidates = counts.len();
    Ok(match worst {
        None => SpreadCertificate {
            r: r.clone(),
            verified_up_to: max,
            witness_violation: None,
            candidates,
        },
        Some((size, set, count)) => SpreadCertificate {
            r: r.clone(),
            verified_up_to: size - 1,
            witness_violation: Some(Violation {
                set: PartialPermutation::from_cellset(f.n(), set.clone())?,
                count,
                threshold: &total / &pw[size],
            }),
            candidates,
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TSpreadReport {
    pub holds: bool,
    pub checked: usize,
    #[serde(serialize_with = "ser_opt_pp")]
    pub failing_t: Option<PartialPermutation>,
    pub failing_certificate: Option<SpreadCertificate>,
}

fn ser_opt_pp<S: serde::Serializer>(p: &Option<PartialPermutation>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize as _;
    p.as_ref().map(PartialPermutation::to_pairs).serialize(s)
}

/// Checks that `F(T)` is `r`-spread for every `t`-set `T` contained in some
/// member, in lexicographic order of `T`; other `T` give an empty `F(T)`.
pub fn is_r_t_spread(f: &Family, r: &BigRational, t: usize, budget: u64) -> Result<TSpreadReport> {
    check_r(r)?;
    let mut ts: Vec<PartialPermutation> = f.iter().flat_map(|m| m.k_subsets(t)).collect();
    ts.sort();
    ts.dedup();
    for (i, tset) in ts.iter().enumerate() {
        let restricted = f.restrict(tset);
        let cert = is_r_spread(&restricted, r, budget)?;
        if !cert.passed() {
            return Ok(TSpreadReport {
                holds: false,
                checked: i + 1,
                failing_t: Some(tset.clone()),
                failing_certificate: Some(cert),
            });
        }
    }
    Ok(TSpreadReport {
        holds: true,
        checked: ts.len(),
        failing_t: None,
        failing_certificate: None,
    })
}

/// A maximal restriction `X ⊇ base` and the family `F(X)`.
#[derive(Debug, Clone)]
pub struct SpreadRestriction {
    pub x: PartialPermutation,
    pub g: Family,
}

/// Grows `base` to a set `X` that is maximal under inclusion subject to
/// `|F(X)|·r^{|X|−|base|} ≥ |F(base)|`.
///
/// Single cells are tried first in lexicographic order. When no single cell
/// can be added, larger extensions are searched (smallest size, then
/// lexicographic) so that the result is genuinely maximal; maximality makes
/// `F(X)` `r`-spread.
pub fn find_spread_restriction(
    f: &Family,
    r: &BigRational,
    base: &PartialPermutation,
    budget: u64,
) -> Result<SpreadRestriction> {
    check_r(r)?;
    let target = f.count_containing(base);
    if target == 0 {
        return Err(Error::Precondition(format!("no member contains the base set {base:?}")));
    }
    let target_q = as_rat(target);
    let pw = powers(r, f.max_member_size());
    let admissible = |count: usize, extra: usize, pw: &Vec<BigRational>| -> bool {
        count > 0 && as_rat(count) * &pw[extra] >= target_q
    };

    let mut x = base.clone();
    loop {
        let current = f.restrict(&x);
        let grown = x.len() - base.len();
        // Single cells, lexicographic.
        let support = current.support();
        let mut extended = false;
        for cell in support.iter() {
            let mut cand = x.cellset().clone();
            cand.insert(cell);
            let count = current.iter().filter(|m| m.cellset().contains(cell)).count();
            if admissible(count, grown + 1, &pw) {
                x = PartialPermutation::from_cellset(f.n(), cand)?;
                extended = true;
                break;
            }
        }
        if extended {
            continue;
        }
        // Multi-cell extensions.
        check_budget(&current, budget)?;
        let counts = subset_counts(&current);
        let mut best: Option<(usize, &CellSet)> = None;
        for (y, &c) in &counts {
            let size = y.len();
            if size < 2 || !admissible(c, grown + size, &pw) {
                continue;
            }
            if best.is_none_or(|(bs, by)| (size, y) < (bs, by)) {
                best = Some((size, y));
            }
        }
        match best {
            Some((_, y)) => {
                let cand = x.cellset().union(y);
                x = PartialPermutation::from_cellset(f.n(), cand)?;
            }
            None => break,
        }
    }
    let g = f.restrict(&x);
    Ok(SpreadRestriction { x, g })
}

/// Inclusion probability and seed for a random subset of the cell universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSubsetSpec {
    pub p: BigRational,
    pub seed: u64,
}

impl RandomSubsetSpec {
    pub fn new(p: BigRational, seed: u64) -> Result<Self> {
        if !p.is_positive() || p > BigRational::one() {
            return Err(Error::OutOfRange(format!(
                "p must lie in (0, 1], got {}",
                format_rational(&p)
            )));
        }
        if p.denom().to_u64().is_none() {
            return Err(Error::OutOfRange("denominator of p must fit in 64 bits".into()));
        }
        Ok(RandomSubsetSpec { p, seed })
    }

    fn numer_denom(&self) -> (u64, u64) {
        (
            self.p.numer().to_u64().expect("p <= 1 so the numerator fits"),
            self.p.denom().to_u64().expect("checked on construction"),
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadLemmaEstimate {
    #[serde(with = "crate::exact::rational_str")]
    pub empirical_prob: BigRational,
    pub hits: u64,
    pub trials: u64,
    pub seed: u64,
    #[serde(with = "crate::exact::rational_str")]
    pub p: BigRational,
    #[serde(with = "crate::exact::rational_str")]
    pub r: BigRational,
    pub m: u64,
    /// Largest member size.
    pub uniformity: usize,
    /// Enclosure of `1 − uniformity·(5/log₂(r·p/m))^m`.
    pub spread_bound_lo: String,
    pub spread_bound_hi: String,
    pub spread_bound_approx: f64,
    /// Binomial standard deviation at the bound, clamped to `[0, 1]`.
    pub sigma: f64,
    #[serde(skip)]
    pub spread_bound: Interval,
}

impl SpreadLemmaEstimate {
    /// `empirical ≥ bound − 3σ`, tested against the upper end of the bound's enclosure.
    pub fn within_three_sigma(&self) -> bool {
        let emp = rational_to_f64(&self.empirical_prob);
        let bound_hi = rational_to_f64(&self.spread_bound.hi);
        emp >= bound_hi - 3.0 * self.sigma
    }
}

/// `1 − n·(5/log₂(r·δ))^m` with `δ = p/m`.
pub fn spread_lemma_bound(uniformity: usize, r: &BigRational, p: &BigRational, m: u64) -> Result<Interval> {
    if m == 0 {
        return Err(Error::OutOfRange("m must be positive".into()));
    }
    let rd = r * p / BigRational::from_integer(BigInt::from(m));
    if rd <= BigRational::one() {
        return Err(Error::OutOfRange(format!(
            "r·p/m = {} must exceed 1",
            format_rational(&rd)
        )));
    }
    let lg = interval::log2(&rd, 64);
    let five = Interval::point(BigRational::from_integer(BigInt::from(5)));
    let term = five
        .div(&lg)
        .powi(m as i64)
        .scale(&BigRational::from_integer(BigInt::from(uniformity)));
    Ok(Interval::point(BigRational::one()).sub(&term))
}

/// Trials per derived-seed chunk.
const CHUNK: u64 = 1024;

/// Draws `trials` independent `p`-random subsets of the support of `f` and
/// counts those containing a member. Trial chunks use seeds derived from
/// `spec.seed` and the chunk index, so the count does not depend on `exec`.
pub fn sample_containment(f: &Family, spec: &RandomSubsetSpec, trials: u64, exec: Exec) -> u64 {
    let support: Vec<usize> = f.support().iter().collect();
    let universe = f.n() * f.n();
    let (num, den) = spec.numer_denom();
    let chunks = trials.div_ceil(CHUNK);
    let members: Vec<&CellSet> = f.iter().map(PartialPermutation::cellset).collect();
    let hits = par::map_indexed(exec, chunks as usize, |ci| {
        let mut rng = par::rng_from_seed(par::derive_seed(spec.seed, ci as u64));
        let this_chunk = CHUNK.min(trials - ci as u64 * CHUNK);
        let mut hits = 0u64;
        for _ in 0..this_chunk {
            let mut w = CellSet::empty(universe);
            for &cell in &support {
                if rng.random_range(0..den) < num {
                    w.insert(cell);
                }
            }
            if members.iter().any(|m| m.is_subset(&w)) {
                hits += 1;
            }
        }
        hits
    });
    hits.into_iter().sum()
}

/// Monte-Carlo estimate of the probability that a `p`-random subset contains
/// a member, next to the spread-lemma lower bound for spread parameter `r`
/// and exponent `m`.
pub fn spread_lemma_estimate(
    f: &Family,
    spec: &RandomSubsetSpec,
    trials: u64,
    r: &BigRational,
    m: u64,
    exec: Exec,
) -> Result<SpreadLemmaEstimate> {
    if f.is_empty() {
        return Err(Error::Precondition("family is empty".into()));
    }
    if trials == 0 {
        return Err(Error::OutOfRange("trials must be positive".into()));
    }
    let uniformity = f.max_member_size();
    let bound = spread_lemma_bound(uniformity, r, &spec.p, m)?;
    let hits = sample_containment(f, spec, trials, exec);
    let b = rational_to_f64(&bound.hi).clamp(0.0, 1.0);
    let sigma = (b * (1.0 - b) / trials as f64).sqrt();
    Ok(SpreadLemmaEstimate {
        empirical_prob: BigRational::new(BigInt::from(hits), BigInt::from(trials)),
        hits,
        trials,
        seed: spec.seed,
        p: spec.p.clone(),
        r: r.clone(),
        m,
        uniformity,
        spread_bound_lo: bound.lo_string(),
        spread_bound_hi: bound.hi_string(),
        spread_bound_approx: bound.midpoint_f64(),
        sigma,
        spread_bound: bound,
    })
}

/// A pair of disjoint members, one from each family.
#[derive(Debug, Clone, Serialize)]
pub struct DisjointPair {
    pub first_index: usize,
    pub second_index: usize,
    pub attempt: u64,
}

/// Splits the cell universe at random into `W₁` and its complement, looks for
/// a member of `g1` inside `W₁` and of `g2` inside `W₂`, and repeats up to
/// `max_attempts` times.
pub fn disjoint_pair_search(g1: &Family, g2: &Family, max_attempts: u64, seed: u64) -> Result<Option<DisjointPair>> {
    if g1.n() != g2.n() {
        return Err(Error::GroundMismatch {
            left: g1.n(),
            right: g2.n(),
        });
    }
    let universe = g1.n() * g1.n();
    let cells: Vec<usize> = g1.support().union(&g2.support()).iter().collect();
    for attempt in 0..max_attempts {
        let mut rng = par::rng_from_seed(par::derive_seed(seed, attempt));
        let mut w1 = CellSet::empty(universe);
        for &c in &cells {
            if rng.random_bool(0.5) {
                w1.insert(c);
            }
        }
        let a = g1.iter().position(|m| m.cellset().is_subset(&w1));
        let b = g2.iter().position(|m| m.cellset().is_disjoint(&w1));
        if let (Some(i), Some(j)) = (a, b) {
            let (x, y) = (&g1.members()[i], &g2.members()[j]);
            if x.meet(y) != 0 {
                return Err(Error::Internal("halves produced intersecting members".into()));
            }
            return Ok(Some(DisjointPair {
                first_index: i,
                second_index: j,
                attempt: attempt + 1,
            }));
        }
    }
    Ok(None)
}

/// Exact probability that a `p`-random subset contains at least one of
/// `count` pairwise disjoint singletons: `1 − (1 − p)^count`.
pub fn disjoint_singletons_probability(p: &BigRational, count: u32) -> BigRational {
    BigRational::one() - num_traits::pow(BigRational::one() - p, count as usize)
}
