//! Simplification to a fixpoint and the layered peeling `T_k`, `W_k`, with
//! the structural checks and the closed-form layer-size bounds.
//!
//! Simplification repeatedly applies two edits to a `t`-intersecting family:
//!
//! 1. drop a member that strictly contains another member (the smaller one
//!    already covers everything the larger one covers);
//! 2. replace a member by a proper subset when the family stays
//!    `t`-intersecting.
//!
//! For rule 2 each member is compared with every member including itself, so
//! a member never shrinks below `t` cells. Because `t`-intersection is
//! monotone under taking supersets, a member admits a shrinking proper subset
//! iff it admits one with a single cell removed; the fixpoint check uses that.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{binomial, pow_u, rat_from_uint};
use crate::family::Family;
use crate::par;
use crate::perm::PartialPermutation;

/// Order in which simplification edits are attempted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimplifyOrder {
    /// Members by (size descending, lexicographic); remove the lexicographically
    /// largest removable cell.
    Canonical,
    /// Member and cell order shuffled by a seeded generator.
    Randomized(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "edit", rename_all = "snake_case")]
pub enum Edit {
    Removed {
        #[serde(serialize_with = "crate::spread::ser_pp")]
        member: PartialPermutation,
        #[serde(serialize_with = "crate::spread::ser_pp")]
        contains: PartialPermutation,
    },
    Shrunk {
        #[serde(serialize_with = "crate::spread::ser_pp")]
        from: PartialPermutation,
        #[serde(serialize_with = "crate::spread::ser_pp")]
        to: PartialPermutation,
    },
}

#[derive(Debug, Clone)]
pub struct Simplified {
    pub family: Family,
    pub edits: Vec<Edit>,
}

fn check_input(s: &Family, t: usize) -> Result<()> {
    if let Some(i) = s.iter().position(|m| m.len() < t) {
        return Err(Error::Precondition(format!("member {i} has fewer than t = {t} cells")));
    }
    if let Some((i, j)) = s.first_weak_pair(t) {
        return Err(Error::Precondition(format!(
            "members {i} and {j} share fewer than t = {t} cells"
        )));
    }
    Ok(())
}

/// Rule 1 to exhaustion. Scans by (size, lex) and drops strict supersets.
fn drop_supersets(members: &mut Vec<PartialPermutation>, edits: &mut Vec<Edit>) {
    loop {
        let mut order: Vec<usize> = (0..members.len()).collect();
        order.sort_by(|&a, &b| (members[a].len(), &members[a]).cmp(&(members[b].len(), &members[b])));
        let mut victim = None;
        'scan: for &i in &order {
            for &j in &order {
                if i != j && members[j].len() < members[i].len() && members[j].is_subset(&members[i]) {
                    victim = Some((i, j));
                    break 'scan;
                }
            }
        }
        match victim {
            Some((i, j)) => {
                let contains = members[j].clone();
                let member = members.remove(i);
                edits.push(Edit::Removed { member, contains });
            }
            None => return,
        }
    }
}

/// Can member `i` lose `cell` while the family stays `t`-intersecting?
fn removable(members: &[PartialPermutation], i: usize, cell: usize, t: usize) -> bool {
    let smaller = members[i].without_cell(cell);
    if smaller.len() < t {
        return false;
    }
    members.iter().enumerate().all(|(j, m)| j == i || smaller.meet(m) >= t)
}

/// Simplifies to a fixpoint.
pub fn simplify(s: &Family, t: usize) -> Result<Family> {
    Ok(simplify_logged(s, t, SimplifyOrder::Canonical)?.family)
}

/// Simplifies to a fixpoint and records every edit.
pub fn simplify_logged(s: &Family, t: usize, order: SimplifyOrder) -> Result<Simplified> {
    check_input(s, t)?;
    let mut members: Vec<PartialPermutation> = s.members().to_vec();
    let mut edits = Vec::new();
    let mut rng = match order {
        SimplifyOrder::Randomized(seed) => Some(par::rng_from_seed(seed)),
        SimplifyOrder::Canonical => None,
    };
    loop {
        drop_supersets(&mut members, &mut edits);
        let mut idx: Vec<usize> = (0..members.len()).collect();
        match rng.as_mut() {
            None => idx.sort_by(|&a, &b| {
                members[b]
                    .len()
                    .cmp(&members[a].len())
                    .then_with(|| members[a].cmp(&members[b]))
            }),
            Some(r) => idx.shuffle(r),
        }
        let mut edit = None;
        'members: for &i in &idx {
            let mut cells = members[i].cellset().to_vec();
            match rng.as_mut() {
                None => cells.reverse(),
                Some(r) => cells.shuffle(r),
            }
            for c in cells {
                if removable(&members, i, c, t) {
                    edit = Some((i, c));
                    break 'members;
                }
            }
        }
        match edit {
            Some((i, c)) => {
                let to = members[i].without_cell(c);
                let from = std::mem::replace(&mut members[i], to.clone());
                edits.push(Edit::Shrunk { from, to });
            }
            None => break,
        }
    }
    Ok(Simplified {
        family: Family::new(s.n(), members)?,
        edits,
    })
}

/// Witness that a family is not simplified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NotSimplified {
    /// Member `outer` strictly contains member `inner`.
    Containment { outer: usize, inner: usize },
    /// Member `index` can lose `cell` and stay `t`-intersecting.
    Shrinkable { index: usize, cell: usize },
    /// Some pair meets in fewer than `t` cells, or a member is smaller than `t`.
    NotIntersecting,
}

/// Checks the fixpoint conditions: no containments, no shrinkable member,
/// and `t`-intersection.
pub fn check_simplified(s: &Family, t: usize) -> Option<NotSimplified> {
    if check_input(s, t).is_err() {
        return Some(NotSimplified::NotIntersecting);
    }
    let m = s.members();
    for i in 0..m.len() {
        for j in 0..m.len() {
            if i != j && m[j].len() < m[i].len() && m[j].is_subset(&m[i]) {
                return Some(NotSimplified::Containment { outer: i, inner: j });
            }
        }
    }
    for i in 0..m.len() {
        for c in m[i].cellset().iter() {
            if removable(m, i, c, t) {
                return Some(NotSimplified::Shrinkable { index: i, cell: c });
            }
        }
    }
    None
}

/// Layered decomposition produced by [`peel`]. Index `k` of both vectors
/// holds `T_k` and `W_k`, for `k = 0..=q−t`.
#[derive(Debug, Clone)]
pub struct PeelingResult {
    pub t: usize,
    pub q: usize,
    pub layers_t: Vec<Family>,
    pub layers_w: Vec<Family>,
    /// `(k, edit)`: edits made while producing `T_k`.
    pub provenance: Vec<(usize, Edit)>,
}

impl PeelingResult {
    pub fn top(&self) -> usize {
        self.q - self.t
    }

    pub fn w(&self, k: usize) -> &Family {
        &self.layers_w[k]
    }

    pub fn t_layer(&self, k: usize) -> &Family {
        &self.layers_t[k]
    }
}

/// `T_{q−t} = simplify(s)`; `W_k` = members of `T_k` with `t + k` cells;
/// `T_{k−1} = simplify(T_k ∖ W_k)`; finally `W_0 = T_0`.
pub fn peel(s: &Family, t: usize, q: usize) -> Result<PeelingResult> {
    peel_with(s, t, q, SimplifyOrder::Canonical)
}

pub fn peel_with(s: &Family, t: usize, q: usize, order: SimplifyOrder) -> Result<PeelingResult> {
    if q < t {
        return Err(Error::OutOfRange(format!("q = {q} is below t = {t}")));
    }
    if let Some(i) = s.iter().position(|m| m.len() > q) {
        return Err(Error::Precondition(format!("member {i} has more than q = {q} cells")));
    }
    let top = q - t;
    let mut layers_t = vec![Family::empty(s.n()); top + 1];
    let mut layers_w = vec![Family::empty(s.n()); top + 1];
    let mut provenance = Vec::new();
    let first = simplify_logged(s, t, order)?;
    provenance.extend(first.edits.into_iter().map(|e| (top, e)));
    let mut current = first.family;
    let mut k = top;
    loop {
        let size = t + k;
        let w = current.filter(|m| m.len() == size);
        layers_t[k] = current.clone();
        if k == 0 {
            layers_w[0] = current;
            break;
        }
        let rest = current.filter(|m| m.len() != size);
        layers_w[k] = w;
        let next = simplify_logged(&rest, t, order)?;
        provenance.extend(next.edits.into_iter().map(|e| (k - 1, e)));
        current = next.family;
        k -= 1;
    }
    Ok(PeelingResult {
        t,
        q,
        layers_t,
        layers_w,
        provenance,
    })
}

/// Result of comparing `F[T_k]` with `F[T_{k−1}] ∪ F[W_k]` for one probe family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageCheck {
    pub k: usize,
    /// Probe members covered by `T_k` but by neither `T_{k−1}` nor `W_k`.
    pub missing_right: Vec<usize>,
    /// Probe members covered by `T_{k−1}` or `W_k` but not by `T_k`.
    pub missing_left: Vec<usize>,
}

impl CoverageCheck {
    /// `F[T_k] ⊆ F[T_{k−1}] ∪ F[W_k]`.
    pub fn inclusion_holds(&self) -> bool {
        self.missing_right.is_empty()
    }

    pub fn equality_holds(&self) -> bool {
        self.missing_right.is_empty() && self.missing_left.is_empty()
    }
}

fn covers(s: &Family, x: &PartialPermutation) -> bool {
    s.iter().any(|m| m.is_subset(x))
}

/// Compares `probe[T_k]` with `probe[T_{k−1}] ∪ probe[W_k]` for `k ≥ 1`.
pub fn coverage_check(res: &PeelingResult, k: usize, probe: &Family) -> Result<CoverageCheck> {
    if k == 0 || k > res.top() {
        return Err(Error::OutOfRange(format!("k = {k} outside 1..={}", res.top())));
    }
    let mut missing_right = Vec::new();
    let mut missing_left = Vec::new();
    for (i, x) in probe.iter().enumerate() {
        let left = covers(&res.layers_t[k], x);
        let right = covers(&res.layers_t[k - 1], x) || covers(&res.layers_w[k], x);
        if left && !right {
            missing_right.push(i);
        }
        if right && !left {
            missing_left.push(i);
        }
    }
    Ok(CoverageCheck {
        k,
        missing_right,
        missing_left,
    })
}

/// A probe `X` with `|W_k(X)| > k^{t+k−|X|}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeViolation {
    #[serde(serialize_with = "crate::spread::ser_pp")]
    pub probe: PartialPermutation,
    pub count: usize,
    #[serde(with = "crate::exact::rational_str")]
    pub bound: BigRational,
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeReport {
    pub k: usize,
    pub probes: usize,
    pub violations: Vec<DegreeViolation>,
}

/// `k^{t+k−|X|}` as a rational (the exponent may be negative).
pub fn degree_bound(t: usize, k: usize, x_len: usize) -> BigRational {
    let e = (t + k) as i64 - x_len as i64;
    if k == 0 {
        return if e == 0 {
            BigRational::one()
        } else {
            BigRational::zero()
        };
    }
    crate::exact::rat_pow(&BigRational::from_integer(BigInt::from(k)), e)
}

/// Checks `|W_k(X)| ≤ k^{t+k−|X|}` for each probe; `k ≥ 1`.
pub fn check_w_k_degree_bound(w: &Family, t: usize, k: usize, probes: &[PartialPermutation]) -> Result<DegreeReport> {
    if k == 0 {
        return Err(Error::OutOfRange("the degree bound is stated for k >= 1".into()));
    }
    let mut violations = Vec::new();
    for x in probes {
        let count = w.count_containing(x);
        let bound = degree_bound(t, k, x.len());
        if BigRational::from_integer(BigInt::from(count)) > bound {
            violations.push(DegreeViolation {
                probe: x.clone(),
                count,
                bound,
            });
        }
    }
    Ok(DegreeReport {
        k,
        probes: probes.len(),
        violations,
    })
}

/// `Σ_{j=0}^{k} C(t,j)·C(k,j)²·k^{k−j}`.
pub fn rough_bound_w_k(t: u64, k: u64) -> BigUint {
    (0..=k).map(|j| rough_term(t, k, j)).sum()
}

/// The `j`-th summand of [`rough_bound_w_k`].
pub fn rough_term(t: u64, k: u64, j: u64) -> BigUint {
    let c = binomial(k, j);
    binomial(t, j) * &c * &c * pow_u(k, k - j)
}

/// `term(j)/term(j+1) = (j+1)³k / ((t−j)(k−j)²)` for `0 ≤ j < min(t, k)`.
pub fn bound_ratio_f(t: u64, k: u64, j: u64) -> Result<BigRational> {
    if j >= t || j >= k {
        return Err(Error::OutOfRange(format!(
            "need 0 <= j < min(t, k), got j={j}, t={t}, k={k}"
        )));
    }
    let num = (j + 1).pow(3) * k;
    let den = (t - j) * (k - j) * (k - j);
    Ok(BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Index of the largest summand over `[0, min(t, k)]`, smallest on ties.
pub fn j0_argmax_4(t: u64, k: u64) -> u64 {
    let mut best = 0;
    let mut best_val = rough_term(t, k, 0);
    for j in 1..=t.min(k) {
        let v = rough_term(t, k, j);
        if v > best_val {
            best = j;
            best_val = v;
        }
    }
    best
}

/// `(200·max(k, t/k))^k`, exact; `k ≥ 1`.
pub fn cor_bound_w_k(t: u64, k: u64) -> Result<BigRational> {
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    let kk = BigRational::from_integer(BigInt::from(k));
    let tk = BigRational::new(BigInt::from(t), BigInt::from(k));
    let m = if kk > tk { kk } else { tk };
    let base = m * BigRational::from_integer(BigInt::from(200));
    Ok(num_traits::pow(base, k as usize))
}

/// Does `rough_bound_w_k(t, k) ≤ cor_bound_w_k(t, k)` hold?
pub fn rough_below_cor(t: u64, k: u64) -> Result<bool> {
    Ok(rat_from_uint(&rough_bound_w_k(t, k)) <= cor_bound_w_k(t, k)?)
}

/// True when two members meet in exactly `t` cells.
pub fn has_tight_pair(f: &Family, t: usize) -> bool {
    let m = f.members();
    (0..m.len()).any(|i| (i + 1..m.len()).any(|j| m[i].meet(&m[j]) == t))
}

/// `|W_k|` as a count.
pub fn layer_size(res: &PeelingResult, k: usize) -> BigUint {
    if k < res.layers_w.len() {
        BigUint::from(res.layers_w[k].len())
    } else {
        BigUint::zero()
    }
}
