//! Layer analysis on top of a peeling: the critical layer index, the search
//! for `r` layer members with the smallest common intersection, the
//! multiplicity profile of a member against such a tuple, and the summation
//! bound on the sub-layers `G_j`.
//!
//! The tuple arity is called `tuple_r` throughout; it is unrelated to the
//! spread parameter of the spread modules.

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::ak::max_ak_size;
use crate::error::{Error, Result};
use crate::exact::{binomial, binomial_signed, pow_u, rat, ratio_of, rational_to_f64, uint_to_f64};
use crate::family::Family;
use crate::par::{self, Exec};
use crate::peeling::PeelingResult;
use crate::perm::{combinations, CellSet, PartialPermutation};

/// The largest `k` whose layer is heavy enough to drive the tuple argument.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalK {
    pub k: usize,
    pub threshold_passed: bool,
    #[serde(with = "crate::exact::decimal")]
    pub w_k_size: BigUint,
    #[serde(with = "crate::exact::decimal")]
    pub binom_t_k: BigUint,
    /// `⌊t^{2/7 − ε/2}⌋`, the first index scanned (before clamping to the top layer).
    pub k_cap: usize,
}

/// `k ≤ t^{num/den}` for `den > 0`, decided by integer powers.
fn le_rational_power(k: usize, t: usize, num: i64, den: u64) -> bool {
    let den = u32::try_from(den).expect("exponent denominator fits in u32");
    let kk = BigUint::from(k).pow(den);
    let lhs_t = BigUint::from(t).pow(u32::try_from((-num).max(0)).expect("small exponent"));
    let rhs = BigUint::from(t).pow(u32::try_from(num.max(0)).expect("small exponent"));
    kk * lhs_t <= rhs
}

/// `⌊t^{2/7 − ε/2}⌋` scanned upward, stopping at `limit`.
fn critical_cap(t: usize, eps: &BigRational, limit: usize) -> usize {
    let (num, den) = critical_exponent(eps);
    let mut k = 0;
    while k < limit && le_rational_power(k + 1, t, num, den) {
        k += 1;
    }
    k
}

/// `|W| > t^{−1/7}·C(t, k)`, i.e. `|W|^7 · t > C(t, k)^7`.
pub fn layer_is_heavy(w_size: &BigUint, t: usize, k: usize) -> bool {
    let binom = binomial(t as u64, k as u64);
    w_size.pow(7) * BigUint::from(t) > binom.pow(7)
}

/// Scans `k` downward from `min(⌊t^{2/7 − ε/2}⌋, top)` and returns the
/// first layer with `|W_k| > t^{−1/7}·C(t, k)`, or `None`.
pub fn select_critical_k(res: &PeelingResult, eps: &BigRational) -> Option<CriticalK> {
    let t = res.t;
    let cap = critical_cap(t, eps, t.max(res.top()) + 1);
    (0..=cap.min(res.top())).rev().find_map(|k| {
        let w_k_size = BigUint::from(res.w(k).len());
        layer_is_heavy(&w_k_size, t, k).then(|| CriticalK {
            k,
            threshold_passed: true,
            w_k_size,
            binom_t_k: binomial(t as u64, k as u64),
            k_cap: cap,
        })
    })
}

/// `(3r − 1)/(r − 1)·(2/7 − ε/2) < 6/7 − ε`.
pub fn tuple_r_condition(r: usize, eps: &BigRational) -> bool {
    if r < 2 {
        return false;
    }
    let r = r as i64;
    let lhs = rat(3 * r - 1, r - 1) * (rat(2, 7) - eps / rat(2, 1));
    lhs < rat(6, 7) - eps
}

/// Smallest `r ≥ 100` with `(3r − 1)/(r − 1)·(2/7 − ε/2) < 6/7 − ε`, for `0 < ε < 1/2`.
///
/// The condition rearranges to `r > 8/(7ε) − 1`; the closed form is used as
/// a starting point and the inequality is re-checked exactly.
pub fn choose_r(eps: &BigRational) -> Result<usize> {
    if !eps.is_positive() || *eps >= rat(1, 2) {
        return Err(Error::OutOfRange(format!("ε = {eps} must lie in (0, 1/2)")));
    }
    let threshold = rat(8, 7) / eps - BigRational::one();
    let start: num_bigint::BigInt = threshold.floor().to_integer() + 1;
    let start = start
        .to_usize()
        .ok_or_else(|| Error::OutOfRange(format!("ε = {eps} is too small")))?;
    let mut r = start.max(100);
    while r > 100 && tuple_r_condition(r - 1, eps) {
        r -= 1;
    }
    while !tuple_r_condition(r, eps) {
        r += 1;
    }
    Ok(r)
}

fn ser_pp_list<S: serde::Serializer>(list: &[PartialPermutation], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(list.len()))?;
    for p in list {
        seq.serialize_element(&p.to_pairs())?;
    }
    seq.end()
}

/// `r` members of a layer with the smallest common intersection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GoodTuple {
    pub t: usize,
    pub k: usize,
    pub tuple_r: usize,
    /// Positions of the chosen members in the searched layer.
    pub indices: Vec<usize>,
    #[serde(serialize_with = "ser_pp_list")]
    pub sets: Vec<PartialPermutation>,
    /// Common intersection of the chosen members.
    #[serde(serialize_with = "crate::spread::ser_pp")]
    pub u: PartialPermutation,
    /// Union minus the common intersection, as `[row, col]` cells. The
    /// union of several members need not be a partial permutation.
    pub v: Vec<[usize; 2]>,
    /// `profile_a[i − 1]` = cells lying in exactly `i` of the chosen members.
    pub profile_a: Vec<usize>,
    pub min_intersection: usize,
    /// `t − (r − 2)k`, the unconditional lower bound.
    pub floor: i64,
    pub achieved_min: bool,
    /// Search nodes visited (tuples for the exhaustive scan).
    pub nodes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleSearch {
    /// Every `r`-subset in lexicographic order.
    Exhaustive,
    /// Depth-first in lexicographic order, pruned by the best completion bound.
    BranchAndBound,
}

fn check_layer(w: &Family, t: usize, k: usize, r: usize) -> Result<()> {
    if r < 2 {
        return Err(Error::OutOfRange(format!("tuple arity {r} must be at least 2")));
    }
    if w.len() < r {
        return Err(Error::Precondition(format!(
            "layer has {} members, fewer than r = {r}",
            w.len()
        )));
    }
    if let Some(i) = w.iter().position(|m| m.len() != t + k) {
        return Err(Error::Precondition(format!(
            "member {i} does not have t + k = {} cells",
            t + k
        )));
    }
    if let Some((i, j)) = w.first_weak_pair(t) {
        return Err(Error::Precondition(format!(
            "members {i} and {j} meet in fewer than {t} cells"
        )));
    }
    Ok(())
}

fn exhaustive_min(sets: &[CellSet], r: usize) -> (usize, Vec<usize>, u64) {
    let mut best = usize::MAX;
    let mut arg = Vec::new();
    let mut nodes = 0u64;
    combinations(sets.len(), r, |idx| {
        nodes += 1;
        let mut acc = sets[idx[0]].clone();
        for &i in &idx[1..] {
            acc = acc.intersection(&sets[i]);
        }
        if acc.len() < best {
            best = acc.len();
            arg = idx.to_vec();
        }
    });
    (best, arg, nodes)
}

struct Dfs<'a> {
    sets: &'a [CellSet],
    r: usize,
    floor: usize,
    best: usize,
    arg: Vec<usize>,
    path: Vec<usize>,
    nodes: u64,
}

impl Dfs<'_> {
    /// Lowest intersection size any completion of `path` can reach: each of
    /// the `need` remaining members removes at most `|acc ∖ A_j|` cells.
    fn completion_bound(&self, acc: &CellSet, from: usize, need: usize) -> usize {
        let mut losses: Vec<usize> = self.sets[from..]
            .iter()
            .map(|s| acc.len() - acc.intersection_len(s))
            .collect();
        losses.sort_unstable_by(|a, b| b.cmp(a));
        let removable: usize = losses.iter().take(need).sum();
        acc.len().saturating_sub(removable)
    }

    fn go(&mut self, acc: CellSet, from: usize) {
        self.nodes += 1;
        let need = self.r - self.path.len();
        if need == 0 {
            if acc.len() < self.best {
                self.best = acc.len();
                self.arg = self.path.clone();
            }
            return;
        }
        if self.sets.len() - from < need || self.completion_bound(&acc, from, need) >= self.best {
            return;
        }
        for j in from..=self.sets.len() - need {
            if self.best <= self.floor {
                return;
            }
            self.path.push(j);
            let next = acc.intersection(&self.sets[j]);
            self.go(next, j + 1);
            self.path.pop();
        }
    }
}

fn branch_and_bound_min(sets: &[CellSet], r: usize, floor: usize, exec: Exec) -> (usize, Vec<usize>, u64) {
    let roots = sets.len() + 1 - r;
    let per_root = par::map_indexed(exec, roots, |i| {
        let mut dfs = Dfs {
            sets,
            r,
            floor,
            best: usize::MAX,
            arg: Vec::new(),
            path: vec![i],
            nodes: 0,
        };
        dfs.go(sets[i].clone(), i + 1);
        (dfs.best, dfs.arg, dfs.nodes)
    });
    let nodes = per_root.iter().map(|x| x.2).sum();
    let (best, arg, _) = per_root.into_iter().min_by_key(|x| x.0).expect("at least one root");
    (best, arg, nodes)
}

/// Minimizes `|A_1 ∩ ⋯ ∩ A_r|` over `r`-subsets of the layer `w`.
///
/// Both strategies return the lexicographically first minimizer. The result
/// always satisfies the lower bound `t − (r − 2)k`; when it meets the bound
/// with equality the forced structure (pairwise intersections exactly `t`,
/// every covered cell in at least `r − 1` members) is verified and a
/// violation is reported as [`Error::Internal`].
pub fn good_tuple_search(w: &Family, t: usize, k: usize, r: usize, how: TupleSearch, exec: Exec) -> Result<GoodTuple> {
    check_layer(w, t, k, r)?;
    let sets: Vec<CellSet> = w.iter().map(|m| m.cellset().clone()).collect();
    let floor = t as i64 - (r as i64 - 2) * k as i64;
    let (min, indices, nodes) = match how {
        TupleSearch::Exhaustive => exhaustive_min(&sets, r),
        TupleSearch::BranchAndBound => branch_and_bound_min(&sets, r, floor.max(0) as usize, exec),
    };
    build_tuple(w, t, k, r, indices, min, floor, nodes)
}

#[allow(clippy::too_many_arguments)]
fn build_tuple(
    w: &Family,
    t: usize,
    k: usize,
    r: usize,
    indices: Vec<usize>,
    min: usize,
    floor: i64,
    nodes: u64,
) -> Result<GoodTuple> {
    let n = w.n();
    let chosen: Vec<PartialPermutation> = indices.iter().map(|&i| w.members()[i].clone()).collect();
    let mut multiplicity = vec![0usize; n * n];
    for s in &chosen {
        for c in s.cellset().iter() {
            multiplicity[c] += 1;
        }
    }
    let mut profile_a = vec![0usize; r];
    let mut u_cells = CellSet::empty(n * n);
    let mut v_cells = CellSet::empty(n * n);
    for (c, &m) in multiplicity.iter().enumerate() {
        if m > 0 {
            profile_a[m - 1] += 1;
            if m == r {
                u_cells.insert(c);
            } else {
                v_cells.insert(c);
            }
        }
    }
    let weighted: usize = profile_a.iter().enumerate().map(|(i, a)| (i + 1) * a).sum();
    if weighted != r * (t + k) {
        return Err(Error::Internal(format!(
            "Σ i·a_i = {weighted} differs from r(t + k) = {}",
            r * (t + k)
        )));
    }
    if u_cells.len() != min {
        return Err(Error::Internal(
            "common intersection disagrees with the search value".into(),
        ));
    }
    if (min as i64) < floor {
        return Err(Error::Internal(format!(
            "intersection {min} is below the lower bound {floor}"
        )));
    }
    let achieved_min = min as i64 == floor;
    if achieved_min {
        for i in 0..r {
            for j in i + 1..r {
                let meet = chosen[i].meet(&chosen[j]);
                if meet != t {
                    return Err(Error::Internal(format!(
                        "tuple members {i} and {j} meet in {meet} cells, expected exactly {t}"
                    )));
                }
            }
        }
        if let Some(m) = multiplicity.iter().find(|&&m| m > 0 && m + 1 < r) {
            return Err(Error::Internal(format!(
                "a covered cell lies in only {m} of {r} members"
            )));
        }
        if v_cells.len() != r * k {
            return Err(Error::Internal(format!(
                "|V| = {}, expected rk = {}",
                v_cells.len(),
                r * k
            )));
        }
    }
    Ok(GoodTuple {
        t,
        k,
        tuple_r: r,
        indices,
        sets: chosen,
        u: PartialPermutation::from_cellset(n, u_cells)?,
        v: v_cells.iter().map(|c| [c / n + 1, c % n + 1]).collect(),
        profile_a,
        min_intersection: min,
        floor,
        achieved_min,
        nodes,
    })
}

/// One inequality of the profile system, with both sides scaled to integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ProfileCheck {
    pub name: &'static str,
    pub lhs: i64,
    pub rhs: i64,
    pub holds: bool,
}

impl ProfileCheck {
    fn ge(name: &'static str, lhs: i64, rhs: i64) -> Self {
        ProfileCheck {
            name,
            lhs,
            rhs,
            holds: lhs >= rhs,
        }
    }

    pub fn slack(&self) -> i64 {
        self.lhs - self.rhs
    }
}

/// Profile of a layer member against a minimizing tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemberProfile {
    /// `profile_b[i − 1]` = cells of the member lying in exactly `i` tuple members.
    pub profile_b: Vec<usize>,
    /// Excess of the tuple's common intersection over `t − (r − 2)k`.
    pub x: i64,
    /// `k − (a_r − b_r)`.
    pub m: i64,
    pub checks: Vec<ProfileCheck>,
}

impl MemberProfile {
    pub fn holds_all(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }

    pub fn first_failure(&self) -> Option<&ProfileCheck> {
        self.checks.iter().find(|c| !c.holds)
    }
}

/// Profile of `b` against a minimizing tuple and the inequality system that
/// a layer member must satisfy:
///
/// * `b_cover`: `b_1 + 2b_2 + ⋯ + r·b_r ≥ rt`;
/// * `b_drop_one`: `b_{r−1} + r·b_r ≥ rt − r(r−2)k + rx`;
/// * `m_lower`: `(r − 1)m ≥ x`;
/// * `b_total`: `(r − 1)(b_1 + ⋯ + b_r) ≥ (r − 1)(t + k) − x − m`;
///
/// plus `b_i ≤ a_i` for every `i` (`b_within_a`). A failure means the layer
/// is not `t`-intersecting or the tuple is not a minimizer.
pub fn member_profile(b: &PartialPermutation, gt: &GoodTuple) -> Result<MemberProfile> {
    let (t, k, r) = (gt.t as i64, gt.k as i64, gt.tuple_r);
    if b.len() != gt.t + gt.k {
        return Err(Error::Precondition(format!(
            "member has {} cells, layer size is {}",
            b.len(),
            t + k
        )));
    }
    let mut profile_b = vec![0usize; r];
    for c in b.cellset().iter() {
        let hits = gt.sets.iter().filter(|s| s.cellset().contains(c)).count();
        if hits > 0 {
            profile_b[hits - 1] += 1;
        }
    }
    let ri = r as i64;
    let a_r = gt.profile_a[r - 1] as i64;
    let b_r = profile_b[r - 1] as i64;
    let b_r1 = profile_b[r - 2] as i64;
    let x = a_r - gt.floor;
    let m = k - (a_r - b_r);
    let weighted: i64 = profile_b
        .iter()
        .enumerate()
        .map(|(i, &v)| (i as i64 + 1) * v as i64)
        .sum();
    let total: i64 = profile_b.iter().map(|&v| v as i64).sum();
    let within = profile_b.iter().zip(&gt.profile_a).all(|(b, a)| b <= a);
    let checks = vec![
        ProfileCheck {
            name: "b_within_a",
            lhs: i64::from(within),
            rhs: 1,
            holds: within,
        },
        ProfileCheck::ge("b_cover", weighted, ri * t),
        ProfileCheck::ge("b_drop_one", b_r1 + ri * b_r, ri * t - ri * (ri - 2) * k + ri * x),
        ProfileCheck::ge("m_lower", (ri - 1) * m, x),
        ProfileCheck::ge("b_total", (ri - 1) * total, (ri - 1) * (t + k) - x - m),
    ];
    Ok(MemberProfile {
        profile_b,
        x,
        m,
        checks,
    })
}

/// Summation bound on `|G_j|`, the `(t + j)`-cell members of `T_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GjBound {
    pub t: usize,
    pub k: usize,
    pub j: usize,
    pub tuple_r: usize,
    /// `(x, term)` for `x` from `(r−2)k` to `(r−1)j`.
    pub terms: Vec<(usize, String)>,
    #[serde(with = "crate::exact::decimal")]
    pub value: BigUint,
    /// `C(t − (r−2)k, t − (r−1)j)·C(rk, rj)`, the dominant term.
    #[serde(with = "crate::exact::decimal")]
    pub leading: BigUint,
    /// `t^{−0.1}·2^{j−k}·C(t, j)` for `j < k`, as a float.
    pub cap_a: Option<f64>,
    /// `value / C(t, k)`, a report only.
    pub ratio_to_binom_t_k: f64,
}

/// Evaluates `Σ_x C(t − (r−2)k, t − x)·C(rk, ⌈rx/(r−1)⌉)·k^{j − ⌈x/(r−1)⌉}`.
pub fn bound_g_j(t: usize, k: usize, j: usize, r: usize) -> Result<GjBound> {
    if r < 3 {
        return Err(Error::Hypothesis(format!("tuple arity {r} must be at least 3")));
    }
    if j > k {
        return Err(Error::Hypothesis(format!("j = {j} exceeds k = {k}")));
    }
    if (r - 2) * k > t {
        return Err(Error::Hypothesis(format!("(r − 2)k = {} exceeds t = {t}", (r - 2) * k)));
    }
    let core = (t - (r - 2) * k) as i64;
    let lo = (r - 2) * k;
    let hi = (r - 1) * j;
    let mut value = BigUint::zero();
    let mut terms = Vec::new();
    for x in lo..=hi {
        let from_v = (r * x).div_ceil(r - 1);
        let outside = j - x.div_ceil(r - 1);
        let term = binomial_signed(core, t as i64 - x as i64)
            * binomial((r * k) as u64, from_v as u64)
            * pow_u(k as u64, outside as u64);
        terms.push((x, term.to_string()));
        value += term;
    }
    let leading = binomial_signed(core, t as i64 - hi as i64) * binomial((r * k) as u64, (r * j) as u64);
    let binom_t_k = binomial(t as u64, k as u64);
    let cap_a = (j < k)
        .then(|| (t as f64).powf(-0.1) * 2f64.powi(j as i32 - k as i32) * uint_to_f64(&binomial(t as u64, j as u64)));
    let ratio = if binom_t_k.is_zero() {
        f64::INFINITY
    } else {
        rational_to_f64(&ratio_of(&value, &binom_t_k))
    };
    Ok(GjBound {
        t,
        k,
        j,
        tuple_r: r,
        terms,
        value,
        leading,
        cap_a,
        ratio_to_binom_t_k: ratio,
    })
}

/// [`bound_g_j`] at `j = k`: the refined bound on the top layer.
pub fn bound_w_k_refined(t: usize, k: usize, r: usize) -> Result<GjBound> {
    bound_g_j(t, k, k, r)
}

/// How much of a probe family is covered by the part of `T_k` outside the
/// tuple's union, relative to the largest `A_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub k: usize,
    /// Members of `T_k` kept after dropping the `(t + k)`-sets inside the union.
    pub residual_members: usize,
    pub covered: usize,
    #[serde(with = "crate::exact::decimal")]
    pub max_ak: BigUint,
    #[serde(with = "crate::exact::rational_str")]
    pub ratio: BigRational,
    pub ratio_approx: f64,
}

/// `|F[T_k′]| / max_j |A_j|` with `T_k′ = T_k ∖ {(t + k)-sets inside A_1 ∪ ⋯ ∪ A_r}`.
pub fn residual_t_k_report(res: &PeelingResult, gt: &GoodTuple, probe: &Family) -> Result<ResidualReport> {
    if !gt.achieved_min {
        return Err(Error::Precondition("the tuple does not reach the lower bound".into()));
    }
    let t_k = res.t_layer(gt.k);
    let n = t_k.n();
    let span = gt
        .sets
        .iter()
        .fold(CellSet::empty(n * n), |acc, s| acc.union(s.cellset()));
    let size = gt.t + gt.k;
    let residual = t_k.filter(|m| !(m.len() == size && m.cellset().is_subset(&span)));
    let covered = probe.select_many(&residual).len();
    let (_, max_ak) = max_ak_size(t_k.n(), gt.t)?;
    let ratio = ratio_of(&BigUint::from(covered), &max_ak);
    Ok(ResidualReport {
        k: gt.k,
        residual_members: residual.len(),
        covered,
        max_ak,
        ratio_approx: rational_to_f64(&ratio),
        ratio,
    })
}

/// The symmetric tuple on the diagonal: common part `{1..c}` and `r` members
/// `U ∪ (V ∖ V_i)`, where `V` is split into `r` blocks `V_i` of `k` cells.
/// Every pair meets in `c + (r − 2)k` cells, so with `c = t − (r − 2)k` the
/// family is a layer reaching the lower bound.
pub fn symmetric_tuple(t: usize, k: usize, r: usize) -> Result<Family> {
    if (r.max(2) - 2) * k > t {
        return Err(Error::Hypothesis(format!("(r − 2)k exceeds t = {t}")));
    }
    let common = t - (r - 2) * k;
    let n = common + r * k;
    let members = (0..r)
        .map(|i| {
            let cells: Vec<(usize, usize)> = (1..=n)
                .filter(|&d| d <= common || (d - common - 1) / k != i)
                .map(|d| (d, d))
                .collect();
            PartialPermutation::from_pairs(n, &cells)
        })
        .collect::<Result<Vec<_>>>()?;
    Family::new(n, members)
}

/// `2/7 − ε/2` as a reduced fraction `(num, den)` with `den > 0`.
pub fn critical_exponent(eps: &BigRational) -> (i64, u64) {
    let a = eps.numer().to_i64().expect("ε numerator fits in i64");
    let b = eps.denom().to_u64().expect("ε denominator fits in u64");
    let num = 4 * b as i64 - 7 * a;
    let den = 14 * b;
    let g = (num.unsigned_abs()).gcd(&den).max(1);
    (num / g as i64, den / g)
}
