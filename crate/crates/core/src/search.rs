//! Brute-force oracles at small `n`: maximum `t`-intersecting families as
//! maximum cliques of the agreement graph, recognition of translates of
//! `A_k`, and exact counts behind the stability argument.
//!
//! Left translation `π ↦ σ⁻¹π` preserves agreement counts and maps translates
//! of `A_k` to translates, so every clique search fixes the identity as a
//! member and works in the graph of its neighbours.

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;

use crate::ak::{build_ak, derangement_count, in_translate, max_ak_size, ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::exact::{binomial, ratio_of, rational_to_f64};
use crate::family::Family;
use crate::par::{self, Exec};
use crate::perm::{all_permutations, CellSet, PartialPermutation, Permutation};

/// Largest `n` for which the clique search is expected to finish.
pub const CLIQUE_CAP: usize = 7;
/// Most maximum families collected by the optima survey.
pub const ALL_OPTIMA_CAP: usize = 10_000;
/// Refuse graphs with more vertices than this (the adjacency is quadratic).
pub const VERTEX_CAP: usize = 30_000;
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
struct Bits {
    words: Vec<u64>,
}

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits {
            words: vec![0; len.div_ceil(64)],
        }
    }

    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    fn clear(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    fn test(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn first(&self) -> Option<usize> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    fn and_not_assign(&mut self, other: &Bits) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                (w != 0).then(|| {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    i * 64 + b
                })
            })
        })
    }
}

/// Permutations joined when they agree in at least `t` positions. Cliques
/// are exactly the `t`-intersecting families on the vertex set.
#[derive(Clone, Debug)]
pub struct AgreementGraph {
    pub n: usize,
    pub t: usize,
    vertices: Vec<Permutation>,
    adjacency: Vec<Bits>,
}

impl AgreementGraph {
    /// All of `Σ_n`, in lexicographic order.
    pub fn full(n: usize, t: usize) -> Result<Self> {
        check_n_t(n, t)?;
        Self::on(n, t, all_permutations(n))
    }

    /// The permutations other than the identity that agree with it in at least `t` positions.
    pub fn around_identity(n: usize, t: usize) -> Result<Self> {
        check_n_t(n, t)?;
        let vertices = all_permutations(n)
            .into_iter()
            .filter(|p| p.fixed_points() >= t && p.fixed_points() < n)
            .collect();
        Self::on(n, t, vertices)
    }

    fn on(n: usize, t: usize, vertices: Vec<Permutation>) -> Result<Self> {
        if vertices.len() > VERTEX_CAP {
            return Err(Error::Budget(format!(
                "agreement graph would have {} vertices (cap {VERTEX_CAP})",
                vertices.len()
            )));
        }
        let m = vertices.len();
        let adjacency = par::map_indexed(Exec::default(), m, |i| {
            let mut row = Bits::zeros(m);
            for (j, q) in vertices.iter().enumerate() {
                if i != j && vertices[i].agreement(q) >= t {
                    row.set(j);
                }
            }
            row
        });
        Ok(AgreementGraph {
            n,
            t,
            vertices,
            adjacency,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[Permutation] {
        &self.vertices
    }

    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        self.adjacency[i].test(j)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.len()).all(|i| (0..self.len()).all(|j| self.adjacent(i, j) == self.adjacent(j, i)))
    }

    /// Vertices relabelled by descending degree (ties in lexicographic
    /// order): returns the order and the relabelled adjacency.
    fn ordered(&self) -> (Vec<usize>, Vec<Bits>) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| (std::cmp::Reverse(self.degree(i)), i));
        let mut pos = vec![0; self.len()];
        for (p, &v) in order.iter().enumerate() {
            pos[v] = p;
        }
        let adj = order
            .iter()
            .map(|&v| {
                let mut row = Bits::zeros(self.len());
                for u in self.adjacency[v].ones() {
                    row.set(pos[u]);
                }
                row
            })
            .collect();
        (order, adj)
    }
}

fn check_n_t(n: usize, t: usize) -> Result<()> {
    if n == 0 || n > ENUMERATION_CAP {
        return Err(Error::OutOfRange(format!("n = {n} must lie in 1..={ENUMERATION_CAP}")));
    }
    if t == 0 || t > n {
        return Err(Error::OutOfRange(format!("t = {t} must lie in 1..={n}")));
    }
    Ok(())
}

/// Greedy colouring of `cand`; vertices come out in non-decreasing colour.
fn colour_sort(adj: &[Bits], cand: &Bits) -> (Vec<usize>, Vec<usize>) {
    let mut uncoloured = cand.clone();
    let mut order = Vec::new();
    let mut colours = Vec::new();
    let mut colour = 0;
    while !uncoloured.is_empty() {
        colour += 1;
        let mut q = uncoloured.clone();
        while let Some(v) = q.first() {
            q.clear(v);
            uncoloured.clear(v);
            q.and_not_assign(&adj[v]);
            order.push(v);
            colours.push(colour);
        }
    }
    (order, colours)
}

/// What a branch does with cliques that cannot be extended inside it.
enum Goal<'a> {
    /// Keep the largest clique strictly above the incumbent.
    Maximum,
    /// Collect every clique of exactly this size.
    AllOfSize {
        size: usize,
        found: &'a mut Vec<Vec<usize>>,
        cap: usize,
    },
    /// Keep the largest clique accepted by the predicate.
    LargestWith(&'a mut dyn FnMut(&[usize]) -> Result<bool>),
}

struct Branch<'a, 'g> {
    adj: &'a [Bits],
    best: usize,
    best_clique: Option<Vec<usize>>,
    nodes: u64,
    budget: u64,
    exhausted: bool,
    goal: Goal<'g>,
}

impl Branch<'_, '_> {
    fn threshold(&self) -> usize {
        match self.goal {
            Goal::AllOfSize { size, .. } => size - 1,
            _ => self.best,
        }
    }

    fn expand(&mut self, clique: &mut Vec<usize>, mut cand: Bits) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.exhausted = true;
            return Ok(());
        }
        if cand.is_empty() {
            return self.leaf(clique);
        }
        let (order, colours) = colour_sort(self.adj, &cand);
        for idx in (0..order.len()).rev() {
            if self.exhausted || clique.len() + colours[idx] <= self.threshold() {
                return Ok(());
            }
            if let Goal::AllOfSize { found, cap, .. } = &self.goal {
                if found.len() >= *cap {
                    return Ok(());
                }
            }
            let v = order[idx];
            clique.push(v);
            let next = cand.and(&self.adj[v]);
            self.expand(clique, next)?;
            clique.pop();
            cand.clear(v);
        }
        Ok(())
    }

    fn leaf(&mut self, clique: &[usize]) -> Result<()> {
        match &mut self.goal {
            Goal::Maximum => {
                if clique.len() > self.best {
                    self.best = clique.len();
                    self.best_clique = Some(clique.to_vec());
                }
            }
            Goal::AllOfSize { size, found, cap } => {
                if clique.len() == *size && found.len() < *cap {
                    found.push(clique.to_vec());
                }
            }
            Goal::LargestWith(accept) => {
                if clique.len() > self.best && accept(clique)? {
                    self.best = clique.len();
                    self.best_clique = Some(clique.to_vec());
                }
            }
        }
        Ok(())
    }
}

/// Outcome of a maximum-clique run on relabelled vertices.
struct CliqueOutcome {
    size: usize,
    clique: Option<Vec<usize>>,
    nodes: u64,
    complete: bool,
}

fn root_candidates(adj: &[Bits], i: usize) -> Bits {
    let mut cand = adj[i].clone();
    for j in 0..=i {
        cand.clear(j);
    }
    cand
}

/// Maximum clique strictly larger than `initial`, split over root vertices.
/// Each root keeps its own incumbent, so results and node counts do not
/// depend on scheduling; `budget` bounds the nodes of each root.
fn max_clique(adj: &[Bits], initial: usize, budget: u64, exec: Exec) -> CliqueOutcome {
    let per_root = par::map_indexed(exec, adj.len(), |i| {
        let mut b = Branch {
            adj,
            best: initial,
            best_clique: None,
            nodes: 0,
            budget,
            exhausted: false,
            goal: Goal::Maximum,
        };
        let mut clique = vec![i];
        b.expand(&mut clique, root_candidates(adj, i))
            .expect("maximum search has no fallible hook");
        (b.best, b.best_clique, b.nodes, b.exhausted)
    });
    let nodes = per_root.iter().map(|r| r.2).sum();
    let complete = per_root.iter().all(|r| !r.3);
    let mut out = CliqueOutcome {
        size: initial,
        clique: None,
        nodes,
        complete,
    };
    for (size, clique, _, _) in per_root {
        if size > out.size {
            out.size = size;
            out.clique = clique;
        }
    }
    out
}

/// Every clique of exactly `size` vertices (at most `cap`), in root order.
fn cliques_of_size(adj: &[Bits], size: usize, cap: usize, budget: u64) -> (Vec<Vec<usize>>, u64, bool) {
    let mut found = Vec::new();
    let mut nodes = 0;
    let mut complete = true;
    for i in 0..adj.len() {
        if found.len() >= cap || size == 0 {
            break;
        }
        let mut b = Branch {
            adj,
            best: 0,
            best_clique: None,
            nodes: 0,
            budget: budget.saturating_sub(nodes),
            exhausted: false,
            goal: Goal::AllOfSize {
                size,
                found: &mut found,
                cap,
            },
        };
        let mut clique = vec![i];
        b.expand(&mut clique, root_candidates(adj, i))
            .expect("collection has no fallible hook");
        nodes += b.nodes;
        if b.exhausted {
            complete = false;
            break;
        }
    }
    (found, nodes, complete)
}

/// Size of a maximum clique by plain enumeration, without any bound.
pub fn max_clique_unpruned(graph: &AgreementGraph) -> usize {
    fn go(adj: &[Bits], size: usize, cand: &Bits, best: &mut usize) {
        *best = (*best).max(size);
        for v in cand.ones() {
            let mut next = cand.and(&adj[v]);
            for u in 0..=v {
                next.clear(u);
            }
            go(adj, size + 1, &next, best);
        }
    }
    let mut all = Bits::zeros(graph.len());
    for i in 0..graph.len() {
        all.set(i);
    }
    let mut best = 0;
    go(&graph.adjacency, 0, &all, &mut best);
    best
}

/// A translate `σ A_k τ` containing a family, with its anchor cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AkMatch {
    pub k: usize,
    pub sigma: Permutation,
    pub tau: Permutation,
    /// The `t + 2k` cells every member meets in at least `t + k` places.
    #[serde(serialize_with = "crate::spread::ser_pp")]
    pub anchor: PartialPermutation,
}

fn ser_family<S: serde::Serializer>(f: &Family, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(f.len()))?;
    for m in f.iter() {
        let images: Vec<usize> = m.cells().map(|c| c.col).collect();
        seq.serialize_element(&images)?;
    }
    seq.end()
}

struct AnchorSearch<'a> {
    members: &'a [CellSet],
    n: usize,
    need: usize,
    size: usize,
    nodes: u64,
    budget: u64,
}

impl AnchorSearch<'_> {
    /// Grows `p` one cell at a time, always from the member furthest from
    /// `need` cells; a member short by more than the free slots fails.
    fn go(&mut self, p: &mut CellSet, rows: &mut [bool], cols: &mut [bool]) -> Result<bool> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::Budget(format!("anchor search exceeded {} nodes", self.budget)));
        }
        let (worst, deficit) = self
            .members
            .iter()
            .enumerate()
            .map(|(i, m)| (i, self.need.saturating_sub(m.intersection_len(p))))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if deficit == 0 {
            return Ok(true);
        }
        if deficit > self.size - p.len() {
            return Ok(false);
        }
        let choices: Vec<usize> = self.members[worst].difference(p).iter().collect();
        for c in choices {
            let (r, col) = (c / self.n, c % self.n);
            if rows[r] || cols[col] {
                continue;
            }
            p.insert(c);
            rows[r] = true;
            cols[col] = true;
            if self.go(p, rows, cols)? {
                return Ok(true);
            }
            p.remove(c);
            rows[r] = false;
            cols[col] = false;
        }
        Ok(false)
    }
}

/// Finds `k` and `σ, τ` with `f ⊆ σ A_k τ`, trying `k = 0, 1, …` in turn.
///
/// Containment holds iff some partial permutation `T` with `t + 2k` cells
/// meets every member in at least `t + k` cells; the search builds `T` from
/// member cells and pads it with unused rows and columns. `Ok(None)` means no
/// translate contains `f`; running out of `budget` nodes is an error.
pub fn detect_ak_structure(f: &Family, t: usize, budget: u64) -> Result<Option<AkMatch>> {
    let n = f.n();
    if f.is_empty() {
        return Err(Error::Precondition("family is empty".into()));
    }
    if let Some(i) = f.iter().position(|m| m.len() != n) {
        return Err(Error::Precondition(format!("member {i} is not a full permutation")));
    }
    check_n_t(n, t)?;
    let members: Vec<CellSet> = f.iter().map(|m| m.cellset().clone()).collect();
    let mut nodes = 0;
    for k in 0..=(n - t) / 2 {
        let mut search = AnchorSearch {
            members: &members,
            n,
            need: t + k,
            size: t + 2 * k,
            nodes,
            budget,
        };
        let mut p = CellSet::empty(n * n);
        let mut rows = vec![false; n];
        let mut cols = vec![false; n];
        let found = search.go(&mut p, &mut rows, &mut cols)?;
        nodes = search.nodes;
        if found {
            return anchor_match(f, t, k, p, rows, cols).map(Some);
        }
    }
    Ok(None)
}

fn anchor_match(
    f: &Family,
    t: usize,
    k: usize,
    mut p: CellSet,
    mut rows: Vec<bool>,
    mut cols: Vec<bool>,
) -> Result<AkMatch> {
    let n = f.n();
    // Pad with the smallest unused rows and columns.
    let mut free_rows = (0..n).filter(|&r| !rows[r]).collect::<Vec<_>>().into_iter();
    let mut free_cols = (0..n).filter(|&c| !cols[c]).collect::<Vec<_>>().into_iter();
    while p.len() < t + 2 * k {
        let (r, c) = (
            free_rows.next().expect("free row"),
            free_cols.next().expect("free column"),
        );
        p.insert(r * n + c);
        rows[r] = true;
        cols[c] = true;
    }
    // Anchor cell j is (τ⁻¹(j), σ(j)); the remaining positions take the
    // unused rows and columns in increasing order.
    let cells: Vec<(usize, usize)> = p.iter().map(|c| (c / n + 1, c % n + 1)).collect();
    let mut tau_inv: Vec<usize> = cells.iter().map(|c| c.0).collect();
    let mut sigma: Vec<usize> = cells.iter().map(|c| c.1).collect();
    tau_inv.extend((0..n).filter(|&r| !rows[r]).map(|r| r + 1));
    sigma.extend((0..n).filter(|&c| !cols[c]).map(|c| c + 1));
    let sigma = Permutation::from_images(sigma)?;
    let tau = Permutation::from_images(tau_inv)?.inverse();
    for (i, m) in f.iter().enumerate() {
        let perm = Permutation::from_partial(m)?;
        if !in_translate(&perm, &sigma, &tau, t, k) {
            return Err(Error::Internal(format!("member {i} escapes the recovered translate")));
        }
    }
    Ok(AkMatch {
        k,
        sigma,
        tau,
        anchor: PartialPermutation::from_cellset(n, p)?,
    })
}

/// A maximum `t`-intersecting family found by clique search.
#[derive(Debug, Clone, Serialize)]
pub struct ExtremalResult {
    pub n: usize,
    pub t: usize,
    #[serde(with = "crate::exact::decimal")]
    pub max_size: BigUint,
    /// `max_k |A_k|`.
    #[serde(with = "crate::exact::decimal")]
    pub conjecture_value: BigUint,
    pub equal: bool,
    #[serde(serialize_with = "ser_family")]
    pub witness: Family,
    #[serde(rename = "matched_Ak")]
    pub matched_ak: Option<AkMatch>,
    /// False when a branch ran out of budget; `max_size` is then a lower bound.
    pub optimal: bool,
    pub nodes: u64,
}

fn family_with_identity(graph: &AgreementGraph, order: &[usize], clique: &[usize]) -> Result<Family> {
    let n = graph.n;
    let mut perms = vec![Permutation::identity(n)];
    perms.extend(clique.iter().map(|&v| graph.vertices[order[v]].clone()));
    perms.sort();
    Family::from_permutations(n, &perms)
}

/// Exact maximum size of a `t`-intersecting family in `Σ_n`.
///
/// The search starts from the largest `A_k` as incumbent, so the result is
/// never below `max_k |A_k|`. Intended for `n ≤ 7`; larger `n` are
/// best-effort and usually come back with `optimal = false`.
pub fn max_t_intersecting(n: usize, t: usize, budget: u64, exec: Exec) -> Result<ExtremalResult> {
    let (_, out) = solve(n, t, budget, exec)?;
    Ok(out)
}

/// The searched graph, its vertex order and adjacency rows.
type Search = (AgreementGraph, Vec<usize>, Vec<Bits>);

fn solve(n: usize, t: usize, budget: u64, exec: Exec) -> Result<(Search, ExtremalResult)> {
    check_n_t(n, t)?;
    let (k_star, value) = max_ak_size(n, t)?;
    let graph = AgreementGraph::around_identity(n, t)?;
    let (order, adj) = graph.ordered();
    let incumbent = crate::exact::to_u64_saturating(&value) as usize;
    let outcome = max_clique(&adj, incumbent - 1, budget, exec);
    let witness = match &outcome.clique {
        Some(c) => family_with_identity(&graph, &order, c)?,
        None => Family::from_permutations(n, &build_ak(n, t, k_star)?.enumerate(ENUMERATION_CAP)?)?,
    };
    let max_size = BigUint::from(outcome.size + 1);
    let matched_ak = match detect_ak_structure(&witness, t, budget) {
        Ok(m) => m,
        Err(e) if e.is_budget() => None,
        Err(e) => return Err(e),
    };
    if !witness.is_t_intersecting(t) || BigUint::from(witness.len()) != max_size {
        return Err(Error::Internal(
            "witness is not a t-intersecting family of the reported size".into(),
        ));
    }
    let result = ExtremalResult {
        n,
        t,
        equal: max_size == value,
        max_size,
        conjecture_value: value,
        witness,
        matched_ak,
        optimal: outcome.complete,
        nodes: outcome.nodes,
    };
    Ok(((graph, order, adj), result))
}

/// How many maximum families (through the identity) were examined and how
/// many of them are translates of some `A_k`.
#[derive(Debug, Clone, Serialize)]
pub struct OptimaSurvey {
    pub examined: usize,
    pub matched: usize,
    pub truncated: bool,
    #[serde(serialize_with = "ser_opt_family")]
    pub unmatched_example: Option<Family>,
}

fn ser_opt_family<S: serde::Serializer>(f: &Option<Family>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match f {
        Some(f) => ser_family(f, s),
        None => s.serialize_none(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConjectureReport {
    #[serde(flatten)]
    pub result: ExtremalResult,
    pub optima: Option<OptimaSurvey>,
}

/// Compares the clique optimum with `max_k |A_k|` and, when `survey` is
/// set, checks every maximum family through the identity (up to
/// [`ALL_OPTIMA_CAP`]) for `A_k` structure. Reports; never asserts.
pub fn verify_conjecture(n: usize, t: usize, budget: u64, survey: bool, exec: Exec) -> Result<ConjectureReport> {
    let ((graph, order, adj), result) = solve(n, t, budget, exec)?;
    let optima = if survey && result.optimal {
        let size = result.witness.len() - 1;
        let (cliques, _, complete) = if size == 0 {
            (vec![Vec::new()], 0, true)
        } else {
            cliques_of_size(&adj, size, ALL_OPTIMA_CAP, budget)
        };
        let mut matched = 0;
        let mut unmatched_example = None;
        for c in &cliques {
            let fam = family_with_identity(&graph, &order, c)?;
            if detect_ak_structure(&fam, t, budget)?.is_some() {
                matched += 1;
            } else if unmatched_example.is_none() {
                unmatched_example = Some(fam);
            }
        }
        Some(OptimaSurvey {
            examined: cliques.len(),
            matched,
            truncated: !complete || cliques.len() >= ALL_OPTIMA_CAP,
            unmatched_example,
        })
    } else {
        None
    };
    Ok(ConjectureReport { result, optima })
}

/// Exact number of `π` with `|π ∩ T| ≥ t + k` and `|π ∩ σ| ≤ t − 1`.
pub fn conflicting_count(sigma: &Permutation, anchor: &PartialPermutation, t: usize, k: usize) -> Result<BigUint> {
    let n = sigma.n();
    if anchor.n() != n {
        return Err(Error::GroundMismatch {
            left: anchor.n(),
            right: n,
        });
    }
    if anchor.len() != t + 2 * k {
        return Err(Error::Precondition(format!(
            "anchor has {} cells, expected t + 2k = {}",
            anchor.len(),
            t + 2 * k
        )));
    }
    if n > ENUMERATION_CAP {
        return Err(Error::Budget(format!(
            "enumeration of Σ_{n} exceeds the cap n <= {ENUMERATION_CAP}"
        )));
    }
    let count = all_permutations(n)
        .iter()
        .filter(|p| p.to_partial().meet(anchor) >= t + k && p.agreement(sigma) < t)
        .count();
    Ok(BigUint::from(count))
}

/// `C(t, k)·D(n − t − k)`: the product lower bound for [`conflicting_count`].
pub fn conflict_product_bound(n: usize, t: usize, k: usize) -> BigUint {
    binomial(t as u64, k as u64) * derangement_count(n - t - k)
}

/// One `(n, t, k, σ)` case where the exact count falls below the product bound.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictCase {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub sigma: Permutation,
    #[serde(with = "crate::exact::decimal")]
    pub exact: BigUint,
    #[serde(with = "crate::exact::decimal")]
    pub product: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConflictScan {
    pub cases: usize,
    pub below_product: Vec<ConflictCase>,
}

/// For `n ≤ n_max`, every `t ≥ 1`, `k`, the diagonal anchor of `A_k` and
/// every `σ` meeting it in at most `t + k − 1` cells, compares the exact
/// conflicting count with the product bound.
pub fn conflict_scan(n_max: usize) -> Result<ConflictScan> {
    let mut cases = 0;
    let mut below_product = Vec::new();
    for n in 1..=n_max.min(ENUMERATION_CAP) {
        let perms = all_permutations(n);
        for t in 1..=n {
            for k in 0..=(n - t) / 2 {
                let anchor = build_ak(n, t, k)?.anchor();
                let product = conflict_product_bound(n, t, k);
                for sigma in &perms {
                    if sigma.to_partial().meet(&anchor) >= t + k {
                        continue;
                    }
                    cases += 1;
                    let exact = conflicting_count(sigma, &anchor, t, k)?;
                    if exact < product {
                        below_product.push(ConflictCase {
                            n,
                            t,
                            k,
                            sigma: sigma.clone(),
                            exact,
                            product: product.clone(),
                        });
                    }
                }
            }
        }
    }
    Ok(ConflictScan { cases, below_product })
}

/// Largest `t`-intersecting family contained in no translate of any `A_k`.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub n: usize,
    pub t: usize,
    #[serde(with = "crate::exact::decimal")]
    pub max_ak: BigUint,
    /// `None` when every `t`-intersecting family sits inside some translate.
    pub largest_uncontained: Option<usize>,
    #[serde(serialize_with = "ser_opt_ratio")]
    pub ratio: Option<BigRational>,
    pub ratio_approx: Option<f64>,
    #[serde(serialize_with = "ser_opt_family")]
    pub witness: Option<Family>,
    pub optimal: bool,
    pub nodes: u64,
}

fn ser_opt_ratio<S: serde::Serializer>(x: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(x) => s.serialize_str(&crate::exact::format_rational(x)),
        None => s.serialize_none(),
    }
}

/// Searches cliques through the identity, scoring only those that no
/// translate of `A_k` contains. Containment is inherited by subfamilies, so
/// the optimum is a maximal clique and the colouring bound stays valid.
pub fn stability_gap_report(n: usize, t: usize, budget: u64) -> Result<StabilityReport> {
    check_n_t(n, t)?;
    let (_, max_ak) = max_ak_size(n, t)?;
    let graph = AgreementGraph::around_identity(n, t)?;
    let (order, adj) = graph.ordered();
    let mut accept = |clique: &[usize]| -> Result<bool> {
        // A non-maximal clique lies inside a maximal one that is scored on
        // its own path, and supersets of uncontained families stay uncontained.
        let mut common = adj[clique[0]].clone();
        for &v in &clique[1..] {
            common = common.and(&adj[v]);
        }
        if !common.is_empty() {
            return Ok(false);
        }
        let fam = family_with_identity(&graph, &order, clique)?;
        Ok(detect_ak_structure(&fam, t, budget)?.is_none())
    };
    let mut best = 0;
    let mut best_clique: Option<Vec<usize>> = None;
    let mut nodes = 0;
    let mut complete = true;
    // The empty clique stands for the identity alone, which is always contained.
    for i in 0..adj.len() {
        let mut b = Branch {
            adj: &adj,
            best,
            best_clique: None,
            nodes: 0,
            budget: budget.saturating_sub(nodes),
            exhausted: false,
            goal: Goal::LargestWith(&mut accept),
        };
        let mut clique = vec![i];
        let run = b.expand(&mut clique, root_candidates(&adj, i));
        nodes += b.nodes;
        if let Some(c) = b.best_clique.take() {
            best = b.best;
            best_clique = Some(c);
        }
        if b.exhausted {
            complete = false;
        }
        drop(b);
        match run {
            Ok(()) => {}
            Err(e) if e.is_budget() => {
                complete = false;
                break;
            }
            Err(e) => return Err(e),
        }
        if !complete {
            break;
        }
    }
    let witness = best_clique
        .map(|c| family_with_identity(&graph, &order, &c))
        .transpose()?;
    let largest = witness.as_ref().map(Family::len);
    let ratio = largest.map(|s| ratio_of(&BigUint::from(s), &max_ak));
    Ok(StabilityReport {
        n,
        t,
        max_ak,
        largest_uncontained: largest,
        ratio_approx: ratio.as_ref().map(rational_to_f64),
        ratio,
        witness,
        optimal: complete,
        nodes,
    })
}
