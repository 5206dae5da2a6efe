//! Permutations of `[n]` viewed as sets of cells `(i, σ(i))` in the `n × n`
//! grid, and partial permutations (subsets of such sets).

use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A cell of the grid, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Row-major index in `[0, n²)`; row-major order is the lexicographic order on cells.
    pub fn index(&self, n: usize) -> usize {
        (self.row - 1) * n + (self.col - 1)
    }

    pub fn from_index(idx: usize, n: usize) -> Self {
        Cell {
            row: idx / n + 1,
            col: idx % n + 1,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

/// Fixed-width bitset over cell indices. Two words cover grids up to 11×11
/// without touching the heap.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    words: SmallVec<[u64; 2]>,
}

impl CellSet {
    pub fn empty(universe: usize) -> Self {
        CellSet {
            words: SmallVec::from_elem(0, universe.div_ceil(64).max(1)),
        }
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn intersection_len(&self, other: &CellSet) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    #[inline]
    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn union(&self, other: &CellSet) -> CellSet {
        CellSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect(),
        }
    }

    pub fn intersection(&self, other: &CellSet) -> CellSet {
        CellSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
        }
    }

    pub fn difference(&self, other: &CellSet) -> CellSet {
        CellSet {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect(),
        }
    }

    /// Indices in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + b)
                }
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl Ord for CellSet {
    /// Lexicographic order of the sorted index sequences.
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.iter();
        let mut b = other.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some(x), Some(y)) if x != y => return x.cmp(&y),
                _ => {}
            }
        }
    }
}

impl PartialOrd for CellSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for CellSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A set of cells with pairwise distinct rows and pairwise distinct columns.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PartialPermutation {
    n: usize,
    cells: CellSet,
}

impl PartialPermutation {
    pub fn empty(n: usize) -> Self {
        PartialPermutation {
            n,
            cells: CellSet::empty(n * n),
        }
    }

    /// Validates bounds and the matching property.
    pub fn new(n: usize, cells: impl IntoIterator<Item = Cell>) -> Result<Self> {
        let mut set = CellSet::empty(n * n);
        let mut rows = vec![false; n + 1];
        let mut cols = vec![false; n + 1];
        for c in cells {
            if c.row == 0 || c.col == 0 || c.row > n || c.col > n {
                return Err(Error::CellOutOfRange {
                    row: c.row,
                    col: c.col,
                    n,
                });
            }
            let idx = c.index(n);
            if set.contains(idx) {
                continue;
            }
            if rows[c.row] {
                return Err(Error::NotMatching {
                    axis: "row",
                    index: c.row,
                });
            }
            if cols[c.col] {
                return Err(Error::NotMatching {
                    axis: "column",
                    index: c.col,
                });
            }
            rows[c.row] = true;
            cols[c.col] = true;
            set.insert(idx);
        }
        Ok(PartialPermutation { n, cells: set })
    }

    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        Self::new(n, pairs.iter().map(|&(r, c)| Cell::new(r, c)))
    }

    /// Wraps a cell set, checking the matching property.
    pub fn from_cellset(n: usize, cells: CellSet) -> Result<Self> {
        Self::new(n, cells.iter().map(|i| Cell::from_index(i, n)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cellset(&self) -> &CellSet {
        &self.cells
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().map(move |i| Cell::from_index(i, self.n))
    }

    pub fn contains_cell(&self, c: Cell) -> bool {
        c.row >= 1 && c.col >= 1 && c.row <= self.n && c.col <= self.n && self.cells.contains(c.index(self.n))
    }

    fn check_ground(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            Err(Error::GroundMismatch {
                left: self.n,
                right: other.n,
            })
        } else {
            Ok(())
        }
    }

    /// `|a ∩ b|` as sets of cells.
    pub fn intersection_size(&self, other: &Self) -> Result<usize> {
        self.check_ground(other)?;
        Ok(self.cells.intersection_len(&other.cells))
    }

    /// Unchecked variant for hot loops where the ground size is known to agree.
    #[inline]
    pub fn meet(&self, other: &Self) -> usize {
        self.cells.intersection_len(&other.cells)
    }

    #[inline]
    pub fn is_subset(&self, other: &Self) -> bool {
        self.cells.is_subset(&other.cells)
    }

    pub fn minus(&self, other: &Self) -> PartialPermutation {
        PartialPermutation {
            n: self.n,
            cells: self.cells.difference(&other.cells),
        }
    }

    pub fn intersect(&self, other: &Self) -> PartialPermutation {
        PartialPermutation {
            n: self.n,
            cells: self.cells.intersection(&other.cells),
        }
    }

    /// Union, if it is still a partial permutation.
    pub fn union(&self, other: &Self) -> Result<PartialPermutation> {
        self.check_ground(other)?;
        Self::from_cellset(self.n, self.cells.union(&other.cells))
    }

    pub fn without_cell(&self, idx: usize) -> PartialPermutation {
        let mut cells = self.cells.clone();
        cells.remove(idx);
        PartialPermutation { n: self.n, cells }
    }

    /// Cell-index pairs `(row, col)` 1-based, sorted.
    pub fn to_pairs(&self) -> Vec<[usize; 2]> {
        self.cells().map(|c| [c.row, c.col]).collect()
    }

    /// Row `r` (1-based) is used by some cell.
    pub fn uses_row(&self, r: usize) -> bool {
        (1..=self.n).any(|c| self.cells.contains((r - 1) * self.n + c - 1))
    }

    pub fn uses_col(&self, c: usize) -> bool {
        (1..=self.n).any(|r| self.cells.contains((r - 1) * self.n + c - 1))
    }

    /// All subsets, as partial permutations, in no particular order.
    pub fn subsets(&self) -> Vec<PartialPermutation> {
        let idx = self.cells.to_vec();
        let mut out = Vec::with_capacity(1 << idx.len());
        for mask in 0u64..(1u64 << idx.len()) {
            let mut s = CellSet::empty(self.n * self.n);
            for (b, &i) in idx.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    s.insert(i);
                }
            }
            out.push(PartialPermutation { n: self.n, cells: s });
        }
        out
    }

    /// `k`-element subsets in lexicographic order.
    pub fn k_subsets(&self, k: usize) -> Vec<PartialPermutation> {
        let idx = self.cells.to_vec();
        let mut out = Vec::new();
        combinations(idx.len(), k, |choice| {
            let mut s = CellSet::empty(self.n * self.n);
            for &c in choice {
                s.insert(idx[c]);
            }
            out.push(PartialPermutation { n: self.n, cells: s });
        });
        out
    }
}

impl Ord for PartialPermutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n.cmp(&other.n).then_with(|| self.cells.cmp(&other.cells))
    }
}

impl PartialOrd for PartialPermutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PartialPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, c) in self.cells().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, "}}")
    }
}

/// Calls `f` on every `k`-subset of `0..m` (as sorted index slices) in lexicographic order.
pub fn combinations(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// A full permutation of `[n]`, kept both as images and as a cell set.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    /// From one-line notation `σ(1), …, σ(n)` (1-based).
    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n + 1];
        for &v in &images {
            if v == 0 || v > n {
                return Err(Error::OutOfRange(format!("image {v} not in [1, {n}]")));
            }
            if seen[v] {
                return Err(Error::Precondition(format!("image {v} repeated")));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            images: (1..=n).collect(),
        }
    }

    /// The transposition swapping `i` and `j`.
    pub fn transposition(n: usize, i: usize, j: usize) -> Self {
        let mut images: Vec<usize> = (1..=n).collect();
        images.swap(i - 1, j - 1);
        Permutation { images }
    }

    /// The cycle `c[0] -> c[1] -> … -> c[0]`.
    pub fn cycle(n: usize, c: &[usize]) -> Self {
        let mut images: Vec<usize> = (1..=n).collect();
        for w in 0..c.len() {
            images[c[w] - 1] = c[(w + 1) % c.len()];
        }
        Permutation { images }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn apply(&self, i: usize) -> usize {
        self.images[i - 1]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.n()];
        for (i, &v) in self.images.iter().enumerate() {
            inv[v - 1] = i + 1;
        }
        Permutation { images: inv }
    }

    /// `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: other.images.iter().map(|&v| self.images[v - 1]).collect(),
        }
    }

    pub fn to_partial(&self) -> PartialPermutation {
        let n = self.n();
        let mut cells = CellSet::empty(n * n);
        for (i, &v) in self.images.iter().enumerate() {
            cells.insert(i * n + v - 1);
        }
        PartialPermutation { n, cells }
    }

    /// Reads a full permutation back from its cell set.
    pub fn from_partial(p: &PartialPermutation) -> Result<Self> {
        if p.len() != p.n() {
            return Err(Error::Precondition(format!(
                "partial permutation has {} cells, expected {}",
                p.len(),
                p.n()
            )));
        }
        let mut images = vec![0; p.n()];
        for c in p.cells() {
            images[c.row - 1] = c.col;
        }
        Ok(Permutation { images })
    }

    pub fn fixed_points(&self) -> usize {
        self.images.iter().enumerate().filter(|(i, &v)| i + 1 == v).count()
    }

    /// Number of positions where `self` and `other` agree, `|self ∩ other|` as cell sets.
    pub fn agreement(&self, other: &Permutation) -> usize {
        self.images.iter().zip(&other.images).filter(|(a, b)| a == b).count()
    }
}

/// Serialized in one-line notation.
impl serde::Serialize for Permutation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.images.serialize(s)
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images)
    }
}

/// Every permutation of `[n]` in lexicographic order of one-line notation.
pub fn all_permutations(n: usize) -> Vec<Permutation> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (1..=n).collect();
    loop {
        out.push(Permutation { images: cur.clone() });
        if !next_permutation(&mut cur) {
            break;
        }
    }
    out
}

/// Advances to the next permutation in lexicographic order; false at the last one.
pub fn next_permutation(a: &mut [usize]) -> bool {
    if a.len() < 2 {
        return false;
    }
    let mut i = a.len() - 1;
    while i > 0 && a[i - 1] >= a[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = a.len() - 1;
    while a[j] <= a[i - 1] {
        j -= 1;
    }
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_shared_rows_and_columns() {
        assert!(matches!(
            PartialPermutation::from_pairs(3, &[(1, 1), (1, 2)]),
            Err(Error::NotMatching { axis: "row", .. })
        ));
        assert!(matches!(
            PartialPermutation::from_pairs(3, &[(1, 2), (3, 2)]),
            Err(Error::NotMatching { axis: "column", .. })
        ));
        assert!(matches!(
            PartialPermutation::from_pairs(3, &[(4, 1)]),
            Err(Error::CellOutOfRange { .. })
        ));
    }

    #[test]
    fn intersection_examples() {
        let id5 = Permutation::identity(5).to_partial();
        assert_eq!(id5.intersection_size(&id5).unwrap(), 5);
        let id4 = Permutation::identity(4).to_partial();
        let t12 = Permutation::transposition(4, 1, 2).to_partial();
        assert_eq!(id4.intersection_size(&t12).unwrap(), 2);
        let a = PartialPermutation::from_pairs(4, &[(1, 1)]).unwrap();
        let b = PartialPermutation::from_pairs(4, &[(2, 2)]).unwrap();
        assert_eq!(a.intersection_size(&b).unwrap(), 0);
        assert!(matches!(id5.intersection_size(&id4), Err(Error::GroundMismatch { .. })));
    }

    #[test]
    fn enumeration_counts_and_order() {
        assert_eq!(all_permutations(0).len(), 1);
        assert_eq!(all_permutations(4).len(), 24);
        let p = all_permutations(3);
        assert_eq!(p[0], Permutation::identity(3));
        assert_eq!(p[5].images(), &[3, 2, 1]);
    }

    #[test]
    fn combinations_lexicographic() {
        let mut seen = Vec::new();
        combinations(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        let mut count = 0;
        combinations(5, 0, |_| count += 1);
        assert_eq!(count, 1);
        combinations(2, 3, |_| panic!("no 3-subsets of a 2-set"));
    }

    #[test]
    fn compose_and_inverse() {
        let c = Permutation::cycle(4, &[1, 2, 3, 4]);
        assert_eq!(c.images(), &[2, 3, 4, 1]);
        assert_eq!(c.compose(&c.inverse()), Permutation::identity(4));
        let round = Permutation::from_partial(&c.to_partial()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn cellset_order_is_lexicographic() {
        let a = PartialPermutation::from_pairs(3, &[(1, 1), (3, 3)]).unwrap();
        let b = PartialPermutation::from_pairs(3, &[(1, 1), (2, 2)]).unwrap();
        let c = PartialPermutation::from_pairs(3, &[(1, 1)]).unwrap();
        assert!(b < a);
        assert!(c < b);
    }
}
