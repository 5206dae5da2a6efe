//! Families of partial permutations over a shared ground size, with the
//! selection operators `F[X]`, `F(X)`, `F[S]` and the shared JSON format.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perm::{Cell, CellSet, PartialPermutation, Permutation};

/// An ordered collection of distinct partial permutations of `[n]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Family {
    n: usize,
    members: Vec<PartialPermutation>,
}

impl Family {
    pub fn empty(n: usize) -> Self {
        Family { n, members: Vec::new() }
    }

    /// Builds a family, rejecting duplicates and ground-size mismatches.
    pub fn new(n: usize, members: Vec<PartialPermutation>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(members.len());
        for (i, m) in members.iter().enumerate() {
            if m.n() != n {
                return Err(Error::InvalidMember {
                    index: i,
                    reason: format!("ground size {} differs from {}", m.n(), n),
                });
            }
            if !seen.insert(m.cellset()) {
                return Err(Error::DuplicateMember { index: i });
            }
        }
        Ok(Family { n, members })
    }

    /// Builds a family keeping the first occurrence of each member.
    pub fn dedup(n: usize, members: impl IntoIterator<Item = PartialPermutation>) -> Self {
        let mut seen = HashSet::new();
        let members = members
            .into_iter()
            .filter(|m| seen.insert(m.cellset().clone()))
            .collect();
        Family { n, members }
    }

    pub fn from_permutations(n: usize, perms: &[Permutation]) -> Result<Self> {
        Self::new(n, perms.iter().map(Permutation::to_partial).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[PartialPermutation] {
        &self.members
    }

    pub fn into_members(self) -> Vec<PartialPermutation> {
        self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PartialPermutation> {
        self.members.iter()
    }

    pub fn contains(&self, x: &PartialPermutation) -> bool {
        self.members.iter().any(|m| m == x)
    }

    /// `F[X]`: members containing `x`.
    pub fn select(&self, x: &PartialPermutation) -> Family {
        Family {
            n: self.n,
            members: self.members.iter().filter(|m| x.is_subset(m)).cloned().collect(),
        }
    }

    /// `|F[X]|` without materializing.
    pub fn count_containing(&self, x: &PartialPermutation) -> usize {
        self.members.iter().filter(|m| x.is_subset(m)).count()
    }

    /// `F(X)`: members containing `x`, with `x` removed.
    ///
    /// Distinct supersets of `x` stay distinct after removing `x`, so the
    /// result has the same cardinality as [`Family::select`].
    pub fn restrict(&self, x: &PartialPermutation) -> Family {
        Family {
            n: self.n,
            members: self
                .members
                .iter()
                .filter(|m| x.is_subset(m))
                .map(|m| m.minus(x))
                .collect(),
        }
    }

    /// `F[S]`: members containing at least one member of `s`, in the order of `self`.
    pub fn select_many(&self, s: &Family) -> Family {
        Family {
            n: self.n,
            members: self
                .members
                .iter()
                .filter(|m| s.members.iter().any(|x| x.is_subset(m)))
                .cloned()
                .collect(),
        }
    }

    /// Members not containing any member of `s`: `F ∖ F[S]`.
    pub fn reject_many(&self, s: &Family) -> Family {
        Family {
            n: self.n,
            members: self
                .members
                .iter()
                .filter(|m| !s.members.iter().any(|x| x.is_subset(m)))
                .cloned()
                .collect(),
        }
    }

    pub fn filter(&self, mut keep: impl FnMut(&PartialPermutation) -> bool) -> Family {
        Family {
            n: self.n,
            members: self.members.iter().filter(|m| keep(m)).cloned().collect(),
        }
    }

    /// Every unordered pair of distinct members shares at least `t` cells.
    pub fn is_t_intersecting(&self, t: usize) -> bool {
        self.first_weak_pair(t).is_none()
    }

    /// First pair `(i, j)`, `i < j`, meeting in fewer than `t` cells.
    pub fn first_weak_pair(&self, t: usize) -> Option<(usize, usize)> {
        for i in 0..self.members.len() {
            for j in i + 1..self.members.len() {
                if self.members[i].meet(&self.members[j]) < t {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Smallest pairwise intersection, `None` with fewer than two members.
    pub fn min_pair_intersection(&self) -> Option<usize> {
        let mut best = None;
        for i in 0..self.members.len() {
            for j in i + 1..self.members.len() {
                let v = self.members[i].meet(&self.members[j]);
                best = Some(best.map_or(v, |b: usize| b.min(v)));
            }
        }
        best
    }

    /// Union of all members' cells.
    pub fn support(&self) -> CellSet {
        let mut acc = CellSet::empty(self.n * self.n);
        for m in &self.members {
            acc = acc.union(m.cellset());
        }
        acc
    }

    pub fn max_member_size(&self) -> usize {
        self.members.iter().map(PartialPermutation::len).max().unwrap_or(0)
    }

    /// Members sorted by cell-set order (a canonical form for set comparison).
    pub fn sorted(&self) -> Family {
        let mut members = self.members.clone();
        members.sort();
        Family { n: self.n, members }
    }

    /// Equality as sets, ignoring order.
    pub fn same_set(&self, other: &Family) -> bool {
        self.n == other.n && self.sorted().members == other.sorted().members
    }

    pub fn to_file(&self, t: Option<usize>) -> FamilyFile {
        FamilyFile {
            n: self.n,
            t,
            sets: self.members.iter().map(PartialPermutation::to_pairs).collect(),
        }
    }

    pub fn to_json(&self, t: Option<usize>) -> String {
        serde_json::to_string(&self.to_file(t)).expect("family serialization cannot fail")
    }

    /// Parses the shared JSON format; returns the family and its optional `t`.
    pub fn from_json(text: &str) -> Result<(Family, Option<usize>)> {
        let file: FamilyFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_family()
    }
}

impl<'a> IntoIterator for &'a Family {
    type Item = &'a PartialPermutation;
    type IntoIter = std::slice::Iter<'a, PartialPermutation>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// On-disk family: `{"n": int, "t": int|null, "sets": [[[row,col],...], ...]}`, 1-based.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct FamilyFile {
    pub n: usize,
    #[serde(default)]
    pub t: Option<usize>,
    pub sets: Vec<Vec<[usize; 2]>>,
}

impl FamilyFile {
    pub fn into_family(self) -> Result<(Family, Option<usize>)> {
        if self.n == 0 {
            return Err(Error::OutOfRange("n must be positive".into()));
        }
        if let Some(t) = self.t {
            if t > self.n {
                return Err(Error::OutOfRange(format!("t = {t} exceeds n = {}", self.n)));
            }
        }
        let mut members = Vec::with_capacity(self.sets.len());
        for (index, set) in self.sets.iter().enumerate() {
            let mut seen = HashSet::new();
            for &[r, c] in set {
                if !seen.insert((r, c)) {
                    return Err(Error::InvalidMember {
                        index,
                        reason: format!("cell ({r},{c}) listed twice"),
                    });
                }
            }
            let p = PartialPermutation::new(self.n, set.iter().map(|&[r, c]| Cell::new(r, c))).map_err(|e| {
                Error::InvalidMember {
                    index,
                    reason: e.to_string(),
                }
            })?;
            members.push(p);
        }
        Ok((Family::new(self.n, members)?, self.t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(n: usize, sets: &[&[(usize, usize)]]) -> Family {
        Family::new(
            n,
            sets.iter()
                .map(|s| PartialPermutation::from_pairs(n, s).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn t_intersection_examples() {
        let id = Permutation::identity(4);
        let tr = Permutation::transposition(4, 1, 2);
        let single = Family::from_permutations(4, std::slice::from_ref(&id)).unwrap();
        assert!(single.is_t_intersecting(4));
        let pair = Family::from_permutations(4, &[id, tr]).unwrap();
        assert!(pair.is_t_intersecting(2));
        assert!(!pair.is_t_intersecting(3));
        assert_eq!(pair.first_weak_pair(3), Some((0, 1)));
    }

    #[test]
    fn select_and_restrict() {
        let f = Family::from_permutations(3, &[Permutation::identity(3), Permutation::transposition(3, 1, 2)]).unwrap();
        let x = PartialPermutation::from_pairs(3, &[(3, 3)]).unwrap();
        assert_eq!(f.select(&x).len(), 2);
        let r = f.restrict(&x);
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|m| m.len() == 2));
        let y = PartialPermutation::from_pairs(3, &[(1, 3)]).unwrap();
        assert!(f.select(&y).is_empty());
        assert!(f.restrict(&y).is_empty());
    }

    #[test]
    fn select_many_deduplicates() {
        let f = fam(3, &[&[(1, 1), (2, 2)], &[(1, 1), (2, 3)], &[(3, 3)]]);
        let s = fam(3, &[&[(1, 1)], &[(2, 2)]]);
        let sel = f.select_many(&s);
        assert_eq!(sel.len(), 2);
        assert_eq!(f.reject_many(&s).len(), 1);
    }

    #[test]
    fn json_round_trip_and_errors() {
        let f = fam(3, &[&[(1, 1), (2, 2)], &[(3, 3)]]);
        let text = f.to_json(Some(1));
        let (g, t) = Family::from_json(&text).unwrap();
        assert_eq!(g, f);
        assert_eq!(t, Some(1));

        let bad = r#"{"n":3,"t":null,"sets":[[[1,1]],[[1,2],[1,3]]]}"#;
        assert!(matches!(
            Family::from_json(bad),
            Err(Error::InvalidMember { index: 1, .. })
        ));
        let dup = r#"{"n":3,"sets":[[[1,1]],[[1,1]]]}"#;
        assert!(matches!(
            Family::from_json(dup),
            Err(Error::DuplicateMember { index: 1 })
        ));
        let range = r#"{"n":3,"sets":[[[4,1]]]}"#;
        assert!(matches!(
            Family::from_json(range),
            Err(Error::InvalidMember { index: 0, .. })
        ));
        assert!(matches!(Family::from_json("{"), Err(Error::Parse(_))));
    }
}
