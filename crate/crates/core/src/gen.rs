//! Seeded generators of random test instances.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::family::Family;
use crate::par::{rng_from_seed, Rng};
use crate::perm::{CellSet, PartialPermutation, Permutation};

pub fn random_permutation(n: usize, rng: &mut Rng) -> Permutation {
    let mut images: Vec<usize> = (1..=n).collect();
    images.shuffle(rng);
    Permutation::from_images(images).expect("a shuffle is a permutation")
}

/// Shape of a random `t`-intersecting family.
#[derive(Debug, Clone, Copy)]
pub struct FamilyShape {
    pub n: usize,
    pub t: usize,
    /// Largest member size is `t + extra` (capped at `n`).
    pub extra: usize,
    /// Number of base permutations members are cut from.
    pub bases: usize,
    /// Target number of members; fewer are returned if attempts run out.
    pub members: usize,
    pub attempts: usize,
}

/// Random `t`-intersecting family: a handful of nearby base permutations
/// (a random permutation composed with a few random transpositions), and
/// members drawn as random subsets of a base with `t..=t+extra` cells,
/// accepted only when they keep the family `t`-intersecting and new.
pub fn random_t_intersecting(shape: FamilyShape, seed: u64) -> Family {
    let mut rng = rng_from_seed(seed);
    let FamilyShape { n, t, extra, .. } = shape;
    let root = random_permutation(n, &mut rng);
    let bases: Vec<Permutation> = (0..shape.bases.max(1))
        .map(|_| {
            let swaps = rng.random_range(0..=2);
            let mut p = root.clone();
            for _ in 0..swaps {
                let i = rng.random_range(1..=n);
                let j = rng.random_range(1..=n);
                if i != j {
                    p = p.compose(&Permutation::transposition(n, i, j));
                }
            }
            p
        })
        .collect();
    let mut members: Vec<PartialPermutation> = Vec::new();
    let max_size = (t + extra).min(n);
    for _ in 0..shape.attempts {
        if members.len() >= shape.members {
            break;
        }
        let base = bases[rng.random_range(0..bases.len())].to_partial();
        let size = rng.random_range(t..=max_size);
        let mut cells = base.cellset().to_vec();
        cells.shuffle(&mut rng);
        let mut set = CellSet::empty(n * n);
        for &c in &cells[..size] {
            set.insert(c);
        }
        let cand = PartialPermutation::from_cellset(n, set).expect("subset of a permutation");
        if members.iter().all(|m| m != &cand && m.meet(&cand) >= t) {
            members.push(cand);
        }
    }
    Family::new(n, members).expect("members are distinct by construction")
}

/// Random family of `count` full permutations (distinct, possibly fewer if
/// `count` exceeds `n!` or attempts run out).
pub fn random_permutation_family(n: usize, count: usize, rng: &mut Rng) -> Family {
    let mut out: Vec<PartialPermutation> = Vec::new();
    for _ in 0..count * 4 {
        if out.len() >= count {
            break;
        }
        let p = random_permutation(n, rng).to_partial();
        if !out.contains(&p) {
            out.push(p);
        }
    }
    Family::new(n, out).expect("distinct by construction")
}

/// Random subset of a random member of `f` (or of a random permutation when
/// `f` is empty), used as a probe set.
pub fn random_probe(f: &Family, rng: &mut Rng) -> PartialPermutation {
    let n = f.n();
    let source = if f.is_empty() || rng.random_bool(0.25) {
        random_permutation(n, rng).to_partial()
    } else {
        f.members()[rng.random_range(0..f.len())].clone()
    };
    let mut set = CellSet::empty(n * n);
    for c in source.cellset().iter() {
        if rng.random_bool(0.5) {
            set.insert(c);
        }
    }
    PartialPermutation::from_cellset(n, set).expect("subset of a partial permutation")
}
