//! Exact combinatorics for t-intersecting families of permutations.
//!
//! Permutations of `[n]` are handled as sets of cells `(i, σ(i))`, so that
//! "agree on t points" becomes "share t cells". On top of that representation
//! the crate provides the extremal families `A_k` with exact counting,
//! spreadness tests and spread approximations, the simplify/peel layer
//! decomposition, good-tuple analysis of layers, and brute-force oracles
//! (maximum cliques in the agreement graph) for small `n`.

pub mod ak;
pub mod analysis;
pub mod approximation;
pub mod error;
pub mod estimates;
pub mod exact;
pub mod family;
pub mod gen;
pub mod interval;
pub mod par;
pub mod peeling;
pub mod perm;
pub mod search;
pub mod spread;

pub use error::{Error, Result};
pub use exact::BigCount;
pub use family::{Family, FamilyFile};
pub use par::Exec;
pub use perm::{Cell, CellSet, PartialPermutation, Permutation};
