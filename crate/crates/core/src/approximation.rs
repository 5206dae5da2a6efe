//! Spread approximation: repeatedly carve a maximal spread piece out of a
//! family until what remains is small, and the density-boost step that seeds
//! later stages.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ceil_root, factorial, floor_to_int, isqrt, rat_pow};
use crate::family::Family;
use crate::par::{self, Exec};
use crate::perm::PartialPermutation;
use crate::spread::{self, SpreadCertificate, DEFAULT_BUDGET};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproximationConfig {
    /// Largest admissible piece size.
    pub q: usize,
    /// Spread parameter.
    pub r: BigRational,
    /// Stop once fewer members than this remain.
    pub residual_threshold: BigUint,
    /// Later stages boost on members meeting the previous piece in `t − t_slack` cells.
    pub t_slack: usize,
    pub max_rounds: usize,
    /// With a booster: boost every round, or only when the unboosted piece is oversize.
    pub boost_every_round: bool,
    pub budget: u64,
}

impl ApproximationConfig {
    pub fn new(q: usize, r: BigRational) -> Self {
        ApproximationConfig {
            q,
            r,
            residual_threshold: BigUint::one(),
            t_slack: 0,
            max_rounds: 10_000,
            boost_every_round: false,
            budget: DEFAULT_BUDGET,
        }
    }

    fn validate(&self, t: usize) -> Result<()> {
        if self.q < t {
            return Err(Error::OutOfRange(format!("q = {} is below t = {t}", self.q)));
        }
        if self.r <= BigRational::one() {
            return Err(Error::OutOfRange("r must exceed 1".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::OutOfRange("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why the loop stopped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Termination {
    BelowThreshold {
        remaining: usize,
    },
    Oversize {
        #[serde(serialize_with = "crate::spread::ser_pp")]
        piece: PartialPermutation,
        size: usize,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Round {
    pub index: usize,
    #[serde(serialize_with = "crate::spread::ser_pp")]
    pub piece: PartialPermutation,
    pub piece_size: usize,
    pub family_before: usize,
    pub removed: usize,
    #[serde(serialize_with = "ser_opt_pp")]
    pub boosted_from: Option<PartialPermutation>,
    pub certificate: SpreadCertificate,
}

fn ser_opt_pp<S: serde::Serializer>(p: &Option<PartialPermutation>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::Serialize as _;
    p.as_ref().map(PartialPermutation::to_pairs).serialize(s)
}

#[derive(Debug, Clone)]
pub struct SpreadApproximation {
    pub pieces: Family,
    pub residual: Family,
    pub rounds_log: Vec<Round>,
    pub termination: Termination,
    /// Set when every piece has between `t` and `q` cells.
    pub t_intersecting: Option<bool>,
}

/// Callback proposing a seed set for the current family.
pub type Booster<'a> = dyn Fn(&Family) -> Result<Option<PartialPermutation>> + 'a;

/// Runs the approximation loop on `f`:
///
/// 1. stop if fewer than `residual_threshold` members remain;
/// 2. take a maximal `X` (seeded by the booster when it applies) with
///    `|F_j(X)|·r^{|X|−|seed|} ≥ |F_j(seed)|`;
/// 3. stop if `|X| > q`, recording the oversize piece;
/// 4. otherwise record `X`, check that `F_j(X)` is `r`-spread, and remove `F_j[X]`.
pub fn spread_approximation(
    f: &Family,
    t: usize,
    cfg: &ApproximationConfig,
    booster: Option<&Booster<'_>>,
) -> Result<SpreadApproximation> {
    cfg.validate(t)?;
    let n = f.n();
    let mut current = f.clone();
    let mut pieces: Vec<PartialPermutation> = Vec::new();
    let mut log = Vec::new();
    let termination = loop {
        if BigUint::from(current.len()) < cfg.residual_threshold || current.is_empty() {
            break Termination::BelowThreshold {
                remaining: current.len(),
            };
        }
        if log.len() >= cfg.max_rounds {
            return Err(Error::Budget(format!(
                "spread approximation did not finish within {} rounds",
                cfg.max_rounds
            )));
        }
        let empty = PartialPermutation::empty(n);
        let boost = |fam: &Family| -> Result<Option<PartialPermutation>> {
            match booster {
                Some(b) => b(fam),
                None => Ok(None),
            }
        };
        let (mut seed, mut found) = if booster.is_some() && cfg.boost_every_round {
            let seed = boost(&current)?;
            let base = seed.clone().unwrap_or_else(|| empty.clone());
            (
                seed,
                spread::find_spread_restriction(&current, &cfg.r, &base, cfg.budget)?,
            )
        } else {
            (
                None,
                spread::find_spread_restriction(&current, &cfg.r, &empty, cfg.budget)?,
            )
        };
        if found.x.len() > cfg.q && booster.is_some() && !cfg.boost_every_round {
            if let Some(x) = boost(&current)? {
                found = spread::find_spread_restriction(&current, &cfg.r, &x, cfg.budget)?;
                seed = Some(x);
            }
        }
        if found.x.len() > cfg.q {
            let size = found.x.len();
            break Termination::Oversize { piece: found.x, size };
        }
        let certificate = spread::is_r_spread(&found.g, &cfg.r, cfg.budget)?;
        if !certificate.passed() {
            return Err(Error::Internal(format!("restriction to {:?} is not r-spread", found.x)));
        }
        let before = current.len();
        current = current.filter(|m| !found.x.is_subset(m));
        log.push(Round {
            index: log.len() + 1,
            piece_size: found.x.len(),
            piece: found.x.clone(),
            family_before: before,
            removed: before - current.len(),
            boosted_from: seed,
            certificate,
        });
        pieces.push(found.x);
    };
    let pieces = Family::new(n, pieces)?;
    let t_intersecting = pieces
        .iter()
        .all(|p| (t..=cfg.q).contains(&p.len()))
        .then(|| pieces.is_t_intersecting(t));
    Ok(SpreadApproximation {
        pieces,
        residual: current,
        rounds_log: log,
        termination,
        t_intersecting,
    })
}

#[derive(Debug, Clone)]
pub struct Boost {
    pub x: PartialPermutation,
    pub covered: Family,
}

/// The `t_prime`-subset `X` of `s` contained in the most members of `f`
/// (first in lexicographic order on ties). By pigeonhole
/// `|f[X]| ≥ |f| / C(|s|, t_prime)`.
pub fn density_boost(f: &Family, s: &PartialPermutation, t_prime: usize, exec: Exec) -> Result<Boost> {
    if f.is_empty() {
        return Err(Error::Precondition("family is empty".into()));
    }
    if s.len() < t_prime {
        return Err(Error::Precondition(format!(
            "|s| = {} is below t' = {t_prime}",
            s.len()
        )));
    }
    if let Some(i) = f.iter().position(|m| m.meet(s) < t_prime) {
        return Err(Error::Precondition(format!(
            "member {i} meets s in fewer than t' = {t_prime} cells"
        )));
    }
    let candidates = s.k_subsets(t_prime);
    let counts = par::map_slice(exec, &candidates, |x| f.count_containing(x));
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    let x = candidates[best].clone();
    let covered = f.select(&x);
    Ok(Boost { x, covered })
}

/// One stage of the iterative driver.
#[derive(Debug, Clone)]
pub struct Stage {
    pub index: usize,
    /// Piece of the previous stage that seeded the boost.
    pub boosted_on: Option<PartialPermutation>,
    pub result: SpreadApproximation,
}

/// Runs one approximation per configuration. Every stage after the first
/// boosts on the largest piece `S` of the previous stage: the members of the
/// current family meeting `S` in at least `t − t_slack` cells vote for the
/// densest `(t − t_slack)`-subset of `S`, which seeds the restriction search.
pub fn iterative_driver(f: &Family, t: usize, schedule: &[ApproximationConfig], exec: Exec) -> Result<Vec<Stage>> {
    if schedule.is_empty() {
        return Err(Error::Precondition("schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| w[1].q > w[0].q) {
        return Err(Error::Precondition(
            "q must be non-increasing along the schedule".into(),
        ));
    }
    let mut stages: Vec<Stage> = Vec::new();
    for (i, cfg) in schedule.iter().enumerate() {
        let anchor = stages.last().and_then(|s: &Stage| {
            s.result
                .pieces
                .iter()
                .max_by(|a, b| a.len().cmp(&b.len()).then_with(|| b.cmp(a)))
                .cloned()
        });
        let result = match &anchor {
            None => spread_approximation(f, t, cfg, None)?,
            Some(s) => {
                let t_prime = t.saturating_sub(cfg.t_slack);
                let booster = |fam: &Family| -> Result<Option<PartialPermutation>> {
                    let voters = fam.filter(|m| m.meet(s) >= t_prime);
                    if voters.is_empty() || s.len() < t_prime {
                        return Ok(None);
                    }
                    Ok(Some(density_boost(&voters, s, t_prime, exec)?.x))
                };
                spread_approximation(f, t, cfg, Some(&booster))?
            }
        };
        stages.push(Stage {
            index: i + 1,
            boosted_on: anchor,
            result,
        });
    }
    Ok(stages)
}

/// `⌈u!/n⌉`.
pub fn basic_threshold(n: u64, t: u64) -> BigUint {
    let num = factorial(n - t);
    let n = BigUint::from(n);
    (&num + &n - 1u32) / n
}

/// `⌈2^i·u!/n^M⌉` for a rational `M ≥ 0`.
pub fn stage_threshold(n: u64, t: u64, i: u32, m: &BigRational) -> Result<BigUint> {
    if *m < BigRational::zero() {
        return Err(Error::OutOfRange("M must be nonnegative".into()));
    }
    let p = m.numer().to_biguint().expect("nonnegative");
    let q: u32 = m
        .denom()
        .try_into()
        .map_err(|_| Error::OutOfRange("denominator of M too large".into()))?;
    let x = BigRational::from_integer(BigInt::from((BigUint::one() << i) * factorial(n - t)));
    let np = BigRational::from_integer(BigInt::from(num_traits::pow(
        BigUint::from(n),
        usize::try_from(&p).map_err(|_| Error::OutOfRange("numerator of M too large".into()))?,
    )));
    // ⌈x / n^{p/q}⌉ is the least c with c^q ≥ x^q / n^p.
    let target = rat_pow(&x, q as i64) / np;
    Ok(ceil_root(&target, q))
}

/// `t + ⌊(1 − δ)^i·u⌋`.
pub fn stage_q(n: u64, t: u64, delta: &BigRational, i: u32) -> Result<u64> {
    if *delta < BigRational::zero() || *delta > BigRational::one() {
        return Err(Error::OutOfRange("delta must lie in [0, 1]".into()));
    }
    let factor = rat_pow(&(BigRational::one() - delta), i as i64);
    let u = BigRational::from_integer(BigInt::from(n - t));
    let fl = floor_to_int(&(factor * u));
    Ok(t + u64::try_from(fl).expect("between 0 and u"))
}

/// `⌊√n⌋`.
pub fn default_t_slack(n: u64) -> u64 {
    isqrt(n)
}
