//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so that every criterion is evaluated and
//! reported even when an earlier one fails. The process exits non-zero only
//! when an outcome differs from `EXPECTED_FAIL`: criteria listed there are
//! claims that the exact checks refute (see the decisions ledger), and a
//! PASS on one of them is treated as a regression in the check itself.

// Tolerances stay named constants even where they are zero.
#![allow(clippy::absurd_extreme_comparisons)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use sha2::{Digest, Sha256};

use permspread::ak::{
    ak_size_bounds, ak_size_exact, derangement_bound_holds, derangement_count, derangement_count_enumerated,
    max_ak_size,
};
use permspread::analysis::{good_tuple_search, member_profile, symmetric_tuple, GoodTuple, TupleSearch};
use permspread::approximation::{spread_approximation, ApproximationConfig, Termination};
use permspread::exact::{factorial, rat};
use permspread::gen::{random_permutation_family, random_probe, random_t_intersecting, FamilyShape};
use permspread::par::rng_from_seed;
use permspread::peeling::{
    check_w_k_degree_bound, coverage_check, has_tight_pair, peel, rough_bound_w_k, PeelingResult,
};
use permspread::perm::all_permutations;
use permspread::search::{max_t_intersecting, verify_conjecture, DEFAULT_NODE_BUDGET};
use permspread::spread::{is_r_spread, spread_lemma_estimate, RandomSubsetSpec, DEFAULT_BUDGET};
use permspread::{Exec, Family, PartialPermutation};

// Pinned tolerances. Every exact criterion allows zero violations.
const MAX_VIOLATIONS: usize = 0;
const SIGMA_MULTIPLIER: f64 = 3.0;
const COUNTING_TIME_LIMIT: Duration = Duration::from_secs(60);
const EXTREMAL_TIME_LIMIT: Duration = Duration::from_secs(600);

// Corpus sizes.
const CORPUS_FAMILIES: u64 = 500;
const PROBE_FAMILIES: usize = 50;
const DEGREE_PROBES: usize = 1000;
const SPREAD_FIXTURES: usize = 20;
const SPREAD_TRIALS: u64 = 10_000;
const TUPLE_LAYER_CAP: usize = 12;
const DETERMINISM_RUNS: usize = 3;

/// Criteria whose statements fail on exact small cases.
const EXPECTED_FAIL: &[u32] = &[5, 6];

struct Outcome {
    id: u32,
    title: &'static str,
    passed: bool,
    detail: String,
}

struct Instance {
    t: usize,
    q: usize,
    family: Family,
    peeled: PeelingResult,
}

fn corpus() -> Vec<Instance> {
    (0..CORPUS_FAMILIES)
        .map(|seed| {
            let n = 4 + (seed % 5) as usize;
            let t = 1 + (seed % 3) as usize;
            let shape = FamilyShape {
                n,
                t,
                extra: 4,
                bases: 3,
                members: 14,
                attempts: 600,
            };
            let family = random_t_intersecting(shape, seed);
            let q = (t + 4).min(n);
            let peeled = peel(&family, t, q).expect("corpus families are t-intersecting");
            Instance { t, q, family, peeled }
        })
        .collect()
}

fn brute_force_ak(n: usize, t: usize, k: usize) -> BigUint {
    let window = t + 2 * k;
    let count = all_permutations(n)
        .iter()
        .filter(|p| (1..=window).filter(|&i| p.apply(i) == i).count() >= t + k)
        .count();
    BigUint::from(count)
}

fn ak_grid() -> Vec<(usize, usize, usize)> {
    let mut grid = Vec::new();
    for n in 1..=7 {
        for t in 1..=n {
            for k in 0..=(n - t) / 2 {
                grid.push((n, t, k));
            }
        }
    }
    grid
}

fn counting_oracle() -> Outcome {
    let start = Instant::now();
    let grid = ak_grid();
    let bad: Vec<_> = grid
        .iter()
        .filter(|&&(n, t, k)| ak_size_exact(n, t, k).unwrap() != brute_force_ak(n, t, k))
        .collect();
    let elapsed = start.elapsed();
    Outcome {
        id: 1,
        title: "A_k counting equals enumeration, n <= 7",
        passed: bad.len() <= MAX_VIOLATIONS && elapsed < COUNTING_TIME_LIMIT,
        detail: format!(
            "{} cases, {} mismatches, {:.2}s",
            grid.len(),
            bad.len(),
            elapsed.as_secs_f64()
        ),
    }
}

fn sandwich() -> Outcome {
    let grid = ak_grid();
    let bad = grid
        .iter()
        .filter(|&&(n, t, k)| {
            let exact = ak_size_exact(n, t, k).unwrap();
            let b = ak_size_bounds(n, t, k).unwrap();
            !(b.lower <= num_bigint::BigInt::from(exact.clone()) && exact <= b.upper)
        })
        .count();
    Outcome {
        id: 2,
        title: "closed-form sandwich lower <= |A_k| <= upper",
        passed: bad <= MAX_VIOLATIONS,
        detail: format!("{} cases, {bad} violations", grid.len()),
    }
}

fn known_extremal() -> Outcome {
    let start = Instant::now();
    let mut cases = Vec::new();
    for n in 3..=5 {
        cases.push((n, 1, factorial(n as u64 - 1)));
    }
    for n in 2..=6 {
        for t in n - 1..=n {
            cases.push((n, t, BigUint::from(1u32)));
        }
    }
    for n in 3..=6 {
        cases.push((n, n - 2, max_ak_size(n, n - 2).unwrap().1));
    }
    let mut bad = Vec::new();
    for (n, t, want) in &cases {
        let got = max_t_intersecting(*n, *t, DEFAULT_NODE_BUDGET, Exec::default()).unwrap();
        if !got.optimal || &got.max_size != want {
            bad.push(format!("(n={n}, t={t}): {} vs {want}", got.max_size));
        }
    }
    let elapsed = start.elapsed();
    Outcome {
        id: 3,
        title: "known extremal values from clique search",
        passed: bad.len() <= MAX_VIOLATIONS && elapsed < EXTREMAL_TIME_LIMIT,
        detail: format!(
            "{} cases, {:.2}s {}",
            cases.len(),
            elapsed.as_secs_f64(),
            bad.join("; ")
        ),
    }
}

#[derive(serde::Deserialize)]
struct GoldenRow {
    n: usize,
    t: usize,
    max_size: String,
    conjecture_value: String,
    equal: bool,
    optima_examined: usize,
    optima_matched: usize,
}

fn conjecture_probe() -> Outcome {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/conjecture_small.json");
    let golden: Vec<GoldenRow> = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut bad = Vec::new();
    let mut flagged = Vec::new();
    for row in &golden {
        let rep = verify_conjecture(row.n, row.t, DEFAULT_NODE_BUDGET, true, Exec::default()).unwrap();
        let survey = rep.optima.as_ref().expect("survey requested");
        if !rep.result.equal || survey.matched != survey.examined {
            flagged.push(format!("(n={}, t={})", row.n, row.t));
        }
        let same = rep.result.max_size.to_string() == row.max_size
            && rep.result.conjecture_value.to_string() == row.conjecture_value
            && rep.result.equal == row.equal
            && survey.examined == row.optima_examined
            && survey.matched == row.optima_matched;
        if !same {
            bad.push(format!("(n={}, t={})", row.n, row.t));
        }
    }
    Outcome {
        id: 4,
        title: "conjecture probe n <= 5 matches the golden record",
        passed: bad.is_empty() && flagged.is_empty() && golden.len() == 15,
        detail: format!(
            "{} cases, {} golden mismatches, {} inequalities or non-A_k optima {}",
            golden.len(),
            bad.len(),
            flagged.len(),
            flagged.join(" ")
        ),
    }
}

fn peeling_invariants(corpus: &[Instance]) -> Outcome {
    let (mut uniform_bad, mut coverage_bad, mut inclusion_bad, mut degree_bad) = (0, 0, 0, 0);
    for (seed, inst) in corpus.iter().enumerate() {
        let p = &inst.peeled;
        let n = inst.family.n();
        let mut rng = rng_from_seed(seed as u64 ^ 0x5eed);
        if (0..=p.top()).any(|k| p.w(k).iter().any(|m| m.len() != inst.t + k)) {
            uniform_bad += 1;
        }
        let (mut eq, mut inc) = (true, true);
        for _ in 0..PROBE_FAMILIES {
            let probe = random_permutation_family(n, 6, &mut rng);
            for k in 1..=p.top() {
                let c = coverage_check(p, k, &probe).unwrap();
                eq &= c.equality_holds();
                inc &= c.inclusion_holds();
            }
        }
        coverage_bad += usize::from(!eq);
        inclusion_bad += usize::from(!inc);
        let mut degree_ok = true;
        for k in 1..=p.top() {
            let w = p.w(k);
            let probes: Vec<PartialPermutation> = (0..DEGREE_PROBES / p.top())
                .map(|_| random_probe(w, &mut rng))
                .collect();
            degree_ok &= check_w_k_degree_bound(w, inst.t, k, &probes)
                .unwrap()
                .violations
                .is_empty();
        }
        degree_bad += usize::from(!degree_ok);
    }
    let total = uniform_bad + coverage_bad + degree_bad;
    Outcome {
        id: 5,
        title: "peeling: uniform layers, coverage identity, degree bound",
        passed: total <= MAX_VIOLATIONS,
        detail: format!(
            "{} families; non-uniform {uniform_bad}, coverage equality {coverage_bad} (inclusion {inclusion_bad}), degree {degree_bad}",
            corpus.len()
        ),
    }
}

fn rough_bound(corpus: &[Instance]) -> Outcome {
    let (mut eligible, mut bad) = (0, 0);
    for inst in corpus {
        let p = &inst.peeled;
        for k in 1..=p.top() {
            if has_tight_pair(p.t_layer(k), inst.t) {
                eligible += 1;
                if BigUint::from(p.w(k).len()) > rough_bound_w_k(inst.t as u64, k as u64) {
                    bad += 1;
                }
            }
        }
    }
    Outcome {
        id: 6,
        title: "peeled |W_k| within the rough layer bound",
        passed: bad <= MAX_VIOLATIONS,
        detail: format!("{eligible} layers with a tight pair, {bad} exceed the bound"),
    }
}

fn spread_lemma() -> Outcome {
    let n = 10;
    let mut bad = Vec::new();
    for i in 0..SPREAD_FIXTURES {
        let size = 40 + 3 * i;
        let members: Vec<PartialPermutation> = (0..size)
            .map(|c| PartialPermutation::from_pairs(n, &[(c / n + 1, c % n + 1)]).unwrap())
            .collect();
        let f = Family::new(n, members).unwrap();
        let r = rat(size as i64, 1);
        let spread = is_r_spread(&f, &r, DEFAULT_BUDGET).unwrap().passed();
        let (p, m) = if i % 2 == 0 {
            (rat(9, 10), 1)
        } else {
            (rat(19, 20), 1 + (size >= 70) as u64)
        };
        let spec = RandomSubsetSpec::new(p, 1000 + i as u64).unwrap();
        let est = spread_lemma_estimate(&f, &spec, SPREAD_TRIALS, &r, m, Exec::default()).unwrap();
        let emp = est.hits as f64 / est.trials as f64;
        let ok = spread && emp >= est.spread_bound_approx - SIGMA_MULTIPLIER * est.sigma && est.within_three_sigma();
        if !ok {
            bad.push(i);
        }
    }
    Outcome {
        id: 7,
        title: "random-subset containment above the spread bound",
        passed: bad.len() <= MAX_VIOLATIONS,
        detail: format!("{SPREAD_FIXTURES} fixtures x {SPREAD_TRIALS} trials, failing {bad:?}"),
    }
}

fn approximation_contract(corpus: &[Instance]) -> Outcome {
    let mut bad = Vec::new();
    let r = rat(2, 1);
    for (seed, inst) in corpus.iter().enumerate() {
        let f = &inst.family;
        let cfg = ApproximationConfig::new(inst.q, r.clone());
        let a = spread_approximation(f, inst.t, &cfg, None).unwrap();
        // Replay the rounds: each removes exactly the survivors containing its piece.
        let mut current: Vec<PartialPermutation> = f.members().to_vec();
        let mut ok = true;
        for round in &a.rounds_log {
            let (hit, rest): (Vec<_>, Vec<_>) = current.into_iter().partition(|m| round.piece.is_subset(m));
            ok &= hit.len() == round.removed && round.piece.len() <= inst.q;
            let g = Family::new(f.n(), hit).unwrap().restrict(&round.piece);
            ok &= is_r_spread(&g, &r, DEFAULT_BUDGET).unwrap().passed();
            current = rest;
        }
        ok &= Family::new(f.n(), current).unwrap().same_set(&a.residual);
        let removed: usize = a.rounds_log.iter().map(|x| x.removed).sum();
        ok &= removed + a.residual.len() == f.len();
        if let Termination::Oversize { size, .. } = &a.termination {
            ok &= *size > inst.q;
        }
        let pieces = a.pieces.members();
        let pairwise = (0..pieces.len()).all(|i| (i + 1..pieces.len()).all(|j| pieces[i].meet(&pieces[j]) >= inst.t));
        let in_range = pieces.iter().all(|p| (inst.t..=inst.q).contains(&p.len()));
        ok &= a.t_intersecting == in_range.then_some(pairwise);
        if !ok {
            bad.push(seed);
        }
    }
    Outcome {
        id: 8,
        title: "spread approximation partitions exactly with spread pieces",
        passed: bad.len() <= MAX_VIOLATIONS,
        detail: format!("{} families, failing seeds {bad:?}", corpus.len()),
    }
}

/// Layers with at most `TUPLE_LAYER_CAP` members from the corpus, plus the
/// symmetric tuples that reach the lower bound by construction.
fn tuple_layers(corpus: &[Instance]) -> Vec<(Family, usize, usize, usize)> {
    let mut out = Vec::new();
    for inst in corpus {
        let p = &inst.peeled;
        for k in 1..=p.top() {
            let w = p.w(k);
            for r in 3..=4 {
                if (r..=TUPLE_LAYER_CAP).contains(&w.len()) {
                    out.push((w.clone(), inst.t, k, r));
                }
            }
        }
    }
    for (t, k, r) in [(2, 1, 3), (3, 1, 3), (4, 1, 4), (4, 2, 3), (5, 1, 5), (6, 2, 4)] {
        out.push((symmetric_tuple(t, k, r).unwrap(), t, k, r));
    }
    out
}

fn good_tuples(layers: &[(Family, usize, usize, usize)]) -> (Outcome, Vec<(Family, GoodTuple)>) {
    let mut bad = 0;
    let mut achieved = Vec::new();
    for (w, t, k, r) in layers {
        let exhaustive = good_tuple_search(w, *t, *k, *r, TupleSearch::Exhaustive, Exec::Sequential);
        let bnb = good_tuple_search(w, *t, *k, *r, TupleSearch::BranchAndBound, Exec::default());
        match (exhaustive, bnb) {
            (Ok(a), Ok(b)) => {
                let mut ok = a.min_intersection == b.min_intersection && a.indices == b.indices;
                if a.achieved_min {
                    let sets = &a.sets;
                    ok &= (0..sets.len()).all(|i| (i + 1..sets.len()).all(|j| sets[i].meet(&sets[j]) == *t));
                    ok &= a.profile_a.iter().take(r - 2).all(|&c| c == 0);
                    achieved.push((w.clone(), a));
                }
                bad += usize::from(!ok);
            }
            _ => bad += 1,
        }
    }
    let outcome = Outcome {
        id: 9,
        title: "good tuples: branch-and-bound equals exhaustive, forced structure",
        passed: bad <= MAX_VIOLATIONS,
        detail: format!(
            "{} layers, {} reach the lower bound, {bad} violations",
            layers.len(),
            achieved.len()
        ),
    };
    (outcome, achieved)
}

fn profiles(achieved: &[(Family, GoodTuple)]) -> Outcome {
    let (mut checked, mut bad) = (0, Vec::new());
    for (w, gt) in achieved {
        for b in w {
            checked += 1;
            let p = member_profile(b, gt).unwrap();
            if let Some(fail) = p.first_failure() {
                bad.push(fail.name.to_string());
            }
        }
    }
    Outcome {
        id: 10,
        title: "member profile inequalities against tight tuples",
        passed: bad.len() <= MAX_VIOLATIONS && !achieved.is_empty(),
        detail: format!("{} tuples, {checked} members, failures {bad:?}", achieved.len()),
    }
}

fn inclusion_exclusion(m: usize) -> BigUint {
    // Σ_j (−1)^j C(m, j) (m − j)!, accumulated in two nonnegative halves.
    let (mut plus, mut minus) = (BigUint::from(0u32), BigUint::from(0u32));
    for j in 0..=m {
        let term = permspread::exact::binomial(m as u64, j as u64) * factorial((m - j) as u64);
        if j % 2 == 0 {
            plus += term;
        } else {
            minus += term;
        }
    }
    plus - minus
}

fn derangements() -> Outcome {
    let enum_bad = (0..=8)
        .filter(|&m| derangement_count(m) != derangement_count_enumerated(m))
        .count();
    let ie_bad = (0..=20)
        .filter(|&m| derangement_count(m) != inclusion_exclusion(m))
        .count();
    let bound_bad = (0..=20).filter(|&m| !derangement_bound_holds(m)).count();
    Outcome {
        id: 11,
        title: "derangement counts and the m!/e - 1 lower bound",
        passed: enum_bad + ie_bad + bound_bad <= MAX_VIOLATIONS,
        detail: format!("enumeration {enum_bad}, inclusion-exclusion {ie_bad}, interval bound {bound_bad} violations"),
    }
}

fn write_inputs(dir: &Path) -> Vec<Vec<String>> {
    std::fs::create_dir_all(dir).unwrap();
    let put = |name: &str, text: String| -> String {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let shape = FamilyShape {
        n: 6,
        t: 2,
        extra: 3,
        bases: 3,
        members: 12,
        attempts: 400,
    };
    let fam = put("family.json", random_t_intersecting(shape, 11).to_json(Some(2)));
    let layer = put("layer.json", symmetric_tuple(3, 1, 3).unwrap().to_json(Some(3)));
    let singles: Vec<PartialPermutation> = (1..=6)
        .flat_map(|i| (1..=6).map(move |j| (i, j)))
        .map(|c| PartialPermutation::from_pairs(6, &[c]).unwrap())
        .collect();
    let singles = put("singles.json", Family::new(6, singles).unwrap().to_json(None));
    let args = |s: &str| s.split_whitespace().map(String::from).collect::<Vec<_>>();
    vec![
        args("ak-size 4 1 1 --exact"),
        args("ak-size 7 2 2 --bounds"),
        args("bounds-report 8 2"),
        args("bounds-report 8 2 --csv"),
        args("max-family 3 1"),
        args("max-family 4 2 --all-optima"),
        args("verify-conjecture 4 --t 1..4"),
        args(&format!("peel --in {fam}")),
        args(&format!("simplify --in {fam}")),
        args(&format!("spread-check --in {fam} --r 3/2")),
        args(&format!("spread-check --in {fam} --r 3/2 --t 2")),
        args(&format!("spread-approx --in {fam} --t 2 --q 5 --r 2 --seed 5")),
        args(&format!("good-tuple --in {layer} --t 3 --k 1 --r 3")),
        args(&format!(
            "spread-lemma --in {singles} --p 9/10 --trials 4000 --seed 7 --r 36"
        )),
    ]
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_permspread");
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    let commands = write_inputs(&dir);
    let mut bad = Vec::new();
    for (ci, argv) in commands.iter().enumerate() {
        let mut outputs = Vec::new();
        let mut digests = Vec::new();
        for run in 0..DETERMINISM_RUNS {
            let manifest = dir.join(format!("manifest-{ci}-{run}.json"));
            let out = Command::new(bin)
                .args(argv)
                .arg("--manifest")
                .arg(&manifest)
                .output()
                .unwrap();
            let m: serde_json::Value = serde_json::from_slice(&std::fs::read(&manifest).unwrap_or_default())
                .unwrap_or(serde_json::Value::Null);
            digests.push(m["output_digest"].as_str().unwrap_or("").to_string());
            outputs.push((out.status.code(), out.stdout));
        }
        let own = hex::encode(Sha256::digest(&outputs[0].1));
        let ok =
            outputs[0].0 == Some(0) && outputs.iter().all(|o| o == &outputs[0]) && digests.iter().all(|d| d == &own);
        if !ok {
            bad.push(argv[0].clone());
        }
    }
    Outcome {
        id: 12,
        title: "CLI output byte-identical across repeated runs",
        passed: bad.len() <= MAX_VIOLATIONS,
        detail: format!(
            "{} commands x {DETERMINISM_RUNS} runs, differing {bad:?}",
            commands.len()
        ),
    }
}

fn main() {
    let corpus = corpus();
    let layers = tuple_layers(&corpus);
    let (tuples, achieved) = good_tuples(&layers);
    let outcomes = vec![
        counting_oracle(),
        sandwich(),
        known_extremal(),
        conjecture_probe(),
        peeling_invariants(&corpus),
        rough_bound(&corpus),
        spread_lemma(),
        approximation_contract(&corpus),
        tuples,
        profiles(&achieved),
        derangements(),
        determinism(),
    ];
    let mut regressions = 0;
    for o in &outcomes {
        let expected = !EXPECTED_FAIL.contains(&o.id);
        let note = if o.passed == expected { "" } else { "  [unexpected]" };
        println!(
            "{} {:>2}  {}: {}{note}",
            if o.passed { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.detail
        );
        regressions += usize::from(o.passed != expected);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria pass; {regressions} unexpected", outcomes.len());
    if regressions > 0 {
        std::process::exit(1);
    }
}
