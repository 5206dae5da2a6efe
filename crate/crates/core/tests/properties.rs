use proptest::prelude::*;

use permspread::ak::{ak_size_exact, build_ak, derangement_count, in_translate, max_ak_size};
use permspread::analysis::{good_tuple_search, TupleSearch};
use permspread::exact::rat;
use permspread::gen::{random_permutation, random_t_intersecting, FamilyShape};
use permspread::par::rng_from_seed;
use permspread::peeling::{check_simplified, peel, simplify};
use permspread::perm::all_permutations;
use permspread::search::{
    detect_ak_structure, max_clique_unpruned, max_t_intersecting, AgreementGraph, DEFAULT_NODE_BUDGET,
};
use permspread::spread::{is_r_spread, sample_containment, RandomSubsetSpec, DEFAULT_BUDGET};
use permspread::{Exec, Family, Permutation};

fn perm(n: usize, seed: u64) -> Permutation {
    random_permutation(n, &mut rng_from_seed(seed))
}

fn family(n: usize, t: usize, seed: u64) -> Family {
    let shape = FamilyShape {
        n,
        t,
        extra: 3,
        bases: 3,
        members: 10,
        attempts: 300,
    };
    random_t_intersecting(shape, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agreement_is_cell_overlap_and_translation_invariant(n in 1usize..9, a in any::<u64>(), b in any::<u64>(), c in any::<u64>()) {
        let (x, y, z) = (perm(n, a), perm(n, b), perm(n, c));
        prop_assert_eq!(x.agreement(&y), x.to_partial().meet(&y.to_partial()));
        prop_assert_eq!(x.agreement(&y), y.agreement(&x));
        prop_assert_eq!(z.compose(&x).agreement(&z.compose(&y)), x.agreement(&y));
        prop_assert_eq!(x.compose(&z).agreement(&y.compose(&z)), x.agreement(&y));
        prop_assert_eq!(x.compose(&x.inverse()), Permutation::identity(n));
    }

    #[test]
    fn generated_families_round_trip_through_json(n in 3usize..8, t in 1usize..3, seed in any::<u64>()) {
        let f = family(n, t, seed);
        prop_assert!(f.is_t_intersecting(t));
        let (back, bt) = Family::from_json(&f.to_json(Some(t))).unwrap();
        prop_assert_eq!(bt, Some(t));
        prop_assert!(back.same_set(&f));
    }

    #[test]
    fn simplify_reaches_a_fixpoint_below_the_input(n in 3usize..8, t in 1usize..3, seed in any::<u64>()) {
        let f = family(n, t, seed);
        let s = simplify(&f, t).unwrap();
        prop_assert!(s.is_t_intersecting(t));
        prop_assert_eq!(check_simplified(&s, t), None);
        prop_assert!(f.iter().all(|m| s.iter().any(|x| x.is_subset(m))));
        prop_assert!(simplify(&s, t).unwrap().same_set(&s));
    }

    #[test]
    fn peeled_layers_are_uniform_and_bounded(n in 3usize..8, t in 1usize..3, seed in any::<u64>()) {
        let f = family(n, t, seed);
        let q = (t + 3).min(n);
        let p = peel(&f, t, q).unwrap();
        for k in 0..=p.top() {
            prop_assert!(p.w(k).iter().all(|m| m.len() == t + k));
            prop_assert!(p.t_layer(k).iter().all(|m| m.len() <= t + k));
            prop_assert!(p.t_layer(k).is_t_intersecting(t));
        }
    }

    #[test]
    fn spreadness_is_monotone_in_r(n in 3usize..7, t in 1usize..3, seed in any::<u64>(), num in 2i64..12) {
        let f = family(n, t, seed);
        let r = rat(num, 2);
        if is_r_spread(&f, &r, DEFAULT_BUDGET).unwrap().passed() {
            prop_assert!(is_r_spread(&f, &rat(num - 1, 2).max(rat(1, 1)), DEFAULT_BUDGET).unwrap().passed());
        }
    }

    #[test]
    fn containment_sampling_ignores_the_strategy(n in 3usize..7, t in 1usize..3, seed in any::<u64>(), trials in 1u64..3000) {
        let f = family(n, t, seed);
        let spec = RandomSubsetSpec::new(rat(1, 2), seed).unwrap();
        prop_assert_eq!(
            sample_containment(&f, &spec, trials, Exec::Sequential),
            sample_containment(&f, &spec, trials, Exec::Parallel)
        );
    }

    #[test]
    fn tuple_strategies_agree(n in 4usize..8, t in 1usize..3, seed in any::<u64>(), r in 2usize..5) {
        let f = family(n, t, seed);
        let p = peel(&f, t, (t + 3).min(n)).unwrap();
        for k in 0..=p.top() {
            let w = p.w(k);
            if w.len() < r {
                continue;
            }
            let a = good_tuple_search(w, t, k, r, TupleSearch::Exhaustive, Exec::Sequential).unwrap();
            let b = good_tuple_search(w, t, k, r, TupleSearch::BranchAndBound, Exec::Parallel).unwrap();
            prop_assert_eq!(&a.indices, &b.indices);
            prop_assert_eq!(a.min_intersection, b.min_intersection);
            prop_assert!(a.min_intersection as i64 >= a.floor);
        }
    }

    #[test]
    fn translates_of_ak_are_recognised(n in 3usize..7, t in 1usize..3, k in 0usize..3, a in any::<u64>(), b in any::<u64>()) {
        prop_assume!(t + 2 * k <= n);
        let (sigma, tau) = (perm(n, a), perm(n, b));
        let members: Vec<Permutation> = all_permutations(n)
            .into_iter()
            .filter(|p| in_translate(p, &sigma, &tau, t, k))
            .collect();
        prop_assert_eq!(members.len() as u64, u64::try_from(ak_size_exact(n, t, k).unwrap()).unwrap());
        let f = Family::from_permutations(n, &members).unwrap();
        prop_assert!(f.is_t_intersecting(t));
        let found = detect_ak_structure(&f, t, DEFAULT_NODE_BUDGET).unwrap();
        prop_assert!(found.is_some());
        let m = found.unwrap();
        prop_assert!(members.iter().all(|p| in_translate(p, &m.sigma, &m.tau, t, m.k)));
    }
}

#[test]
fn enumerated_ak_matches_its_count() {
    for n in 1..=6 {
        for t in 1..=n {
            for k in 0..=(n - t) / 2 {
                let a = build_ak(n, t, k).unwrap();
                let members = a.enumerate(8).unwrap();
                assert_eq!(
                    members.len() as u64,
                    u64::try_from(ak_size_exact(n, t, k).unwrap()).unwrap()
                );
                assert!(members.iter().all(|p| a.contains(p)));
            }
        }
    }
}

#[test]
fn derangements_satisfy_the_recurrence() {
    for m in 2..40usize {
        let lhs = derangement_count(m);
        let rhs = (derangement_count(m - 1) + derangement_count(m - 2)) * (m - 1);
        assert_eq!(lhs, rhs, "m = {m}");
    }
}

#[test]
fn clique_search_agrees_with_the_unpruned_oracle() {
    for n in 1..=4 {
        for t in 1..=n {
            let res = max_t_intersecting(n, t, DEFAULT_NODE_BUDGET, Exec::default()).unwrap();
            let graph = AgreementGraph::full(n, t).unwrap();
            assert!(res.optimal);
            assert_eq!(res.max_size, max_clique_unpruned(&graph).into(), "n={n} t={t}");
            assert!(res.max_size >= max_ak_size(n, t).unwrap().1);
            assert!(res.witness.is_t_intersecting(t));
            assert_eq!(res.witness.len(), max_clique_unpruned(&graph));
        }
    }
}
