//! Randomized invariants of the metric, tree, mixture and oracle layers.

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use startreemix::metric::{pair_count, quadruples, DissimilarityMap};
use startreemix::mixture::{
    decide_two_star_mixture, enumerate_fiber_cases, offsets_from_stars, verify_decomposition, DecideOptions,
};
use startreemix::oracle::{cut_obstruction, k_star_feasible, secant_membership, OracleConfig, SignMode};
use startreemix::rational::{rat, Rational};
use startreemix::tree::{
    classify_topology, cut_metric, quartet_edge_weights, reconstruct_tree, DoubleStar, QuartetSplit, Regime,
    StarTree, TopologyClass,
};

fn rational() -> impl Strategy<Value = Rational> {
    (0i64..=24, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

fn positive_rational() -> impl Strategy<Value = Rational> {
    (1i64..=24, 1i64..=4).prop_map(|(p, q)| rat(p, q))
}

fn map(n: usize) -> impl Strategy<Value = DissimilarityMap> {
    prop::collection::vec(rational(), pair_count(n)).prop_map(move |e| DissimilarityMap::new(n, e).unwrap())
}

fn maps3(n: usize) -> impl Strategy<Value = (DissimilarityMap, DissimilarityMap, DissimilarityMap)> {
    (map(n), map(n), map(n))
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn mix_is_a_semilattice((a, b, c) in maps3(5)) {
        let ab = a.tropical_mix(&b).unwrap();
        prop_assert_eq!(&ab, &b.tropical_mix(&a).unwrap());
        prop_assert_eq!(ab.tropical_mix(&c).unwrap(), a.tropical_mix(&b.tropical_mix(&c).unwrap()).unwrap());
        prop_assert_eq!(a.tropical_mix(&a).unwrap(), a.clone());
        prop_assert!(ab.entries().iter().zip(a.entries()).all(|(m, x)| m >= x));
    }

    #[test]
    fn mix_commutes_with_scaling((a, b, _) in maps3(4), lambda in positive_rational()) {
        let lhs = a.tropical_mix(&b).unwrap().scale(&lambda).unwrap();
        let rhs = a.scale(&lambda).unwrap().tropical_mix(&b.scale(&lambda).unwrap()).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn predicates_are_scale_invariant_and_nested(d in map(5), lambda in positive_rational()) {
        let s = d.scale(&lambda).unwrap();
        prop_assert_eq!(d.is_metric(), s.is_metric());
        prop_assert_eq!(d.is_tree_metric(), s.is_tree_metric());
        prop_assert_eq!(d.is_star_metric(), s.is_star_metric());
        if d.is_star_metric() { prop_assert!(d.is_tree_metric()); }
        if d.is_tree_metric() { prop_assert!(d.is_metric()); }
    }

    #[test]
    fn mixtures_of_metrics_are_metrics(seed in any::<u64>()) {
        let mut r = rng(seed);
        let a = common::random_tree(&mut r, 6).metric();
        let b = common::random_tree(&mut r, 6).metric();
        prop_assert!(a.tropical_mix(&b).unwrap().is_metric());
    }

    #[test]
    fn tree_metrics_restrict_to_tree_metrics(seed in any::<u64>()) {
        let d = common::random_tree(&mut rng(seed), 7).metric();
        prop_assert!(d.is_tree_metric());
        for q in quadruples(7) {
            prop_assert!(d.restrict(&q).unwrap().is_tree_metric());
        }
    }

    #[test]
    fn reconstruction_round_trips(seed in any::<u64>(), n in 3usize..=8) {
        let t = common::random_tree(&mut rng(seed), n);
        prop_assert_eq!(reconstruct_tree(&t.metric()).unwrap(), t.canonical());
    }

    #[test]
    fn tree_outputs_scale_linearly(seed in any::<u64>(), lambda in positive_rational()) {
        let t = common::random_tree(&mut rng(seed), 6).canonical();
        let scaled = t.metric().scale(&lambda).unwrap();
        let r = reconstruct_tree(&scaled).unwrap();
        let expected: Vec<Rational> = t.edges().iter().map(|(_, _, w)| w * &lambda).collect();
        let got: Vec<Rational> = r.edges().iter().map(|(_, _, w)| w.clone()).collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn stars_and_double_stars_classify_to_themselves(seed in any::<u64>(), n in 4usize..=7) {
        let mut r = rng(seed);
        let s = common::random_star(&mut r, n);
        prop_assert_eq!(classify_topology(&s.metric()), TopologyClass::Star { star: s, degenerate: false });
        let ds = common::random_i2_double_star(&mut r, n);
        prop_assert_eq!(
            classify_topology(&ds.metric()),
            TopologyClass::DoubleStar { tree: ds, degenerate: false }
        );
    }

    #[test]
    fn quartet_edge_weights_invert_the_metric(seed in any::<u64>()) {
        let q = common::random_quartet(&mut rng(seed));
        let split = match q.side_i()[1] {
            1 => QuartetSplit::S12_34,
            2 => QuartetSplit::S13_24,
            _ => QuartetSplit::S14_23,
        };
        let (g, e) = quartet_edge_weights(&q.metric(), split).unwrap();
        prop_assert_eq!(&g, q.g());
        prop_assert_eq!(e.to_vec(), q.pendant().to_vec());
    }

    #[test]
    fn bipartition_cut_metrics_are_tree_metrics(mask in 1u32..(1 << 6) - 1) {
        let blocks: Vec<Vec<usize>> = vec![
            (0..6).filter(|t| mask >> t & 1 == 1).collect(),
            (0..6).filter(|t| mask >> t & 1 == 0).collect(),
        ];
        prop_assert!(cut_metric(6, &blocks).unwrap().is_tree_metric());
    }

    #[test]
    fn offsets_identity_holds(a in prop::collection::vec(positive_rational(), 4),
                              b in prop::collection::vec(positive_rational(), 4)) {
        let a = StarTree::new(a, Regime::Strict).unwrap();
        let b = StarTree::new(b, Regime::Strict).unwrap();
        prop_assert!(offsets_from_stars(&a, &b).unwrap().identity_holds());
    }

    #[test]
    fn decision_is_scale_invariant(seed in any::<u64>(), lambda in positive_rational()) {
        let q = common::random_quartet(&mut rng(seed)).metric();
        let opts = DecideOptions::default();
        let a = decide_two_star_mixture(&q, &opts).unwrap();
        let b = decide_two_star_mixture(&q.scale(&lambda).unwrap(), &opts).unwrap();
        prop_assert_eq!((a.verdict, a.basis, a.families), (b.verdict, b.basis, b.families));
    }

    #[test]
    fn swapped_witnesses_verify(seed in any::<u64>(), n in 4usize..=6) {
        let t = common::random_i2_double_star(&mut rng(seed), n).metric();
        for fam in enumerate_fiber_cases(&t, Regime::Strict).unwrap() {
            let (u, w) = fam.center().unwrap();
            let s = fam.sample(&u, &w).unwrap();
            prop_assert!(verify_decomposition(&t, &s.dbar, &s.d, Regime::Strict).unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sign_modes_are_monotone(d in map(4)) {
        let cfg = OracleConfig::default();
        let feasible: Vec<bool> = [SignMode::Positive, SignMode::Nonnegative, SignMode::Signed]
            .into_iter()
            .map(|s| k_star_feasible(&d, 2, s, &cfg).unwrap().is_feasible())
            .collect();
        prop_assert!(!feasible[0] || feasible[1]);
        prop_assert!(!feasible[1] || feasible[2]);
    }

    #[test]
    fn obstruction_implies_infeasible(d in map(4)) {
        if cut_obstruction(&d) {
            for k in 1..=3 {
                prop_assert!(!k_star_feasible(&d, k, SignMode::Positive, &OracleConfig::default()).unwrap().is_feasible());
                prop_assert!(!k_star_feasible(&d, k, SignMode::Nonnegative, &OracleConfig::default()).unwrap().is_feasible());
            }
        }
    }

    #[test]
    fn secant_matches_two_star_feasibility(d in map(5)) {
        let cfg = OracleConfig::default();
        prop_assert_eq!(
            secant_membership(5, d.entries(), 1, true, &cfg).unwrap(),
            k_star_feasible(&d, 2, SignMode::Positive, &cfg).unwrap()
        );
    }
}

#[test]
fn oracle_is_complete_on_random_two_star_mixtures() {
    let mut r = rng(11);
    for trial in 0..1000 {
        let n = 4 + trial % 2;
        let a = common::random_star(&mut r, n);
        let b = common::random_star(&mut r, n);
        let d = a.metric().tropical_mix(&b.metric()).unwrap();
        let f = k_star_feasible(&d, 2, SignMode::Positive, &OracleConfig::default()).unwrap();
        assert!(f.is_feasible(), "trial {trial}: {d}");
    }
}

#[test]
fn decision_matches_oracle_in_both_regimes_on_boundary_grid() {
    let values: Vec<Rational> = (0..=6).map(|k| rat(k, 2)).collect();
    for g in [rat(1, 2), rat(1, 1)] {
        for (idx, e) in weight_vectors(&values).into_iter().enumerate() {
            if idx % 3 != 0 {
                continue;
            }
            let t = DoubleStar::new(&[0, 1], g.clone(), e, Regime::Closed).unwrap().metric();
            for (regime, sign) in [(Regime::Strict, SignMode::Positive), (Regime::Closed, SignMode::Nonnegative)] {
                let opts = DecideOptions { regime, ..DecideOptions::default() };
                let dec = decide_two_star_mixture(&t, &opts).unwrap();
                let f = k_star_feasible(&t, 2, sign, &OracleConfig::default()).unwrap();
                assert_eq!(dec.verdict == startreemix::mixture::Verdict::Yes, f.is_feasible(), "{t} {regime:?}");
                if let Some((a, b)) = &dec.witness {
                    assert!(verify_decomposition(&t, a, b, regime).unwrap());
                }
            }
        }
    }
}

fn weight_vectors(values: &[Rational]) -> Vec<Vec<Rational>> {
    let mut out = vec![Vec::new()];
    for _ in 0..4 {
        out = out
            .into_iter()
            .flat_map(|p: Vec<Rational>| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(v.clone());
                    q
                })
            })
            .collect();
    }
    out
}

fn relabel_13_24(s: &StarTree) -> Vec<Rational> {
    let w = s.weights();
    vec![w[2].clone(), w[3].clone(), w[0].clone(), w[1].clone()]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // A cherry family on the relabeled quartet is a far-side family on the
    // original with the offsets exchanged.
    #[test]
    fn cherry_and_far_side_families_correspond(seed in any::<u64>()) {
        use startreemix::mixture::CaseId::*;
        let mut r = rng(seed);
        let g = common::weight(&mut r);
        let e: Vec<Rational> = (0..4).map(|_| &g + common::weight(&mut r)).collect();
        let t = DoubleStar::new(&[0, 1], g.clone(), e.clone(), Regime::Strict).unwrap();
        let mirrored = vec![e[2].clone(), e[3].clone(), e[0].clone(), e[1].clone()];
        let t_mirror = DoubleStar::new(&[0, 1], g, mirrored, Regime::Strict).unwrap();
        for (cherry, far) in [(C11, C22), (C12, C21), (C13, C23), (C14, C24)] {
            let a = startreemix::mixture::CaseFamily::instantiate(cherry, &t_mirror, Regime::Strict).unwrap();
            let b = startreemix::mixture::CaseFamily::instantiate(far, &t, Regime::Strict).unwrap();
            prop_assert_eq!(a.is_nonempty(), b.is_nonempty(), "{} vs {}", cherry, far);
            for (u, w) in a.grid() {
                prop_assert!(b.contains(&w, &u), "{} ({}, {}) outside {}", cherry, u, w, far);
                let x = a.sample(&u, &w).unwrap();
                let y = b.sample(&w, &u).unwrap();
                let mut lhs = [relabel_13_24(&x.d), relabel_13_24(&x.dbar)];
                let mut rhs = [y.d.weights().to_vec(), y.dbar.weights().to_vec()];
                lhs.sort();
                rhs.sort();
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
