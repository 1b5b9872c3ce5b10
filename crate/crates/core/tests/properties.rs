mod common;

use proptest::prelude::*;
use torus_oblivious::eval::{edge_loads, k_matching, worst_case_load};
use torus_oblivious::schemes::{build_ecmp, build_gllb, build_llb, build_ring_lb, build_vlb};
use torus_oblivious::traffic::{classify, gen_random_sparse, transform_traffic};
use torus_oblivious::{Automorphism, Node, Policy, TorusSpec};

fn spec_strategy() -> impl Strategy<Value = TorusSpec> {
    (
        3usize..=8,
        3usize..=8,
        prop::sample::select(vec![0.5, 1.0, 2.0]),
        prop::sample::select(vec![0.5, 1.0, 2.0]),
    )
        .prop_map(|(r, c, c1, c2)| TorusSpec::new(r, c, c1, c2).unwrap())
}

fn node_in(spec: TorusSpec) -> impl Strategy<Value = Node> {
    (0..spec.cols, 0..spec.rows).prop_map(|(x, y)| Node::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn schemes_conserve_flow(spec in spec_strategy(), r1 in 1usize..=4, r2 in 1usize..=4) {
        prop_assert!(build_ecmp(&spec).unwrap().validate().is_empty());
        prop_assert!(build_vlb(&spec).unwrap().validate().is_empty());
        prop_assert!(build_ring_lb(&spec).unwrap().validate().is_empty());
        let (r1, r2) = (r1.min(spec.rows / 2), r2.min(spec.cols / 2));
        let g = build_gllb(&spec, r1, r2).unwrap();
        prop_assert!(g.validate().is_empty());
        prop_assert!(g.check_reflection_invariance());
        if spec.is_square_symmetric() && 2 * r1 < spec.rows {
            prop_assert!(build_llb(&spec, r1).unwrap().validate().is_empty());
        }
    }

    #[test]
    fn symmetrize_never_raises_worst_case(seed in any::<u64>()) {
        let spec = TorusSpec::square(4).unwrap();
        let f = common::random_full_policy(&spec, seed);
        let sym = f.symmetrize(&spec.automorphism_group()).unwrap();
        prop_assert!(sym.validate().is_empty());
        let before = worst_case_load(&f, 2).unwrap().value;
        let after = worst_case_load(&sym, 2).unwrap().value;
        prop_assert!(after <= before + 1e-9, "{} -> {}", before, after);
    }

    #[test]
    fn worst_case_is_monotone_and_subadditive(seed in any::<u64>(), n in 4usize..=6) {
        let spec = TorusSpec::square(n).unwrap();
        let g = common::random_origin_policy(&spec, seed);
        let mut prev = 0.0;
        let one = worst_case_load(&g, 1).unwrap().value;
        for k in 1..=6 {
            let wc = worst_case_load(&g, k).unwrap().value;
            prop_assert!(wc + 1e-9 >= prev);
            prop_assert!(wc <= k as f64 * one + 1e-9);
            prev = wc;
        }
    }

    #[test]
    fn worst_case_dominates_sampled_traffic(seed in any::<u64>(), k in 1usize..=8) {
        let spec = TorusSpec::square(6).unwrap();
        let g = common::random_origin_policy(&spec, seed);
        let wc = worst_case_load(&g, k).unwrap().value;
        for trial in 0..5 {
            let d = gen_random_sparse(&spec, k, seed ^ trial).unwrap();
            prop_assert!(edge_loads(&g, &d).unwrap().max_load <= wc + 1e-9);
        }
    }

    #[test]
    fn k_matching_certificate(seed in any::<u64>(), rows in 1usize..=6, cols in 1usize..=6, k in 1usize..=6) {
        let mut rng = common::rng(seed);
        let w: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| if rand::Rng::gen_bool(&mut rng, 0.3) { 0.0 } else { rand::Rng::gen_range(&mut rng, 0.0..1.0) }).collect())
            .collect();
        let m = k_matching(&w, k);
        prop_assert!(m.pairs.len() <= k);
        let total: f64 = m.pairs.iter().map(|&(i, j)| w[i][j]).sum();
        prop_assert!((total - m.value).abs() < 1e-9);
        prop_assert!(m.dual_defect(&w, k) < 1e-9);
    }

    #[test]
    fn distance_axioms(spec in spec_strategy(), seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut pick = || Node::new(rand::Rng::gen_range(&mut rng, 0..spec.cols), rand::Rng::gen_range(&mut rng, 0..spec.rows));
        let (u, v, w) = (pick(), pick(), pick());
        prop_assert_eq!(spec.hop_distance(u, v), spec.hop_distance(v, u));
        prop_assert!(spec.hop_distance(u, w) <= spec.hop_distance(u, v) + spec.hop_distance(v, w));
        prop_assert_eq!(spec.hop_distance(u, v), spec.hop_distance(spec.add(u, w), spec.add(v, w)));
        prop_assert!(spec.hop_distance(u, v) <= spec.diameter());
        prop_assert_eq!(spec.hop_distance(u, v) == 0, u == v);
        for phi in spec.automorphism_group().into_iter().step_by(5) {
            let (a, b) = (spec.apply(&phi, u).unwrap(), spec.apply(&phi, v).unwrap());
            prop_assert_eq!(spec.hop_distance(a, b), spec.hop_distance(u, v));
            let wd = spec.weighted_distance(a, b, spec.cap_vertical, spec.cap_horizontal);
            prop_assert!((wd - spec.weighted_distance(u, v, spec.cap_vertical, spec.cap_horizontal)).abs() < 1e-12);
        }
    }

    #[test]
    fn random_traffic_is_sparse_and_transforms_stay_in_class(spec in spec_strategy(), seed in any::<u64>(), k in 1usize..=9) {
        let d = gen_random_sparse(&spec, k, seed).unwrap();
        let rep = classify(&d, k);
        prop_assert!(rep.is_k_sparse && rep.is_k_limited);
        prop_assert_eq!(d.len(), k);
        let shift = Automorphism::translation(Node::new(seed as usize % spec.cols, (seed >> 8) as usize % spec.rows));
        for phi in [shift, Automorphism::R0] {
            let moved = transform_traffic(&d, &phi).unwrap();
            prop_assert_eq!(classify(&moved, k), rep.clone());
        }
    }

    #[test]
    fn invariant_policies_see_transformed_traffic_equally(seed in any::<u64>(), s in node_in(TorusSpec::square(6).unwrap())) {
        let spec = TorusSpec::square(6).unwrap();
        let g = build_llb(&spec, 2).unwrap();
        let d = gen_random_sparse(&spec, 6, seed).unwrap();
        let base = edge_loads(&g, &d).unwrap().max_load;
        for phi in [Automorphism::translation(s), Automorphism::R0, Automorphism::RXY] {
            let moved = transform_traffic(&d, &phi).unwrap();
            prop_assert!((edge_loads(&g, &moved).unwrap().max_load - base).abs() < 1e-9);
        }
    }
}
