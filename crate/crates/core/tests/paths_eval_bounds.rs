mod common;

use std::collections::BTreeSet;

use torus_oblivious::bounds::{
    best_llb_radius, bisection_bandwidth, bisection_by_max_flow, cut_lower_bound, general_torus_bounds, llb_load_upper,
    normalized_size, oblivious_lower_bound, vlb_dense_optimum, vlb_hotspot_lower_bound, Regime,
};
use torus_oblivious::eval::{edge_loads, k_matching_max, run_trials, worst_case_load, TrialSummary};
use torus_oblivious::paths::{find_disjoint_stem_paths, max_flow, min_cut_between_stems, stem, EdgePath};
use torus_oblivious::schemes::{build_ecmp, build_llb, build_vlb};
use torus_oblivious::traffic::{classify, gen_random_sparse, gen_split_diamond};
use torus_oblivious::{DirectedEdge, Node, Policy, TorusSpec};

fn n(x: usize, y: usize) -> Node {
    Node::new(x, y)
}

fn assert_disjoint_with_two_per_endpoint(spec: &TorusSpec, paths: &[EdgePath], src: Node, dst: Node, r: usize) {
    let a = stem(spec, src, r, r).unwrap();
    let b = stem(spec, dst, r, r).unwrap();
    let mut used = BTreeSet::new();
    for p in paths {
        assert!(p.is_contiguous(spec));
        assert!(a.contains(p.start()));
        assert!(b.contains(p.end(spec)));
        for e in &p.edges {
            assert!(used.insert(*e), "edge {e} used twice");
        }
    }
    for u in &a.members {
        assert_eq!(paths.iter().filter(|p| p.start() == *u).count(), 2);
    }
    for v in &b.members {
        assert_eq!(paths.iter().filter(|p| p.end(spec) == *v).count(), 2);
    }
}

#[test]
fn stem_sizes() {
    assert_eq!(
        stem(&TorusSpec::square(7).unwrap(), Node::ORIGIN, 2, 2).unwrap().len(),
        8
    );
    assert_eq!(
        stem(&TorusSpec::unit(6, 10).unwrap(), Node::ORIGIN, 1, 2)
            .unwrap()
            .len(),
        6
    );
    assert!(stem(&TorusSpec::square(7).unwrap(), Node::ORIGIN, 0, 0)
        .unwrap()
        .is_empty());
}

#[test]
fn disjoint_paths_examples() {
    let s7 = TorusSpec::square(7).unwrap();
    let p = find_disjoint_stem_paths(&s7, Node::ORIGIN, n(3, 3), 2, 2).unwrap();
    assert_eq!(p.len(), 16);
    assert_disjoint_with_two_per_endpoint(&s7, &p, Node::ORIGIN, n(3, 3), 2);

    let s8 = TorusSpec::square(8).unwrap();
    let p = find_disjoint_stem_paths(&s8, Node::ORIGIN, n(4, 4), 3, 3).unwrap();
    assert_eq!(p.len(), 24);
}

#[test]
fn disjoint_paths_exhaustive_on_8x8() {
    let spec = TorusSpec::square(8).unwrap();
    let mut checked = 0;
    for r in 1..=3 {
        let a = stem(&spec, Node::ORIGIN, r, r).unwrap();
        for t in spec.nodes() {
            let (mx, my) = (t.x.min(8 - t.x), t.y.min(8 - t.y));
            if mx <= r && my <= r {
                continue;
            }
            let b = stem(&spec, t, r, r).unwrap();
            if torus_oblivious::paths::crosses_overlap(&a, &b) {
                continue;
            }
            let p = find_disjoint_stem_paths(&spec, Node::ORIGIN, t, r, r).unwrap();
            assert_eq!(p.len(), 8 * r);
            assert_disjoint_with_two_per_endpoint(&spec, &p, Node::ORIGIN, t, r);
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn stem_cuts() {
    let s8 = TorusSpec::square(8).unwrap();
    assert_eq!(min_cut_between_stems(&s8, Node::ORIGIN, n(4, 4), 2, 2).unwrap(), 20.0);
    assert_eq!(min_cut_between_stems(&s8, Node::ORIGIN, n(4, 4), 3, 3).unwrap(), 28.0);
    // the rectangle's 2N-link bisection caps the cut
    let rect = TorusSpec::unit(4, 10).unwrap();
    assert_eq!(min_cut_between_stems(&rect, Node::ORIGIN, n(5, 2), 2, 2).unwrap(), 8.0);
}

#[test]
fn max_flow_basics() {
    let spec = TorusSpec::square(6).unwrap();
    let unit = |_: DirectedEdge| 1.0;
    let (v, _) = max_flow(
        &spec,
        &BTreeSet::new(),
        &[Node::ORIGIN].into(),
        &[n(1, 0)].into(),
        &unit,
    )
    .unwrap();
    assert!(v >= 1.0);
    let all: BTreeSet<DirectedEdge> = spec.edges().collect();
    let (v, _) = max_flow(&spec, &all, &[Node::ORIGIN].into(), &[n(1, 0)].into(), &unit).unwrap();
    assert_eq!(v, 0.0);

    let s8 = TorusSpec::square(8).unwrap();
    let a: BTreeSet<Node> = stem(&s8, Node::ORIGIN, 2, 2).unwrap().members.into_iter().collect();
    let b: BTreeSet<Node> = stem(&s8, n(4, 4), 2, 2).unwrap().members.into_iter().collect();
    let (v, cut) = max_flow(&s8, &BTreeSet::new(), &a, &b, &unit).unwrap();
    assert_eq!(v, min_cut_between_stems(&s8, Node::ORIGIN, n(4, 4), 2, 2).unwrap());
    assert_eq!(cut.len() as f64, v);
}

#[test]
fn edge_load_examples() {
    let spec = TorusSpec::square(10).unwrap();
    let ecmp = build_ecmp(&spec).unwrap();
    let sd = gen_split_diamond(&spec, 3).unwrap();
    assert!((edge_loads(&ecmp, &sd).unwrap().avg_hops - 10.0).abs() < 1e-12);
    let r = edge_loads(&ecmp, &torus_oblivious::TrafficMatrix::new(spec)).unwrap();
    assert!(r.per_edge.iter().all(|&v| v == 0.0));
}

#[test]
fn llb_worst_case_witness() {
    let spec = TorusSpec::square(10).unwrap();
    let g = build_llb(&spec, 3).unwrap();
    let wc = worst_case_load(&g, 18).unwrap();
    assert!((wc.value - 1.5).abs() < 1e-9);
    assert!(wc.witness.len() <= 18);
    assert!(classify(&wc.witness, 18).is_k_sparse);
    let realized = edge_loads(&g, &wc.witness).unwrap();
    assert!((realized.load(wc.edge) - wc.value).abs() < 1e-9);
}

#[test]
fn single_demand_worst_case() {
    let spec = TorusSpec::square(6).unwrap();
    let g = build_vlb(&spec).unwrap();
    let mut best = 0.0f64;
    for s in spec.nodes() {
        for t in spec.nodes().filter(|&t| t != s) {
            g.visit_pair(s, t, &mut |_, f| best = best.max(f));
        }
    }
    assert!((worst_case_load(&g, 1).unwrap().value - best).abs() < 1e-12);
}

#[test]
fn matching_on_4x4_random_policies() {
    let spec = TorusSpec::square(4).unwrap();
    for seed in 0..5 {
        let g = common::random_origin_policy(&spec, seed);
        let fast = worst_case_load(&g, 2).unwrap().value;
        assert!((fast - common::exhaustive_worst_case(&g, 2)).abs() < 1e-9);
    }
}

#[test]
fn matching_small_cases() {
    let w = vec![vec![0.3; 6]; 6];
    assert!((k_matching_max(&w, 4).0 - 1.2).abs() < 1e-12);
    let w = vec![vec![0.1, 0.7], vec![0.4, 0.2]];
    assert!((k_matching_max(&w, 1).0 - 0.7).abs() < 1e-12);
}

#[test]
fn trials_are_seeded_and_thread_independent() {
    let spec = TorusSpec::square(8).unwrap();
    let g = build_llb(&spec, 2).unwrap();
    let run = || run_trials(&g, |seed| gen_random_sparse(&spec, 8, seed), 64, 42).unwrap();
    let a = run();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let b = one.install(run);
    assert_eq!(a, b);
    let csv = |s: &TrialSummary| {
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        buf
    };
    assert_eq!(csv(&a), csv(&b));
}

#[test]
fn random_trial_means() {
    let spec = TorusSpec::square(10).unwrap();
    let gen = |seed| gen_random_sparse(&spec, 18, seed);
    let vlb = run_trials(&build_vlb(&spec).unwrap(), gen, 1000, 1).unwrap();
    let llb = run_trials(&build_llb(&spec, 3).unwrap(), gen, 1000, 1).unwrap();
    let ecmp = run_trials(&build_ecmp(&spec).unwrap(), gen, 1000, 1).unwrap();
    assert!((vlb.max_load.mean - 0.978).abs() < 0.05);
    assert!((llb.max_load.mean - 0.958).abs() < 0.05);
    assert!((ecmp.avg_hops.mean - 4.889).abs() < 0.2);
}

#[test]
fn closed_form_bounds() {
    assert!((cut_lower_bound(16) - 1.0).abs() < 1e-12);
    assert!((cut_lower_bound(18) - 1.0607).abs() < 1e-4);
    for k in 1..200 {
        assert!(cut_lower_bound(k) <= oblivious_lower_bound(k) + 1e-12);
    }
    assert!((oblivious_lower_bound(18) - 1.5).abs() < 1e-12);
    assert!((oblivious_lower_bound(8) - 1.0).abs() < 1e-12);
    assert!((oblivious_lower_bound(10) - 1.1).abs() < 1e-12);
    assert!((vlb_hotspot_lower_bound(10, 18) - 1.7394).abs() < 1e-4);
    assert_eq!(vlb_hotspot_lower_bound(10, 100), 0.0);
    assert!((llb_load_upper(3, 18) - 1.5).abs() < 1e-12);
    assert!((llb_load_upper(1, 2) - 0.5).abs() < 1e-12);
    assert_eq!(best_llb_radius(18), 3);
    assert_eq!(vlb_dense_optimum(8), 2.0);
    assert_eq!(vlb_dense_optimum(10), 2.5);
}

#[test]
fn vlb_hotspot_bound_is_respected() {
    let spec = TorusSpec::square(10).unwrap();
    let d = torus_oblivious::traffic::gen_hotspot(&spec, 18, Node::ORIGIN).unwrap();
    let load = edge_loads(&build_vlb(&spec).unwrap(), &d).unwrap().max_load;
    assert!(load >= vlb_hotspot_lower_bound(10, 18));
}

#[test]
fn general_bounds() {
    let sq = TorusSpec::square(10).unwrap();
    assert_eq!(normalized_size(&sq), 10.0);
    let b = general_torus_bounds(&sq, 18);
    assert_eq!(b.regime, Regime::Sparse);
    assert!((b.general_lb - oblivious_lower_bound(18)).abs() < 1e-12);
    assert!((b.cut_lb - cut_lower_bound(18)).abs() < 1e-12);
    // dense optimum equals k / 2L at k = N^2 / 2
    let dense = general_torus_bounds(&sq, 50);
    assert!((dense.general_lb - vlb_dense_optimum(10)).abs() < 1e-12);

    let rect = TorusSpec::unit(4, 10).unwrap();
    assert_eq!(normalized_size(&rect), 4.0);
    let at = general_torus_bounds(&rect, 8);
    assert_eq!(at.regime, Regime::Sparse);
    assert!((at.general_lb - 1.0).abs() < 1e-12);
    // the mid-regime expression k / 2L meets the sparse one at k = L^2 / 2
    let mid = general_torus_bounds(&rect, 9);
    assert_eq!(mid.regime, Regime::Mid);
    assert!((mid.general_lb - 9.0 / 8.0).abs() < 1e-12);
    for k in [20, 25, 40] {
        let b = general_torus_bounds(&rect, k);
        assert!((b.general_lb - 2.5).abs() < 1e-12, "k={k}: {}", b.general_lb);
    }
}

#[test]
fn bisection_from_max_flow() {
    for spec in [
        TorusSpec::square(6).unwrap(),
        TorusSpec::unit(4, 10).unwrap(),
        TorusSpec::new(6, 8, 2.0, 1.0).unwrap(),
    ] {
        let flow = bisection_by_max_flow(&spec).unwrap();
        assert!(
            (flow - bisection_bandwidth(&spec)).abs() < 1e-9,
            "{}x{}",
            spec.rows,
            spec.cols
        );
    }
    assert!(bisection_by_max_flow(&TorusSpec::unit(5, 6).unwrap()).is_err());
}
