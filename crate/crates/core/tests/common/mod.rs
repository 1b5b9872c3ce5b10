#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use torus_oblivious::schemes::{build_ecmp, build_gllb, build_llb, build_ring_lb, build_vlb, llb_radius};
use torus_oblivious::{Direction, FullPolicy, Node, OriginPolicy, Policy, TorusSpec};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense edge vector of a dimension-order walk from `s` to `t`: the
/// horizontal leg first when `x_first`, going the positive way round each
/// ring when the matching flag is set.
pub fn dimension_order_path(spec: &TorusSpec, s: Node, t: Node, x_first: bool, x_pos: bool, y_pos: bool) -> Vec<f64> {
    let mut flows = vec![0.0; spec.num_edges()];
    let dx = (t.x + spec.cols - s.x) % spec.cols;
    let dy = (t.y + spec.rows - s.y) % spec.rows;
    let hor = if x_pos {
        (Direction::PosHor, dx)
    } else {
        (Direction::NegHor, (spec.cols - dx) % spec.cols)
    };
    let ver = if y_pos {
        (Direction::PosVert, dy)
    } else {
        (Direction::NegVert, (spec.rows - dy) % spec.rows)
    };
    let legs = if x_first { [hor, ver] } else { [ver, hor] };
    let mut u = s;
    for (dir, hops) in legs {
        for _ in 0..hops {
            let e = torus_oblivious::DirectedEdge::new(u, dir);
            flows[spec.edge_index(e)] += 1.0;
            u = spec.step(u, dir);
        }
    }
    assert_eq!(u, t);
    flows
}

/// A random convex mix of up to three dimension-order walks.
pub fn random_pair_flows(spec: &TorusSpec, s: Node, t: Node, rng: &mut impl Rng) -> Vec<f64> {
    let parts = rng.gen_range(1..=3);
    let weights: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.1..1.0)).collect();
    let total: f64 = weights.iter().sum();
    let mut flows = vec![0.0; spec.num_edges()];
    for w in weights {
        let p = dimension_order_path(spec, s, t, rng.gen(), rng.gen(), rng.gen());
        for (f, v) in flows.iter_mut().zip(p) {
            *f += w / total * v;
        }
    }
    flows
}

pub fn random_full_policy(spec: &TorusSpec, seed: u64) -> FullPolicy {
    let mut r = rng(seed);
    let mut p = FullPolicy::new(*spec);
    for s in spec.nodes() {
        for t in spec.nodes() {
            if s != t {
                p.set_pair_dense(s, t, &random_pair_flows(spec, s, t, &mut r));
            }
        }
    }
    p
}

pub fn random_origin_policy(spec: &TorusSpec, seed: u64) -> OriginPolicy {
    let mut r = rng(seed);
    let mut g = OriginPolicy::new(*spec);
    for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
        g.set_destination_dense(t, &random_pair_flows(spec, Node::ORIGIN, t, &mut r));
    }
    g
}

/// Worst-case load over k-limited traffic by direct enumeration of every
/// set of at most `k` unit demands with distinct sources and distinct sinks.
pub fn exhaustive_worst_case(p: &dyn Policy, k: usize) -> f64 {
    let spec = *p.spec();
    let mut pairs = Vec::new();
    for s in spec.nodes() {
        for t in spec.nodes() {
            if s != t {
                let mut load = vec![0.0; spec.num_edges()];
                p.visit_pair(s, t, &mut |e, f| load[spec.edge_index(e)] += f / spec.capacity(e.dir));
                pairs.push((s, t, load));
            }
        }
    }
    let mut best = 0.0f64;
    let mut chosen: Vec<usize> = Vec::new();
    let mut acc = vec![0.0; spec.num_edges()];
    fn rec(
        pairs: &[(Node, Node, Vec<f64>)],
        start: usize,
        k: usize,
        chosen: &mut Vec<usize>,
        acc: &mut Vec<f64>,
        best: &mut f64,
    ) {
        *best = best.max(acc.iter().copied().fold(0.0, f64::max));
        if chosen.len() == k {
            return;
        }
        for i in start..pairs.len() {
            let (s, t, ref load) = pairs[i];
            if chosen.iter().any(|&j| pairs[j].0 == s || pairs[j].1 == t) {
                continue;
            }
            chosen.push(i);
            for (a, l) in acc.iter_mut().zip(load) {
                *a += l;
            }
            rec(pairs, i + 1, k, chosen, acc, best);
            for (a, l) in acc.iter_mut().zip(load) {
                *a -= l;
            }
            chosen.pop();
        }
    }
    rec(&pairs, 0, k, &mut chosen, &mut acc, &mut best);
    best
}

/// Every built-in scheme on a square torus, tuned for sparsity `k`.
pub fn square_schemes(spec: &TorusSpec, k: usize) -> Vec<(&'static str, OriginPolicy)> {
    let r = llb_radius(k);
    vec![
        ("ecmp", build_ecmp(spec).unwrap()),
        ("vlb", build_vlb(spec).unwrap()),
        ("llb", build_llb(spec, r).unwrap()),
        ("gllb", build_gllb(spec, r, r).unwrap()),
        ("ring", build_ring_lb(spec).unwrap()),
    ]
}

/// Number of conservation or box violations reported by `validate`.
pub fn violation_count(p: &dyn Policy) -> usize {
    p.validate().len()
}
