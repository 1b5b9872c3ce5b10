//! Constructors for the routing schemes.
//!
//! Every scheme is built once per reflection orbit of destination offsets,
//! averaged over the stabilizer of the representative, and copied to the
//! rest of the orbit. The result is invariant under the whole automorphism
//! group of the spec.

mod ecmp;
mod ring;
mod stem_lb;
mod vlb;

use rayon::prelude::*;

use crate::policy::OriginPolicy;
use crate::torus::{Automorphism, Node, TorusSpec};
use crate::Result;

pub use ecmp::{build_ecmp, shortest_path_counts};
pub use ring::{build_ring_lb, ring_orientation, RingOrientation};
pub use stem_lb::{
    build_gllb, build_gllb_detailed, build_llb, gllb_destination, GllbBuild, GllbCase, GllbCaseKind, StemPlan,
};
pub use vlb::{build_vlb, build_vlb_with, VlbIntermediates};

/// Stem radius for LLB at sparsity `k`: the smallest `r` with `2 r^2 >= k`.
pub fn llb_radius(k: usize) -> usize {
    let mut r = 1;
    while 2 * r * r < k {
        r += 1;
    }
    r
}

/// GLLB radii `r1 = ceil(sqrt(c1 k / 2 c2))`, `r2 = ceil(sqrt(c2 k / 2 c1))`,
/// clamped to `[1, rows/2]` and `[1, cols/2]`.
pub fn gllb_params(spec: &TorusSpec, k: usize) -> (usize, usize) {
    let c1 = spec.cap_vertical;
    let c2 = spec.cap_horizontal;
    let k = k as f64;
    let r1 = ((c1 * k / (2.0 * c2)).sqrt() - 1e-9).ceil().max(1.0) as usize;
    let r2 = ((c2 * k / (2.0 * c1)).sqrt() - 1e-9).ceil().max(1.0) as usize;
    (r1.min(spec.rows / 2).max(1), r2.min(spec.cols / 2).max(1))
}

/// Representative of each reflection orbit of non-zero offsets, with the
/// point-group elements mapping it onto every orbit member.
pub(crate) fn orbit_representatives(spec: &TorusSpec) -> Vec<(Node, Vec<Automorphism>)> {
    let points = spec.point_group();
    spec.nodes()
        .filter(|&t| t != Node::ORIGIN)
        .filter(|&t| points.iter().all(|p| p.apply_unchecked(spec, t) >= t))
        .map(|t| (t, points.clone()))
        .collect()
}

/// Build an invariant policy from a per-destination constructor returning
/// dense edge flows for the representative offsets.
pub(crate) fn build_invariant<F>(spec: &TorusSpec, per_destination: F) -> Result<OriginPolicy>
where
    F: Fn(Node) -> Result<Vec<f64>> + Sync,
{
    let reps = orbit_representatives(spec);
    let built: Vec<(Node, Vec<Automorphism>, Vec<f64>)> = reps
        .into_par_iter()
        .map(|(t, points)| per_destination(t).map(|flows| (t, points, flows)))
        .collect::<Result<_>>()?;
    let mut policy = OriginPolicy::new(*spec);
    for (t, points, flows) in built {
        let stabilizer: Vec<&Automorphism> = points.iter().filter(|p| p.apply_unchecked(spec, t) == t).collect();
        let w = 1.0 / stabilizer.len() as f64;
        let mut averaged = vec![0.0; spec.num_edges()];
        for p in &stabilizer {
            for (idx, &f) in flows.iter().enumerate() {
                if f != 0.0 {
                    let e = p.apply_edge_unchecked(spec, spec.edge_at(idx));
                    averaged[spec.edge_index(e)] += w * f;
                }
            }
        }
        let mut done = Vec::new();
        for q in &points {
            let image = q.apply_unchecked(spec, t);
            if done.contains(&image) {
                continue;
            }
            done.push(image);
            let mut mapped = vec![0.0; spec.num_edges()];
            for (idx, &f) in averaged.iter().enumerate() {
                if f != 0.0 {
                    let e = q.apply_edge_unchecked(spec, spec.edge_at(idx));
                    mapped[spec.edge_index(e)] = f;
                }
            }
            policy.set_destination_dense(image, &mapped);
        }
    }
    Ok(policy)
}

/// Remove opposite-edge pairs and directed cycles from a single-commodity
/// flow, leaving every node balance unchanged.
pub(crate) fn cancel_cycles(spec: &TorusSpec, flow: &mut [f64]) {
    const EPS: f64 = 1e-14;
    for e in spec.edges() {
        let rev = crate::torus::DirectedEdge::new(spec.head(e), e.dir.negate());
        let (a, b) = (spec.edge_index(e), spec.edge_index(rev));
        let m = flow[a].min(flow[b]);
        if m > 0.0 {
            flow[a] -= m;
            flow[b] -= m;
        }
    }
    while let Some(cycle) = find_cycle(spec, flow, EPS) {
        let m = cycle.iter().map(|&i| flow[i]).fold(f64::INFINITY, f64::min);
        for &i in &cycle {
            flow[i] -= m;
            if flow[i] < EPS {
                flow[i] = 0.0;
            }
        }
    }
    for v in flow.iter_mut() {
        if *v < EPS {
            *v = 0.0;
        }
    }
}

/// Edge indices of one directed cycle in the support of `flow`.
fn find_cycle(spec: &TorusSpec, flow: &[f64], eps: f64) -> Option<Vec<usize>> {
    let n = spec.num_nodes();
    // 0 = unvisited, 1 = on stack, 2 = finished
    let mut state = vec![0u8; n];
    let mut via = vec![usize::MAX; n];
    for root in 0..n {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (u, ref mut next_dir)) = stack.last_mut() {
            if *next_dir == 4 {
                state[u] = 2;
                stack.pop();
                continue;
            }
            let d = *next_dir;
            *next_dir += 1;
            let idx = u * 4 + d;
            if flow[idx] <= eps {
                continue;
            }
            let v = spec.node_index(spec.head(spec.edge_at(idx)));
            match state[v] {
                0 => {
                    state[v] = 1;
                    via[v] = idx;
                    stack.push((v, 0));
                }
                1 => {
                    let mut cycle = vec![idx];
                    let mut w = u;
                    while w != v {
                        let e = via[w];
                        cycle.push(e);
                        w = spec.node_index(spec.edge_at(e).tail);
                    }
                    return Some(cycle);
                }
                _ => {}
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_helpers() {
        assert_eq!(llb_radius(18), 3);
        assert_eq!(llb_radius(8), 2);
        assert_eq!(llb_radius(10), 3);
        let sq = TorusSpec::square(10).unwrap();
        assert_eq!(gllb_params(&sq, 18), (3, 3));
        let rect = TorusSpec::unit(4, 10).unwrap();
        assert_eq!(gllb_params(&rect, 8), (2, 2));
    }

    #[test]
    fn orbits_cover_all_offsets() {
        for spec in [TorusSpec::square(6).unwrap(), TorusSpec::unit(4, 6).unwrap()] {
            let mut covered = std::collections::BTreeSet::new();
            for (t, points) in orbit_representatives(&spec) {
                for p in points {
                    covered.insert(p.apply_unchecked(&spec, t));
                }
            }
            assert_eq!(covered.len(), spec.num_nodes() - 1);
        }
    }

    #[test]
    fn cycles_are_cancelled() {
        let spec = TorusSpec::square(4).unwrap();
        let mut flow = vec![0.0; spec.num_edges()];
        // a unit square loop plus a straight unit path
        let loop_edges = [
            (Node::new(0, 0), crate::Direction::PosHor),
            (Node::new(1, 0), crate::Direction::PosVert),
            (Node::new(1, 1), crate::Direction::NegHor),
            (Node::new(0, 1), crate::Direction::NegVert),
        ];
        for (n, d) in loop_edges {
            flow[spec.edge_index(crate::DirectedEdge::new(n, d))] += 0.5;
        }
        flow[spec.edge_index(crate::DirectedEdge::new(Node::new(2, 2), crate::Direction::PosHor))] = 1.0;
        cancel_cycles(&spec, &mut flow);
        let total: f64 = flow.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
