use crate::policy::OriginPolicy;
use crate::torus::{Node, TorusSpec};
use crate::Result;

/// Number of shortest paths from the origin to every node, by node index.
pub fn shortest_path_counts(spec: &TorusSpec) -> Vec<f64> {
    let mut order: Vec<Node> = spec.nodes().collect();
    order.sort_by_key(|&u| spec.hop_distance(Node::ORIGIN, u));
    let mut count = vec![0.0; spec.num_nodes()];
    count[0] = 1.0;
    for v in order.into_iter().skip(1) {
        let dv = spec.hop_distance(Node::ORIGIN, v);
        let mut c = 0.0;
        for d in crate::Direction::ALL {
            let u = spec.step(v, d.negate());
            if spec.hop_distance(Node::ORIGIN, u) + 1 == dv {
                c += count[spec.node_index(u)];
            }
        }
        count[spec.node_index(v)] = c;
    }
    count
}

/// Equal split over all shortest paths from the origin to `t`.
pub(crate) fn ecmp_dense(spec: &TorusSpec, counts: &[f64], t: Node) -> Vec<f64> {
    let mut flows = vec![0.0; spec.num_edges()];
    if t == Node::ORIGIN {
        return flows;
    }
    let total = counts[spec.node_index(t)];
    let dist = spec.hop_distance(Node::ORIGIN, t);
    for e in spec.edges() {
        let head = spec.head(e);
        let before = spec.hop_distance(Node::ORIGIN, e.tail);
        let after = spec.hop_distance(head, t);
        if before + 1 + after == dist {
            // paths 0 -> tail times paths head -> t (a translate of 0 -> t - head)
            let via = counts[spec.node_index(e.tail)] * counts[spec.node_index(spec.sub(t, head))];
            flows[spec.edge_index(e)] = via / total;
        }
    }
    flows
}

/// Equal-cost multipath routing over all shortest paths.
pub fn build_ecmp(spec: &TorusSpec) -> Result<OriginPolicy> {
    let counts = shortest_path_counts(spec);
    super::build_invariant(spec, |t| Ok(ecmp_dense(spec, &counts, t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{DirectedEdge, Direction};

    #[test]
    fn two_by_one_offset_split() {
        let spec = TorusSpec::square(10).unwrap();
        let g = build_ecmp(&spec).unwrap();
        // t = (1, 2): two vertical moves, one horizontal move
        let t = Node::new(1, 2);
        let up = g.flow(t, DirectedEdge::new(Node::ORIGIN, Direction::PosVert));
        let right = g.flow(t, DirectedEdge::new(Node::ORIGIN, Direction::PosHor));
        assert!((up - 2.0 / 3.0).abs() < 1e-12);
        assert!((right - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn antipodal_axis_uses_both_directions() {
        let spec = TorusSpec::square(6).unwrap();
        let counts = shortest_path_counts(&spec);
        assert_eq!(counts[spec.node_index(Node::new(3, 0))], 2.0);
        assert_eq!(counts[spec.node_index(Node::new(3, 3))], 80.0);
    }
}
