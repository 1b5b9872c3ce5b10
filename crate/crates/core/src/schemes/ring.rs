use crate::policy::OriginPolicy;
use crate::torus::{DirectedEdge, Direction, Node, TorusSpec};
use crate::Result;

/// Which ring ring load balancing spreads over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RingOrientation {
    /// Spread over the source's column, cross along rows.
    VerticalRing,
    /// Spread over the source's row, cross along columns.
    HorizontalRing,
}

/// The ring is the dimension whose perpendicular bisection is cheaper:
/// cutting horizontal links costs `2 N c2`, cutting vertical links `2 M c1`.
pub fn ring_orientation(spec: &TorusSpec) -> RingOrientation {
    let cut_horizontal_links = 2.0 * spec.rows as f64 * spec.cap_horizontal;
    let cut_vertical_links = 2.0 * spec.cols as f64 * spec.cap_vertical;
    if cut_horizontal_links <= cut_vertical_links {
        RingOrientation::VerticalRing
    } else {
        RingOrientation::HorizontalRing
    }
}

/// Add `amount` along the shortest ring route from `from` moving along
/// `axis` (`PosVert` or `PosHor`) to `to`; antipodal targets split evenly.
fn ring_route(spec: &TorusSpec, flows: &mut [f64], from: Node, to: Node, axis: Direction, amount: f64) {
    let (len, offset) = if axis.is_vertical() {
        (spec.rows as i64, spec.signed_dy(from, to))
    } else {
        (spec.cols as i64, spec.signed_dx(from, to))
    };
    if offset == 0 {
        return;
    }
    if 2 * offset.abs() == len {
        walk(spec, flows, from, axis, offset.unsigned_abs() as usize, amount / 2.0);
        walk(
            spec,
            flows,
            from,
            axis.negate(),
            offset.unsigned_abs() as usize,
            amount / 2.0,
        );
    } else if offset > 0 {
        walk(spec, flows, from, axis, offset as usize, amount);
    } else {
        walk(spec, flows, from, axis.negate(), offset.unsigned_abs() as usize, amount);
    }
}

fn walk(spec: &TorusSpec, flows: &mut [f64], from: Node, dir: Direction, hops: usize, amount: f64) {
    let mut at = from;
    for _ in 0..hops {
        flows[spec.edge_index(DirectedEdge::new(at, dir))] += amount;
        at = spec.step(at, dir);
    }
}

fn ring_dense(spec: &TorusSpec, t: Node) -> Vec<f64> {
    let mut flows = vec![0.0; spec.num_edges()];
    let (ring_axis, cross_axis, ring_len, cross_len) = match ring_orientation(spec) {
        RingOrientation::VerticalRing => (Direction::PosVert, Direction::PosHor, spec.rows, spec.cols),
        RingOrientation::HorizontalRing => (Direction::PosHor, Direction::PosVert, spec.cols, spec.rows),
    };
    let share = 1.0 / ring_len as f64;
    // displacement of t along the crossing axis
    let cross = if cross_axis.is_vertical() { t.y } else { t.x };
    for h in 0..ring_len {
        let m = spec.walk(Node::ORIGIN, ring_axis, h);
        ring_route(spec, &mut flows, Node::ORIGIN, m, ring_axis, share);
        let landing = spec.walk(m, cross_axis, cross);
        if cross != 0 {
            walk(spec, &mut flows, m, cross_axis, cross, share / 2.0);
            walk(spec, &mut flows, m, cross_axis.negate(), cross_len - cross, share / 2.0);
        }
        ring_route(spec, &mut flows, landing, t, ring_axis, share);
    }
    flows
}

/// Ring load balancing: spread evenly over the source's ring in the short
/// dimension, cross the long dimension on both sides of each row (or
/// column), and gather along the destination's ring.
pub fn build_ring_lb(spec: &TorusSpec) -> Result<OriginPolicy> {
    super::build_invariant(spec, |t| Ok(ring_dense(spec, t)))
}
