//! Local load balancing over stems (LLB) and its generalization to
//! rectangular tori with unequal capacities (GLLB).
//!
//! Per destination offset `t` the unit of traffic is
//! 1. spread from the origin over its stem, `p = 1 / (2 (r1 + r2))` per node,
//! 2. moved from the source stem to the destination stem as a capacitated
//!    flow in which an edge may carry, in total, the non-stem cap plus the
//!    excess of each stem share it holds (source side, destination side),
//! 3. gathered from the destination stem into `t`.
//!
//! When the two crosses overlap, legs are truncated: collinear legs keep the
//! nodes at least as close to their own center as to the other one, and a
//! leg crossed by a perpendicular leg of the other stem stops at the
//! crossing node. The last kept node of a leg takes the share of the nodes
//! cut away.

use std::collections::BTreeSet;
use std::sync::Mutex;

use super::cancel_cycles;
use crate::paths::{augment_in_order, max_flow, torus_network, FLOW_EPS};
use crate::policy::OriginPolicy;
use crate::torus::{DirectedEdge, Direction, Node, TorusSpec};
use crate::{Error, Result};

const BALANCE_EPS: f64 = 1e-12;

/// Which of the four GLLB regimes a destination falls into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GllbCaseKind {
    DisjointHighCut,
    DisjointLowCut,
    OverlapHighCut,
    OverlapLowCut,
}

/// Dispatch record for one destination.
#[derive(Debug, Clone, PartialEq)]
pub struct GllbCase {
    pub kind: GllbCaseKind,
    /// Unit-capacity min cut between the net senders and receivers of phase 2.
    pub min_cut: f64,
    /// Two paths per sending node.
    pub required: f64,
    /// Low-cut caps `lambda1` (vertical) and `lambda2` (horizontal).
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    /// Non-stem caps actually applied, `Lambda1` and `Lambda2`.
    pub cap_vertical: f64,
    pub cap_horizontal: f64,
    /// The caps chosen by the min-cut test were infeasible and were relaxed,
    /// first to the low-cut caps and then by doubling.
    pub fallback: bool,
}

/// Kept leg lengths for one destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StemPlan {
    pub t: Node,
    pub r1: usize,
    pub r2: usize,
    /// Kept hops per source leg, direction order `+v, -v, +h, -h`.
    pub src_kept: [usize; 4],
    pub dst_kept: [usize; 4],
    pub overlap: bool,
}

impl StemPlan {
    pub fn new(spec: &TorusSpec, r1: usize, r2: usize, t: Node) -> StemPlan {
        let radius = |d: Direction| if d.is_vertical() { r1 } else { r2 };
        let leg = |c: Node, d: Direction| -> Vec<Node> { (1..=radius(d)).map(|h| spec.walk(c, d, h)).collect() };
        let o = Node::ORIGIN;
        let src_members: BTreeSet<Node> = Direction::ALL.iter().flat_map(|&d| leg(o, d)).collect();
        let dst_members: BTreeSet<Node> = Direction::ALL.iter().flat_map(|&d| leg(t, d)).collect();
        let mut src_cross = src_members.clone();
        src_cross.insert(o);
        let mut dst_cross = dst_members.clone();
        dst_cross.insert(t);
        let overlap = src_cross.intersection(&dst_cross).next().is_some();

        let kept = |own: Node, other: Node, others: &BTreeSet<Node>, d: Direction| -> usize {
            let nodes = leg(own, d);
            let collinear = if d.is_vertical() {
                own.x == other.x
            } else {
                own.y == other.y
            };
            if collinear {
                nodes
                    .iter()
                    .take_while(|&&n| spec.hop_distance(own, n) <= spec.hop_distance(other, n))
                    .count()
            } else {
                nodes
                    .iter()
                    .position(|n| others.contains(n))
                    .map_or(nodes.len(), |i| i + 1)
            }
        };
        StemPlan {
            t,
            r1,
            r2,
            src_kept: Direction::ALL.map(|d| kept(o, t, &dst_members, d)),
            dst_kept: Direction::ALL.map(|d| kept(t, o, &src_members, d)),
            overlap,
        }
    }

    fn radius(&self, d: Direction) -> usize {
        if d.is_vertical() {
            self.r1
        } else {
            self.r2
        }
    }
}

struct Phases {
    /// Phase 1 and phase 3 flows by edge index.
    fixed: Vec<f64>,
    /// Stem shares per edge as an outward source-stem edge and as an
    /// inward destination-stem edge.
    src_share: Vec<f64>,
    dst_share: Vec<f64>,
    /// Net phase-2 supply (positive) or demand (negative) per node.
    balance: Vec<f64>,
    /// Node indices in sending order.
    order: Vec<usize>,
}

fn phases(spec: &TorusSpec, plan: &StemPlan) -> Phases {
    let p = 1.0 / (2 * (plan.r1 + plan.r2)) as f64;
    let mut fixed = vec![0.0; spec.num_edges()];
    let mut src_share = vec![0.0; spec.num_edges()];
    let mut dst_share = vec![0.0; spec.num_edges()];
    let mut balance = vec![0.0; spec.num_nodes()];
    let mut order = vec![0];
    let o = Node::ORIGIN;
    let t = plan.t;

    for (i, &d) in Direction::ALL.iter().enumerate() {
        let r = plan.radius(d);
        for h in 0..r {
            let out = spec.edge_index(DirectedEdge::new(spec.walk(o, d, h), d));
            src_share[out] = f64::max(src_share[out], (r - h) as f64 * p);
            let inward = spec.edge_index(DirectedEdge::new(spec.walk(t, d, h + 1), d.negate()));
            dst_share[inward] = f64::max(dst_share[inward], (r - h) as f64 * p);
        }

        let l = plan.src_kept[i];
        if l == 0 {
            balance[spec.node_index(o)] += r as f64 * p;
        } else {
            for h in 1..=l {
                let share = if h == l { (r - l + 1) as f64 } else { 1.0 };
                let n = spec.walk(o, d, h);
                balance[spec.node_index(n)] += share * p;
                order.push(spec.node_index(n));
            }
            for h in 0..l {
                let e = DirectedEdge::new(spec.walk(o, d, h), d);
                fixed[spec.edge_index(e)] += (r - h) as f64 * p;
            }
        }

        let l = plan.dst_kept[i];
        if l == 0 {
            balance[spec.node_index(t)] -= r as f64 * p;
        } else {
            for h in 1..=l {
                let share = if h == l { (r - l + 1) as f64 } else { 1.0 };
                balance[spec.node_index(spec.walk(t, d, h))] -= share * p;
            }
            for h in 0..l {
                let e = DirectedEdge::new(spec.walk(t, d, h + 1), d.negate());
                fixed[spec.edge_index(e)] += (r - h) as f64 * p;
            }
        }
    }
    for (i, &d) in Direction::ALL.iter().enumerate() {
        for h in 1..=plan.dst_kept[i] {
            order.push(spec.node_index(spec.walk(t, d, h)));
        }
    }
    order.push(spec.node_index(t));
    let mut seen = BTreeSet::new();
    order.retain(|&v| seen.insert(v) && balance[v] > BALANCE_EPS);
    for b in balance.iter_mut() {
        if b.abs() <= BALANCE_EPS {
            *b = 0.0;
        }
    }
    Phases {
        fixed,
        src_share,
        dst_share,
        balance,
        order,
    }
}

/// Move the phase-2 imbalance under per-edge caps; `None` if some supply
/// cannot be delivered.
fn solve_phase2(spec: &TorusSpec, ph: &Phases, cap_v: f64, cap_h: f64) -> Option<Vec<f64>> {
    let caps: Vec<f64> = spec
        .edges()
        .map(|e| {
            let idx = spec.edge_index(e);
            let base = if e.dir.is_vertical() { cap_v } else { cap_h };
            let limit = base + (ph.src_share[idx] - base).max(0.0) + (ph.dst_share[idx] - base).max(0.0);
            (limit - ph.fixed[idx]).max(0.0)
        })
        .collect();
    let mut net = torus_network(spec, |e| caps[spec.edge_index(e)]);
    let mut supply: Vec<f64> = ph.balance.iter().map(|&b| b.max(0.0)).collect();
    let mut demand: Vec<f64> = ph.balance.iter().map(|&b| (-b).max(0.0)).collect();
    augment_in_order(&mut net, &ph.order, &mut supply, &mut demand);
    if supply.iter().any(|&s| s > 1e-9) {
        return None;
    }
    let mut flow: Vec<f64> = (0..spec.num_edges()).map(|i| net.edge_flow(2 * i)).collect();
    for f in flow.iter_mut() {
        if *f < FLOW_EPS {
            *f = 0.0;
        }
    }
    cancel_cycles(spec, &mut flow);
    Some(flow)
}

/// Phase 2 under the case caps, doubling them until the imbalance can be
/// moved. Any doubling marks the case as a fallback.
fn relaxed_phase2(spec: &TorusSpec, ph: &Phases, case: &mut GllbCase) -> Option<Vec<f64>> {
    for _ in 0..32 {
        if let Some(f) = solve_phase2(spec, ph, case.cap_vertical, case.cap_horizontal) {
            return Some(f);
        }
        case.fallback = true;
        case.cap_vertical *= 2.0;
        case.cap_horizontal *= 2.0;
    }
    None
}

fn unit_cut(spec: &TorusSpec, ph: &Phases) -> Result<f64> {
    let senders: BTreeSet<Node> = (0..spec.num_nodes())
        .filter(|&v| ph.balance[v] > 0.0)
        .map(|v| spec.node_at(v))
        .collect();
    let receivers: BTreeSet<Node> = (0..spec.num_nodes())
        .filter(|&v| ph.balance[v] < 0.0)
        .map(|v| spec.node_at(v))
        .collect();
    if senders.is_empty() || receivers.is_empty() {
        return Ok(0.0);
    }
    Ok(max_flow(spec, &BTreeSet::new(), &senders, &receivers, &|_| 1.0)?.0)
}

fn low_cut_lambdas(spec: &TorusSpec, r1: usize, r2: usize) -> (f64, f64) {
    let (n, m) = (spec.rows as f64, spec.cols as f64);
    let (r1, r2) = (r1 as f64, r2 as f64);
    if spec.rows <= spec.cols {
        (1.0 / (2.0 * r2) - r1 / (r2 * n), 1.0 / (2.0 * n))
    } else {
        (1.0 / (2.0 * m), 1.0 / (2.0 * r1) - r2 / (r1 * m))
    }
}

/// Flows for one destination offset together with its dispatch record.
/// With `high_cut_only` the low-cut regime is never used.
pub fn gllb_destination(
    spec: &TorusSpec,
    r1: usize,
    r2: usize,
    t: Node,
    high_cut_only: bool,
) -> Result<(Vec<f64>, GllbCase)> {
    let plan = StemPlan::new(spec, r1, r2, t);
    let ph = phases(spec, &plan);
    let senders = ph.balance.iter().filter(|&&b| b > 0.0).count();
    let required = 2.0 * senders as f64;
    let min_cut = unit_cut(spec, &ph)?;
    let u = 1.0 / (4 * (r1 + r2)) as f64;
    let (l1, l2) = low_cut_lambdas(spec, r1, r2);
    let high = min_cut + 1e-9 >= required;
    let kind = match (plan.overlap, high || high_cut_only) {
        (false, true) => GllbCaseKind::DisjointHighCut,
        (false, false) => GllbCaseKind::DisjointLowCut,
        (true, true) => GllbCaseKind::OverlapHighCut,
        (true, false) => GllbCaseKind::OverlapLowCut,
    };
    let mut case = GllbCase {
        kind,
        min_cut,
        required,
        lambda1: None,
        lambda2: None,
        cap_vertical: u,
        cap_horizontal: u,
        fallback: false,
    };
    let low_case = |case: &mut GllbCase| {
        case.kind = if plan.overlap {
            GllbCaseKind::OverlapLowCut
        } else {
            GllbCaseKind::DisjointLowCut
        };
        case.lambda1 = Some(l1);
        case.lambda2 = Some(l2);
        case.cap_vertical = u.max(l1);
        case.cap_horizontal = u.max(l2);
    };
    let phase2 = if high || high_cut_only {
        match solve_phase2(spec, &ph, u, u) {
            Some(f) => Some(f),
            None if high_cut_only => None,
            None => {
                low_case(&mut case);
                case.fallback = true;
                relaxed_phase2(spec, &ph, &mut case)
            }
        }
    } else {
        low_case(&mut case);
        relaxed_phase2(spec, &ph, &mut case)
    };
    let phase2 = phase2.ok_or_else(|| {
        Error::Infeasible(format!(
            "stem radii ({r1}, {r2}), destination {t}: phase-2 flow infeasible (min cut {min_cut})"
        ))
    })?;
    let flows = ph.fixed.iter().zip(&phase2).map(|(a, b)| a + b).collect();
    Ok((flows, case))
}

/// GLLB policy plus the dispatch record of every representative offset.
#[derive(Debug, Clone)]
pub struct GllbBuild {
    pub policy: OriginPolicy,
    pub cases: Vec<(Node, GllbCase)>,
}

fn build_stem_policy(spec: &TorusSpec, r1: usize, r2: usize, high_cut_only: bool) -> Result<GllbBuild> {
    let cases = Mutex::new(Vec::new());
    let policy = super::build_invariant(spec, |t| {
        let (flows, case) = gllb_destination(spec, r1, r2, t, high_cut_only)?;
        cases.lock().expect("case log").push((t, case));
        Ok(flows)
    })?;
    let mut cases = cases.into_inner().expect("case log");
    cases.sort_by_key(|&(t, _)| t);
    Ok(GllbBuild { policy, cases })
}

/// LLB with stem radius `r` on a square torus with equal capacities.
pub fn build_llb(spec: &TorusSpec, r: usize) -> Result<OriginPolicy> {
    if !spec.is_square_symmetric() {
        return Err(Error::NotSquare);
    }
    if r == 0 || 2 * r >= spec.rows {
        return Err(Error::RadiusTooLarge(format!(
            "LLB needs 1 <= r < N/2, got r = {r} on N = {}",
            spec.rows
        )));
    }
    Ok(build_stem_policy(spec, r, r, true)?.policy)
}

/// GLLB with vertical radius `r1` and horizontal radius `r2`.
pub fn build_gllb(spec: &TorusSpec, r1: usize, r2: usize) -> Result<OriginPolicy> {
    Ok(build_gllb_detailed(spec, r1, r2)?.policy)
}

pub fn build_gllb_detailed(spec: &TorusSpec, r1: usize, r2: usize) -> Result<GllbBuild> {
    if r1 == 0 || r2 == 0 || 2 * r1 > spec.rows || 2 * r2 > spec.cols {
        return Err(Error::RadiusTooLarge(format!(
            "GLLB needs 1 <= r1 <= N/2 and 1 <= r2 <= M/2, got ({r1}, {r2}) on {}x{}",
            spec.rows, spec.cols
        )));
    }
    build_stem_policy(spec, r1, r2, false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_plan_keeps_full_legs() {
        let spec = TorusSpec::square(10).unwrap();
        let plan = StemPlan::new(&spec, 3, 3, Node::new(5, 5));
        assert!(!plan.overlap);
        assert_eq!(plan.src_kept, [3; 4]);
        assert_eq!(plan.dst_kept, [3; 4]);
    }

    #[test]
    fn collinear_plan_splits_at_midpoint() {
        let spec = TorusSpec::square(10).unwrap();
        let plan = StemPlan::new(&spec, 3, 3, Node::new(0, 4));
        assert!(plan.overlap);
        assert_eq!(plan.src_kept[Direction::PosVert.index()], 2);
        assert_eq!(plan.dst_kept[Direction::NegVert.index()], 2);
        assert_eq!(plan.src_kept[Direction::PosHor.index()], 3);
    }

    #[test]
    fn crossing_plan_stops_at_crossings() {
        let spec = TorusSpec::square(10).unwrap();
        let plan = StemPlan::new(&spec, 3, 3, Node::new(2, 1));
        assert!(plan.overlap);
        assert_eq!(plan.src_kept[Direction::PosHor.index()], 2);
        assert_eq!(plan.src_kept[Direction::PosVert.index()], 1);
        assert_eq!(plan.dst_kept[Direction::NegVert.index()], 1);
        assert_eq!(plan.dst_kept[Direction::NegHor.index()], 2);
    }

    #[test]
    fn stem_edge_share_matches_hop() {
        let spec = TorusSpec::square(10).unwrap();
        let t = Node::new(5, 5);
        let (flows, case) = gllb_destination(&spec, 3, 3, t, true).unwrap();
        assert_eq!(case.kind, GllbCaseKind::DisjointHighCut);
        for h in 0..3 {
            let e = DirectedEdge::new(Node::new(0, h), Direction::PosVert);
            let f = flows[spec.edge_index(e)];
            assert!((f - (3 - h) as f64 / 12.0).abs() < 1e-12, "hop {h}: {f}");
        }
    }
}
