//! Routing policies: per-pair edge fractions, stored either for every pair
//! or once per destination offset from the origin.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use crate::torus::{Automorphism, DirectedEdge, Direction, Node, TorusSpec};
use crate::{Error, Result};

/// Node-balance tolerance.
pub const CONSERVATION_TOL: f64 = 1e-9;
const BOUND_TOL: f64 = 1e-12;
const DROP_TOL: f64 = 1e-15;

/// Sparse edge flows sorted by edge index.
pub type EdgeFlows = Vec<(usize, f64)>;

/// Convert a dense per-edge vector into sorted sparse form.
pub fn sparse_from_dense(dense: &[f64]) -> EdgeFlows {
    dense
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > DROP_TOL)
        .map(|(i, &v)| (i, v))
        .collect()
}

fn lookup(flows: &[(usize, f64)], edge: usize) -> f64 {
    match flows.binary_search_by_key(&edge, |&(e, _)| e) {
        Ok(i) => flows[i].1,
        Err(_) => 0.0,
    }
}

/// A single problem found by [`Policy::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub source: Node,
    pub dest: Node,
    pub node: Option<Node>,
    pub edge: Option<DirectedEdge>,
    pub residual: f64,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "pair {} -> {}: {}", self.source, self.dest, self.message)
    }
}

/// Read access shared by both policy representations.
pub trait Policy: Sync {
    fn spec(&self) -> &TorusSpec;

    /// Call `visit` with every edge carrying flow for the pair `s -> t`.
    fn visit_pair(&self, s: Node, t: Node, visit: &mut dyn FnMut(DirectedEdge, f64));

    fn validate(&self) -> Vec<Violation>;

    /// The origin form, when the policy is stored that way.
    fn as_origin(&self) -> Option<&OriginPolicy> {
        None
    }

    fn pair_flow(&self, s: Node, t: Node, e: DirectedEdge) -> f64 {
        let mut v = 0.0;
        self.visit_pair(s, t, &mut |edge, f| {
            if edge == e {
                v += f;
            }
        });
        v
    }
}

fn check_pair(spec: &TorusSpec, s: Node, t: Node, flows: &[(usize, f64)], shift: Node, out: &mut Vec<Violation>) {
    let mut balance = vec![0.0; spec.num_nodes()];
    for &(idx, f) in flows {
        let e = spec.translate_edge(spec.edge_at(idx), shift);
        if !(-BOUND_TOL..=1.0 + BOUND_TOL).contains(&f) {
            out.push(Violation {
                source: s,
                dest: t,
                node: None,
                edge: Some(e),
                residual: f,
                message: format!("fraction {f} on {e} outside [0, 1]"),
            });
        }
        balance[spec.node_index(e.tail)] += f;
        balance[spec.node_index(spec.head(e))] -= f;
    }
    balance[spec.node_index(s)] -= 1.0;
    balance[spec.node_index(t)] += 1.0;
    for (i, &b) in balance.iter().enumerate() {
        if b.abs() > CONSERVATION_TOL {
            let node = spec.node_at(i);
            out.push(Violation {
                source: s,
                dest: t,
                node: Some(node),
                edge: None,
                residual: b,
                message: format!("conservation residual {b:.3e} at {node}"),
            });
        }
    }
}

/// Translation-invariant policy: `g^t` routes one unit from the origin to
/// offset `t`; the pair `s -> s + t` uses the same flows shifted by `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct OriginPolicy {
    spec: TorusSpec,
    flows: Vec<EdgeFlows>,
}

impl OriginPolicy {
    pub fn new(spec: TorusSpec) -> Self {
        OriginPolicy {
            spec,
            flows: vec![Vec::new(); spec.num_nodes()],
        }
    }

    /// Replace the flows toward offset `t`.
    pub fn set_destination(&mut self, t: Node, mut flows: EdgeFlows) {
        flows.sort_by_key(|&(e, _)| e);
        flows.retain(|&(_, f)| f.abs() > DROP_TOL);
        let i = self.spec.node_index(t);
        self.flows[i] = flows;
    }

    pub fn set_destination_dense(&mut self, t: Node, dense: &[f64]) {
        self.set_destination(t, sparse_from_dense(dense));
    }

    /// Flows toward offset `t`, sorted by edge index.
    pub fn flows_to(&self, t: Node) -> &[(usize, f64)] {
        &self.flows[self.spec.node_index(t)]
    }

    pub fn flow(&self, t: Node, e: DirectedEdge) -> f64 {
        lookup(self.flows_to(t), self.spec.edge_index(e))
    }

    /// Expected path length for one unit sent to offset `t`.
    pub fn hops(&self, t: Node) -> f64 {
        self.flows_to(t).iter().map(|&(_, f)| f).sum()
    }

    pub fn support_size(&self) -> usize {
        self.flows.iter().map(Vec::len).sum()
    }

    /// Materialize flows for every ordered pair.
    pub fn expand(&self) -> FullPolicy {
        let spec = self.spec;
        let mut full = FullPolicy::new(spec);
        for s in spec.nodes() {
            for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
                let shifted = self
                    .flows_to(t)
                    .iter()
                    .map(|&(idx, f)| {
                        let e = spec.translate_edge(spec.edge_at(idx), s);
                        (spec.edge_index(e), f)
                    })
                    .collect();
                full.set_pair(s, spec.add(s, t), shifted);
            }
        }
        full
    }

    /// True iff `g^t(e) == g^{P t}(P e)` within 1e-9 for every reflection `P`
    /// in the spec's point group.
    pub fn check_reflection_invariance(&self) -> bool {
        self.reflection_defect() <= 1e-9
    }

    /// Largest absolute mismatch over the reflection identities.
    pub fn reflection_defect(&self) -> f64 {
        let spec = self.spec;
        let mut worst: f64 = 0.0;
        for p in spec.point_group().iter().filter(|p| !p.is_identity()) {
            for t in spec.nodes() {
                let pt = p.apply_unchecked(&spec, t);
                for &(idx, f) in self.flows_to(t) {
                    let pe = p.apply_edge_unchecked(&spec, spec.edge_at(idx));
                    worst = worst.max((self.flow(pt, pe) - f).abs());
                }
            }
        }
        worst
    }

    /// Average over the point group, producing a reflection-invariant policy.
    pub fn symmetrize_reflections(&self) -> OriginPolicy {
        let spec = self.spec;
        let points = spec.point_group();
        let w = 1.0 / points.len() as f64;
        let mut out = OriginPolicy::new(spec);
        let mut dense = vec![0.0; spec.num_edges()];
        for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
            dense.iter_mut().for_each(|v| *v = 0.0);
            for p in &points {
                // g'^t(e) += g^{P t}(P e); reflections are involutions.
                let pt = p.apply_unchecked(&spec, t);
                for &(idx, f) in self.flows_to(pt) {
                    let e = p.apply_edge_unchecked(&spec, spec.edge_at(idx));
                    dense[spec.edge_index(e)] += w * f;
                }
            }
            out.set_destination_dense(t, &dense);
        }
        out
    }

    /// CSV with header `dst_x,dst_y,tail_x,tail_y,dir,fraction`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["dst_x", "dst_y", "tail_x", "tail_y", "dir", "fraction"])?;
        for t in self.spec.nodes() {
            for &(idx, f) in self.flows_to(t) {
                let e = self.spec.edge_at(idx);
                out.write_record([
                    t.x.to_string(),
                    t.y.to_string(),
                    e.tail.x.to_string(),
                    e.tail.y.to_string(),
                    e.dir.label().to_string(),
                    f.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(spec: TorusSpec, r: R) -> Result<Self> {
        let rows = read_flow_rows(r, &["dst_x", "dst_y", "tail_x", "tail_y", "dir", "fraction"])?;
        let mut dense: BTreeMap<Node, Vec<f64>> = BTreeMap::new();
        for row in rows {
            let t = spec.checked_node(row.ints[0], row.ints[1])?;
            let tail = spec.checked_node(row.ints[2], row.ints[3])?;
            let idx = spec.edge_index(DirectedEdge::new(tail, row.dir));
            dense.entry(t).or_insert_with(|| vec![0.0; spec.num_edges()])[idx] += row.fraction;
        }
        let mut g = OriginPolicy::new(spec);
        for (t, d) in dense {
            g.set_destination_dense(t, &d);
        }
        Ok(g)
    }
}

impl Policy for OriginPolicy {
    fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    fn visit_pair(&self, s: Node, t: Node, visit: &mut dyn FnMut(DirectedEdge, f64)) {
        let offset = self.spec.sub(t, s);
        for &(idx, f) in self.flows_to(offset) {
            visit(self.spec.translate_edge(self.spec.edge_at(idx), s), f);
        }
    }

    fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for t in self.spec.nodes() {
            if t == Node::ORIGIN {
                if !self.flows_to(t).is_empty() {
                    out.push(Violation {
                        source: t,
                        dest: t,
                        node: Some(t),
                        edge: None,
                        residual: self.hops(t),
                        message: "flow stored for the zero offset".into(),
                    });
                }
                continue;
            }
            check_pair(&self.spec, Node::ORIGIN, t, self.flows_to(t), Node::ORIGIN, &mut out);
        }
        out
    }

    fn as_origin(&self) -> Option<&OriginPolicy> {
        Some(self)
    }
}

/// General policy with explicit flows for each `(source, destination)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FullPolicy {
    spec: TorusSpec,
    flows: BTreeMap<(Node, Node), EdgeFlows>,
}

impl FullPolicy {
    pub fn new(spec: TorusSpec) -> Self {
        FullPolicy {
            spec,
            flows: BTreeMap::new(),
        }
    }

    fn spec_ref(&self) -> &TorusSpec {
        &self.spec
    }

    pub fn set_pair(&mut self, s: Node, t: Node, mut flows: EdgeFlows) {
        flows.sort_by_key(|&(e, _)| e);
        flows.retain(|&(_, f)| f.abs() > DROP_TOL);
        self.flows.insert((s, t), flows);
    }

    pub fn set_pair_dense(&mut self, s: Node, t: Node, dense: &[f64]) {
        self.set_pair(s, t, sparse_from_dense(dense));
    }

    pub fn pair(&self, s: Node, t: Node) -> &[(usize, f64)] {
        self.flows.get(&(s, t)).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn pairs(&self) -> impl Iterator<Item = (Node, Node, &[(usize, f64)])> + '_ {
        self.flows.iter().map(|(&(s, t), f)| (s, t, f.as_slice()))
    }

    pub fn num_pairs(&self) -> usize {
        self.flows.len()
    }

    /// Largest absolute difference between two policies over all entries.
    pub fn max_abs_diff(&self, other: &FullPolicy) -> f64 {
        let mut worst: f64 = 0.0;
        let keys: std::collections::BTreeSet<_> = self.flows.keys().chain(other.flows.keys()).collect();
        for &(s, t) in keys {
            let a = self.pair(s, t);
            let b = other.pair(s, t);
            for &(e, f) in a {
                worst = worst.max((f - lookup(b, e)).abs());
            }
            for &(e, f) in b {
                worst = worst.max((f - lookup(a, e)).abs());
            }
        }
        worst
    }

    /// Average `f^{phi(s),phi(t)}(phi(e))` over `group`.
    pub fn symmetrize(&self, group: &[Automorphism]) -> Result<FullPolicy> {
        let spec = *self.spec_ref();
        for phi in group {
            phi.check(&spec)?;
        }
        if group.is_empty() {
            return Err(Error::InvalidAutomorphism("empty group".into()));
        }
        let w = 1.0 / group.len() as f64;
        let mut acc: BTreeMap<(Node, Node), BTreeMap<usize, f64>> = BTreeMap::new();
        for phi in group {
            let inv = phi.inverse(&spec);
            for (a, b, flows) in self.pairs() {
                let key = (inv.apply_unchecked(&spec, a), inv.apply_unchecked(&spec, b));
                let slot = acc.entry(key).or_default();
                for &(idx, f) in flows {
                    let e = inv.apply_edge_unchecked(&spec, spec.edge_at(idx));
                    *slot.entry(spec.edge_index(e)).or_default() += w * f;
                }
            }
        }
        let mut out = FullPolicy::new(spec);
        for ((s, t), m) in acc {
            out.set_pair(s, t, m.into_iter().collect());
        }
        Ok(out)
    }

    /// CSV with header `src_x,src_y,dst_x,dst_y,tail_x,tail_y,dir,fraction`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let spec = *self.spec_ref();
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "src_x", "src_y", "dst_x", "dst_y", "tail_x", "tail_y", "dir", "fraction",
        ])?;
        for (s, t, flows) in self.pairs() {
            for &(idx, f) in flows {
                let e = spec.edge_at(idx);
                out.write_record([
                    s.x.to_string(),
                    s.y.to_string(),
                    t.x.to_string(),
                    t.y.to_string(),
                    e.tail.x.to_string(),
                    e.tail.y.to_string(),
                    e.dir.label().to_string(),
                    f.to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(spec: TorusSpec, r: R) -> Result<Self> {
        let rows = read_flow_rows(
            r,
            &[
                "src_x", "src_y", "dst_x", "dst_y", "tail_x", "tail_y", "dir", "fraction",
            ],
        )?;
        let mut acc: BTreeMap<(Node, Node), BTreeMap<usize, f64>> = BTreeMap::new();
        for row in rows {
            let s = spec.checked_node(row.ints[0], row.ints[1])?;
            let t = spec.checked_node(row.ints[2], row.ints[3])?;
            let tail = spec.checked_node(row.ints[4], row.ints[5])?;
            let idx = spec.edge_index(DirectedEdge::new(tail, row.dir));
            *acc.entry((s, t)).or_default().entry(idx).or_default() += row.fraction;
        }
        let mut p = FullPolicy::new(spec);
        for ((s, t), m) in acc {
            p.set_pair(s, t, m.into_iter().collect());
        }
        Ok(p)
    }
}

impl Policy for FullPolicy {
    fn spec(&self) -> &TorusSpec {
        self.spec_ref()
    }

    fn visit_pair(&self, s: Node, t: Node, visit: &mut dyn FnMut(DirectedEdge, f64)) {
        let spec = self.spec_ref();
        for &(idx, f) in self.pair(s, t) {
            visit(spec.edge_at(idx), f);
        }
    }

    fn validate(&self) -> Vec<Violation> {
        let spec = *self.spec_ref();
        let mut out = Vec::new();
        for (s, t, flows) in self.pairs() {
            check_pair(&spec, s, t, flows, Node::ORIGIN, &mut out);
        }
        out
    }
}

struct FlowRow {
    ints: Vec<i64>,
    dir: Direction,
    fraction: f64,
}

fn read_flow_rows<R: Read>(r: R, header: &[&str]) -> Result<Vec<FlowRow>> {
    let mut input = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r);
    let found = input.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse(format!("unexpected header {found:?}")));
    }
    let n_int = header.len() - 2;
    let mut rows = Vec::new();
    for record in input.records() {
        let record = record?;
        if record.len() != header.len() {
            return Err(Error::Parse(format!("expected {} columns", header.len())));
        }
        let ints = (0..n_int)
            .map(|i| {
                record[i]
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("column {}: {e}", header[i])))
            })
            .collect::<Result<Vec<_>>>()?;
        let dir = Direction::parse(&record[n_int])
            .ok_or_else(|| Error::Parse(format!("bad direction {:?}", &record[n_int])))?;
        let fraction = record[n_int + 1]
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("fraction: {e}")))?;
        rows.push(FlowRow { ints, dir, fraction });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straight_line(spec: TorusSpec) -> OriginPolicy {
        // Every destination reached by moving +h then +v.
        let mut g = OriginPolicy::new(spec);
        for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
            let mut flows = Vec::new();
            let mut at = Node::ORIGIN;
            for _ in 0..t.x {
                flows.push((spec.edge_index(DirectedEdge::new(at, Direction::PosHor)), 1.0));
                at = spec.step(at, Direction::PosHor);
            }
            for _ in 0..t.y {
                flows.push((spec.edge_index(DirectedEdge::new(at, Direction::PosVert)), 1.0));
                at = spec.step(at, Direction::PosVert);
            }
            g.set_destination(t, flows);
        }
        g
    }

    #[test]
    fn one_direction_routing_is_valid_but_not_invariant() {
        let spec = TorusSpec::square(5).unwrap();
        let g = straight_line(spec);
        assert!(g.validate().is_empty());
        assert!(!g.check_reflection_invariance());
        assert!(g.symmetrize_reflections().check_reflection_invariance());
    }

    #[test]
    fn empty_policy_is_valid() {
        let spec = TorusSpec::square(4).unwrap();
        assert!(FullPolicy::new(spec).validate().is_empty());
    }

    #[test]
    fn origin_csv_round_trip() {
        let spec = TorusSpec::unit(3, 4).unwrap();
        let g = straight_line(spec);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        assert_eq!(OriginPolicy::read_csv(spec, buf.as_slice()).unwrap(), g);
    }

    #[test]
    fn full_csv_round_trip() {
        let spec = TorusSpec::unit(3, 3).unwrap();
        let full = straight_line(spec).expand();
        let mut buf = Vec::new();
        full.write_csv(&mut buf).unwrap();
        assert_eq!(FullPolicy::read_csv(spec, buf.as_slice()).unwrap(), full);
    }

    #[test]
    fn expand_from_origin_is_identity() {
        let spec = TorusSpec::square(4).unwrap();
        let g = straight_line(spec);
        let full = g.expand();
        for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
            assert_eq!(full.pair(Node::ORIGIN, t), g.flows_to(t));
        }
    }
}
