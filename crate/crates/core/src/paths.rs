//! Stems, max-flow / min-cut on the torus, and edge-disjoint stem paths.

use std::collections::BTreeSet;

use crate::torus::{DirectedEdge, Direction, Node, TorusSpec};
use crate::{Error, Result};

pub(crate) const FLOW_EPS: f64 = 1e-12;

/// The cross of nodes around `center`: `r1` hops along each vertical leg and
/// `r2` along each horizontal leg, the center itself excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct Stem {
    pub center: Node,
    pub r1: usize,
    pub r2: usize,
    /// Legs in direction order `+v, -v, +h, -h`; entry `h - 1` is `h` hops out.
    pub legs: [Vec<Node>; 4],
    /// Distinct members in leg order.
    pub members: Vec<Node>,
}

impl Stem {
    /// Build a stem allowing radii up to half the extent. When a radius
    /// equals half the extent the two legs share their last node.
    pub(crate) fn build(spec: &TorusSpec, center: Node, r1: usize, r2: usize) -> Result<Stem> {
        if 2 * r1 > spec.rows || 2 * r2 > spec.cols {
            return Err(Error::RadiusTooLarge(format!(
                "stem radii ({r1}, {r2}) on a {}x{} torus",
                spec.rows, spec.cols
            )));
        }
        let legs = Direction::ALL.map(|d| {
            let r = if d.is_vertical() { r1 } else { r2 };
            (1..=r).map(|h| spec.walk(center, d, h)).collect::<Vec<_>>()
        });
        let mut seen = BTreeSet::new();
        let members = legs.iter().flatten().copied().filter(|&u| seen.insert(u)).collect();
        Ok(Stem {
            center,
            r1,
            r2,
            legs,
            members,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, u: Node) -> bool {
        self.members.contains(&u)
    }

    /// Members plus the center.
    pub fn cross(&self) -> BTreeSet<Node> {
        let mut s: BTreeSet<Node> = self.members.iter().copied().collect();
        s.insert(self.center);
        s
    }

    pub fn radius(&self, dir: Direction) -> usize {
        if dir.is_vertical() {
            self.r1
        } else {
            self.r2
        }
    }
}

/// Stem with strictly non-colliding legs (`r1 < rows/2`, `r2 < cols/2`).
pub fn stem(spec: &TorusSpec, center: Node, r1: usize, r2: usize) -> Result<Stem> {
    if (r1 > 0 && 2 * r1 >= spec.rows) || (r2 > 0 && 2 * r2 >= spec.cols) {
        return Err(Error::RadiusTooLarge(format!(
            "legs of radii ({r1}, {r2}) collide on a {}x{} torus",
            spec.rows, spec.cols
        )));
    }
    Stem::build(spec, center, r1, r2)
}

/// True when the two crosses (stems with their centers) share a node.
pub fn crosses_overlap(a: &Stem, b: &Stem) -> bool {
    let ca = a.cross();
    b.cross().iter().any(|u| ca.contains(u))
}

/// A contiguous walk of directed edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgePath {
    pub edges: Vec<DirectedEdge>,
}

impl EdgePath {
    pub fn start(&self) -> Node {
        self.edges[0].tail
    }

    pub fn end(&self, spec: &TorusSpec) -> Node {
        spec.head(*self.edges.last().expect("paths are non-empty"))
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_contiguous(&self, spec: &TorusSpec) -> bool {
        self.edges.windows(2).all(|w| spec.head(w[0]) == w[1].tail)
    }
}

/// Residual network with real capacities. Arc `2i` is the forward arc of
/// edge `i`, arc `2i + 1` its reverse.
#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    pub head: Vec<usize>,
    pub cap: Vec<f64>,
    pub flow: Vec<f64>,
    pub adj: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            head: Vec::new(),
            cap: Vec::new(),
            flow: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Add edge `u -> v`; returns its forward arc id.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64) -> usize {
        let a = self.head.len();
        self.head.extend([v, u]);
        self.cap.extend([cap, 0.0]);
        self.flow.extend([0.0, 0.0]);
        self.adj[u].push(a);
        self.adj[v].push(a + 1);
        a
    }

    pub fn tail(&self, arc: usize) -> usize {
        self.head[arc ^ 1]
    }

    pub fn residual(&self, arc: usize) -> f64 {
        if arc.is_multiple_of(2) {
            self.cap[arc] - self.flow[arc]
        } else {
            self.flow[arc ^ 1]
        }
    }

    pub fn push(&mut self, arc: usize, amount: f64) {
        if arc.is_multiple_of(2) {
            self.flow[arc] += amount;
        } else {
            self.flow[arc ^ 1] -= amount;
        }
    }

    /// Net flow on the edge whose forward arc is `arc`.
    pub fn edge_flow(&self, arc: usize) -> f64 {
        self.flow[arc]
    }

    /// Breadth-first search over arcs with residual capacity. Returns the
    /// parent arc of every reached node.
    pub fn bfs(&self, from: usize) -> Vec<Option<usize>> {
        self.search(from).0
    }

    /// Breadth-first search returning parent arcs and discovery order.
    pub fn search(&self, from: usize) -> (Vec<Option<usize>>, Vec<usize>) {
        let mut parent = vec![None; self.num_nodes()];
        let mut seen = vec![false; self.num_nodes()];
        seen[from] = true;
        let mut order = vec![from];
        let mut i = 0;
        while i < order.len() {
            let u = order[i];
            i += 1;
            for &a in &self.adj[u] {
                let v = self.head[a];
                if !seen[v] && self.residual(a) > FLOW_EPS {
                    seen[v] = true;
                    parent[v] = Some(a);
                    order.push(v);
                }
            }
        }
        (parent, order)
    }

    pub fn path_to(&self, parent: &[Option<usize>], from: usize, to: usize) -> Vec<usize> {
        let mut arcs = Vec::new();
        let mut v = to;
        while v != from {
            let a = parent[v].expect("node reached by search");
            arcs.push(a);
            v = self.tail(a);
        }
        arcs.reverse();
        arcs
    }

    /// Edmonds-Karp maximum flow from `s` to `t`.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let parent = self.bfs(s);
            if parent[t].is_none() {
                return total;
            }
            let arcs = self.path_to(&parent, s, t);
            let delta = arcs.iter().map(|&a| self.residual(a)).fold(f64::INFINITY, f64::min);
            for &a in &arcs {
                self.push(a, delta);
            }
            total += delta;
        }
    }

    /// Nodes reachable from `s` in the residual network.
    pub fn reachable(&self, s: usize) -> Vec<bool> {
        let parent = self.bfs(s);
        (0..self.num_nodes()).map(|v| v == s || parent[v].is_some()).collect()
    }
}

/// Torus edges mapped onto a [`FlowNetwork`]: edge `i` of the spec is
/// network edge `i`, so its forward arc is `2i`.
pub(crate) fn torus_network(spec: &TorusSpec, cap: impl Fn(DirectedEdge) -> f64) -> FlowNetwork {
    let mut net = FlowNetwork::new(spec.num_nodes());
    for e in spec.edges() {
        net.add_edge(spec.node_index(e.tail), spec.node_index(spec.head(e)), cap(e));
    }
    // Canonical neighbour order: forward arcs by direction, then reverse arcs.
    for u in 0..spec.num_nodes() {
        net.adj[u].sort_by_key(|&a| {
            let edge = spec.edge_at(a / 2);
            let moving = if a % 2 == 0 { edge.dir } else { edge.dir.negate() };
            (a % 2, moving.index())
        });
    }
    net
}

/// Maximum flow from `sources` to `sinks` with `removed` edges deleted and a
/// witnessing minimum cut (torus edges from the source side to the sink side).
pub fn max_flow(
    spec: &TorusSpec,
    removed: &BTreeSet<DirectedEdge>,
    sources: &BTreeSet<Node>,
    sinks: &BTreeSet<Node>,
    capacities: &dyn Fn(DirectedEdge) -> f64,
) -> Result<(f64, Vec<DirectedEdge>)> {
    if sources.iter().any(|u| sinks.contains(u)) {
        return Err(Error::OutOfRegime("sources and sinks intersect".into()));
    }
    let mut net = torus_network(spec, |e| if removed.contains(&e) { 0.0 } else { capacities(e) });
    let ss = net.add_node();
    let tt = net.add_node();
    for &u in sources {
        net.add_edge(ss, spec.node_index(u), f64::INFINITY);
    }
    for &u in sinks {
        net.add_edge(spec.node_index(u), tt, f64::INFINITY);
    }
    let value = net.max_flow(ss, tt);
    let side = net.reachable(ss);
    let cut: Vec<DirectedEdge> = spec
        .edges()
        .filter(|&e| side[spec.node_index(e.tail)] && !side[spec.node_index(spec.head(e))] && !removed.contains(&e))
        .collect();
    let cut_capacity: f64 = cut.iter().map(|&e| capacities(e)).sum();
    if (cut_capacity - value).abs() > 1e-9 * value.max(1.0) {
        return Err(Error::Infeasible(format!(
            "max-flow {value} disagrees with cut capacity {cut_capacity}"
        )));
    }
    Ok((value, cut))
}

/// Both stems, accepting radii up to half the extent.
fn disjoint_stems(spec: &TorusSpec, src: Node, dst: Node, r1: usize, r2: usize) -> Result<(Stem, Stem)> {
    let a = Stem::build(spec, src, r1, r2)?;
    let b = Stem::build(spec, dst, r1, r2)?;
    if crosses_overlap(&a, &b) {
        return Err(Error::StemsOverlap);
    }
    Ok((a, b))
}

/// Capacity-weighted minimum cut separating the two stems.
pub fn min_cut_between_stems(spec: &TorusSpec, src: Node, dst: Node, r1: usize, r2: usize) -> Result<f64> {
    let (a, b) = disjoint_stems(spec, src, dst, r1, r2)?;
    let sources = a.members.iter().copied().collect();
    let sinks = b.members.iter().copied().collect();
    let (value, _) = max_flow(spec, &BTreeSet::new(), &sources, &sinks, &|e| spec.capacity(e.dir))?;
    Ok(value)
}

/// `2 (2 r1 + 2 r2)` pairwise edge-disjoint paths, two leaving every source
/// stem node and two entering every destination stem node.
pub fn find_disjoint_stem_paths(spec: &TorusSpec, src: Node, dst: Node, r1: usize, r2: usize) -> Result<Vec<EdgePath>> {
    let (a, b) = disjoint_stems(spec, src, dst, r1, r2)?;
    let required = 2 * a.len();
    let unit_cut = {
        let sources = a.members.iter().copied().collect();
        let sinks = b.members.iter().copied().collect();
        max_flow(spec, &BTreeSet::new(), &sources, &sinks, &|_| 1.0)?.0
    };
    if unit_cut + 1e-9 < required as f64 {
        return Err(Error::CutTooSmall {
            cut: unit_cut,
            required: required as f64,
        });
    }
    let mut net = torus_network(spec, |_| 1.0);
    let mut supply = vec![0.0; spec.num_nodes()];
    let mut demand = vec![0.0; spec.num_nodes()];
    for &u in &a.members {
        supply[spec.node_index(u)] = 2.0;
    }
    for &u in &b.members {
        demand[spec.node_index(u)] = 2.0;
    }
    let order: Vec<usize> = a.members.iter().map(|&u| spec.node_index(u)).collect();
    augment_in_order(&mut net, &order, &mut supply, &mut demand);
    if supply.iter().any(|&s| s > FLOW_EPS) {
        return Err(Error::Infeasible(
            "sequential search left stem nodes without two paths".into(),
        ));
    }
    let used: Vec<bool> = (0..spec.num_edges()).map(|i| net.edge_flow(2 * i) > 0.5).collect();
    let starts: Vec<Node> = a.members.iter().flat_map(|&u| [u, u]).collect();
    let ends: Vec<Node> = b.members.clone();
    Ok(decompose_unit_flow(spec, used, &starts, &ends))
}

/// Push flow from the supply nodes, in the given order, to nodes with
/// outstanding demand along shortest residual paths until nothing moves.
pub(crate) fn augment_in_order(net: &mut FlowNetwork, order: &[usize], supply: &mut [f64], demand: &mut [f64]) {
    loop {
        let mut progressed = false;
        for &s in order {
            while supply[s] > FLOW_EPS {
                let (parent, order) = net.search(s);
                let target = order.into_iter().find(|&v| v != s && demand[v] > FLOW_EPS);
                let Some(t) = target else { break };
                let arcs = net.path_to(&parent, s, t);
                let delta = arcs
                    .iter()
                    .map(|&a| net.residual(a))
                    .fold(supply[s].min(demand[t]), f64::min);
                for &a in &arcs {
                    net.push(a, delta);
                }
                supply[s] -= delta;
                demand[t] -= delta;
                progressed = true;
            }
        }
        if !progressed || supply.iter().all(|&v| v <= FLOW_EPS) {
            return;
        }
    }
}

fn decompose_unit_flow(spec: &TorusSpec, mut used: Vec<bool>, starts: &[Node], ends: &[Node]) -> Vec<EdgePath> {
    let mut remaining_end = vec![0usize; spec.num_nodes()];
    for &u in ends {
        remaining_end[spec.node_index(u)] += 2;
    }
    let mut paths = Vec::new();
    for &s in starts {
        let mut edges = Vec::new();
        let mut at = s;
        loop {
            if !edges.is_empty() && remaining_end[spec.node_index(at)] > 0 {
                remaining_end[spec.node_index(at)] -= 1;
                break;
            }
            let next = Direction::ALL
                .iter()
                .map(|&d| DirectedEdge::new(at, d))
                .find(|&e| used[spec.edge_index(e)]);
            let Some(e) = next else { break };
            used[spec.edge_index(e)] = false;
            edges.push(e);
            at = spec.head(e);
        }
        if !edges.is_empty() {
            paths.push(EdgePath {
                edges: trim_cycles(spec, edges),
            });
        }
    }
    paths
}

/// Remove closed loops from a walk, keeping its endpoints.
pub fn trim_cycles(spec: &TorusSpec, edges: Vec<DirectedEdge>) -> Vec<DirectedEdge> {
    let mut out: Vec<DirectedEdge> = Vec::with_capacity(edges.len());
    for e in edges {
        if let Some(pos) = out.iter().position(|p| p.tail == e.tail) {
            out.truncate(pos);
        }
        out.push(e);
        let end = spec.head(e);
        if let Some(pos) = out.iter().position(|p| p.tail == end) {
            out.truncate(pos);
        }
    }
    out
}
