//! Solver-ready LP files: the reduced oblivious-routing LP over invariant
//! origin policies (hose constraints dualized per load-edge class) and the
//! fixed-demand min-congestion multicommodity LP.
//!
//! Variable names:
//! - `g_t{tx}_{ty}_e{ex}_{ey}_{dir}` flow toward offset `t` on edge `e`
//! - `th` the load objective
//! - `a_s{x}_{y}_{class}`, `b_t{x}_{y}_{class}`, `gam_{class}` dual multipliers
//! - `f_s{sx}_{sy}_t{tx}_{ty}_e{ex}_{ey}_{dir}` pair flows of the fixed-demand LP
//!
//! `dir` and `class` use the tags `pv`, `nv`, `ph`, `nh`.

mod model;

use std::collections::BTreeMap;
use std::io::Write;

pub use model::{Cmp, Constraint, LpCounts, LpModel};

use crate::eval::{edge_weight_matrix, k_matching};
use crate::policy::OriginPolicy;
use crate::torus::{DirectedEdge, Direction, Node, TorusSpec};
use crate::traffic::TrafficMatrix;
use crate::{Error, Result};

pub fn flow_var(t: Node, e: DirectedEdge) -> String {
    format!("g_t{}_{}_e{}_{}_{}", t.x, t.y, e.tail.x, e.tail.y, e.dir.tag())
}

fn pair_var(s: Node, t: Node, e: DirectedEdge) -> String {
    format!(
        "f_s{}_{}_t{}_{}_e{}_{}_{}",
        s.x,
        s.y,
        t.x,
        t.y,
        e.tail.x,
        e.tail.y,
        e.dir.tag()
    )
}

fn alpha_var(s: Node, class: Direction) -> String {
    format!("a_s{}_{}_{}", s.x, s.y, class.tag())
}

fn beta_var(t: Node, class: Direction) -> String {
    format!("b_t{}_{}_{}", t.x, t.y, class.tag())
}

fn gamma_var(class: Direction) -> String {
    format!("gam_{}", class.tag())
}

pub const THETA: &str = "th";

/// Directions of the load-edge classes at the origin: one class on
/// square symmetric tori, a vertical and a horizontal one otherwise.
pub fn load_classes(spec: &TorusSpec) -> Vec<Direction> {
    if spec.is_square_symmetric() {
        vec![Direction::PosVert]
    } else {
        vec![Direction::PosVert, Direction::PosHor]
    }
}

/// Options for the reduced oblivious LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ObliviousLpOptions {
    /// Merge variables tied by reflection invariance into one name per
    /// orbit. Without it every `(t, e)` gets its own variable and the ties
    /// are emitted as equality rows.
    pub dedupe_orbits: bool,
}

impl Default for ObliviousLpOptions {
    fn default() -> Self {
        ObliviousLpOptions { dedupe_orbits: true }
    }
}

/// Maps every `(t, e)` to the name of its variable.
struct FlowNames {
    spec: TorusSpec,
    dedupe: bool,
    points: Vec<crate::Automorphism>,
}

impl FlowNames {
    fn new(spec: &TorusSpec, dedupe: bool) -> Self {
        FlowNames {
            spec: *spec,
            dedupe,
            points: spec.point_group(),
        }
    }

    /// Orbit representative: smallest `(t, edge index)` image.
    fn canonical(&self, t: Node, e: DirectedEdge) -> (Node, DirectedEdge) {
        if !self.dedupe {
            return (t, e);
        }
        let spec = &self.spec;
        self.points
            .iter()
            .map(|p| (p.apply_unchecked(spec, t), p.apply_edge_unchecked(spec, e)))
            .min_by_key(|&(pt, pe)| (spec.node_index(pt), spec.edge_index(pe)))
            .expect("point group is never empty")
    }

    fn name(&self, t: Node, e: DirectedEdge) -> String {
        let (t, e) = self.canonical(t, e);
        flow_var(t, e)
    }
}

/// Offsets whose conservation rows are emitted: orbit representatives when
/// deduplicating, all non-zero offsets otherwise.
fn conservation_offsets(spec: &TorusSpec, names: &FlowNames) -> Vec<Node> {
    spec.nodes()
        .filter(|&t| t != Node::ORIGIN)
        .filter(|&t| !names.dedupe || names.points.iter().all(|p| p.apply_unchecked(spec, t) >= t))
        .collect()
}

/// Build the reduced oblivious LP for `k`-limited traffic.
pub fn reduced_oblivious_lp(spec: &TorusSpec, k: usize, opts: ObliviousLpOptions) -> Result<LpModel> {
    if k == 0 {
        return Err(Error::OutOfRegime("k must be positive".into()));
    }
    let names = FlowNames::new(spec, opts.dedupe_orbits);
    let mut m = LpModel {
        objective: vec![(THETA.to_string(), 1.0)],
        ..Default::default()
    };
    m.declare(THETA, 0.0, f64::INFINITY);
    for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
        for e in spec.edges() {
            m.declare(&names.name(t, e), 0.0, 1.0);
        }
    }

    for t in conservation_offsets(spec, &names) {
        for i in spec.nodes() {
            let mut terms: BTreeMap<String, f64> = BTreeMap::new();
            for d in Direction::ALL {
                *terms.entry(names.name(t, DirectedEdge::new(i, d))).or_default() += 1.0;
                let into = DirectedEdge::new(spec.step(i, d.negate()), d);
                *terms.entry(names.name(t, into)).or_default() -= 1.0;
            }
            terms.retain(|_, a| *a != 0.0);
            let rhs = if i == Node::ORIGIN {
                1.0
            } else if i == t {
                -1.0
            } else {
                0.0
            };
            if terms.is_empty() && rhs == 0.0 {
                continue;
            }
            m.constrain(
                format!("cons_t{}_{}_n{}_{}", t.x, t.y, i.x, i.y),
                terms.into_iter().collect(),
                Cmp::Eq,
                rhs,
            );
        }
    }

    if !opts.dedupe_orbits {
        for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
            for p in names.points.iter().filter(|p| !p.is_identity()) {
                let pt = p.apply_unchecked(spec, t);
                for e in spec.edges() {
                    let pe = p.apply_edge_unchecked(spec, e);
                    if (spec.node_index(pt), spec.edge_index(pe)) <= (spec.node_index(t), spec.edge_index(e)) {
                        continue;
                    }
                    m.constrain(
                        format!(
                            "sym_t{}_{}_e{}_{}_{}_p{}{}",
                            t.x,
                            t.y,
                            e.tail.x,
                            e.tail.y,
                            e.dir.tag(),
                            u8::from(p.reflect_xy),
                            u8::from(p.reflect_origin)
                        ),
                        vec![(flow_var(t, e), 1.0), (flow_var(pt, pe), -1.0)],
                        Cmp::Eq,
                        0.0,
                    );
                }
            }
        }
    }

    for class in load_classes(spec) {
        let gam = gamma_var(class);
        m.declare(&gam, 0.0, f64::INFINITY);
        let mut budget = vec![(gam.clone(), k as f64)];
        for s in spec.nodes() {
            let a = alpha_var(s, class);
            m.declare(&a, 0.0, f64::INFINITY);
            budget.push((a, 1.0));
            let b = beta_var(s, class);
            m.declare(&b, 0.0, f64::INFINITY);
            budget.push((b, 1.0));
        }
        budget.push((THETA.to_string(), -spec.capacity(class)));
        m.constrain(format!("load_{}", class.tag()), budget, Cmp::Le, 0.0);
        // d_{s, s+t} loads the origin edge with g^t(edge(-s))
        for s in spec.nodes() {
            let local = DirectedEdge::new(spec.neg(s), class);
            for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
                let dst = spec.add(s, t);
                m.constrain(
                    format!("dual_{}_s{}_{}_t{}_{}", class.tag(), s.x, s.y, t.x, t.y),
                    vec![
                        (alpha_var(s, class), 1.0),
                        (beta_var(dst, class), 1.0),
                        (gam.clone(), 1.0),
                        (names.name(t, local), -1.0),
                    ],
                    Cmp::Ge,
                    0.0,
                );
            }
        }
    }
    Ok(m)
}

/// Write the reduced oblivious LP and report its size.
pub fn export_reduced_oblivious_lp<W: Write>(
    spec: &TorusSpec,
    k: usize,
    opts: ObliviousLpOptions,
    sink: W,
) -> Result<LpCounts> {
    let m = reduced_oblivious_lp(spec, k, opts)?;
    m.write_lp(
        sink,
        &format!(
            "oblivious routing, {}x{} torus, c1={}, c2={}, k={k}",
            spec.rows, spec.cols, spec.cap_vertical, spec.cap_horizontal
        ),
    )
}

/// A point of the reduced oblivious LP built from an invariant policy: its
/// flows, `th` equal to its worst-case load, and optimal hose duals per class.
pub fn injection_assignment(
    policy: &OriginPolicy,
    k: usize,
    opts: ObliviousLpOptions,
) -> Result<BTreeMap<String, f64>> {
    let spec = *crate::Policy::spec(policy);
    let names = FlowNames::new(&spec, opts.dedupe_orbits);
    let mut values = BTreeMap::new();
    for t in spec.nodes().filter(|&t| t != Node::ORIGIN) {
        for &(idx, f) in policy.flows_to(t) {
            let e = spec.edge_at(idx);
            values.insert(names.name(t, e), f);
        }
    }
    let mut theta: f64 = 0.0;
    for class in load_classes(&spec) {
        let c = spec.capacity(class);
        let w = edge_weight_matrix(policy, DirectedEdge::new(Node::ORIGIN, class));
        let km = k_matching(&w, k);
        theta = theta.max(km.value);
        // weights are per unit capacity; the LP rows are in flow units
        for s in spec.nodes() {
            let i = spec.node_index(s);
            values.insert(alpha_var(s, class), km.alpha[i] * c);
            values.insert(beta_var(s, class), km.beta[i] * c);
        }
        values.insert(gamma_var(class), km.gamma * c);
    }
    values.insert(THETA.to_string(), theta);
    Ok(values)
}

/// Build the min-congestion LP routing exactly the demands in `d`.
pub fn opt_lp(d: &TrafficMatrix) -> Result<LpModel> {
    let spec = *d.spec();
    let mut m = LpModel {
        objective: vec![(THETA.to_string(), 1.0)],
        ..Default::default()
    };
    m.declare(THETA, 0.0, f64::INFINITY);
    let mut load: Vec<Vec<(String, f64)>> = vec![Vec::new(); spec.num_edges()];
    for (s, t, demand) in d.iter() {
        for e in spec.edges() {
            let v = pair_var(s, t, e);
            m.declare(&v, 0.0, 1.0);
            load[spec.edge_index(e)].push((v, demand));
        }
        for i in spec.nodes() {
            let mut terms = Vec::with_capacity(8);
            for dir in Direction::ALL {
                terms.push((pair_var(s, t, DirectedEdge::new(i, dir)), 1.0));
                terms.push((pair_var(s, t, DirectedEdge::new(spec.step(i, dir.negate()), dir)), -1.0));
            }
            let rhs = if i == s {
                1.0
            } else if i == t {
                -1.0
            } else {
                0.0
            };
            m.constrain(
                format!("cons_s{}_{}_t{}_{}_n{}_{}", s.x, s.y, t.x, t.y, i.x, i.y),
                terms,
                Cmp::Eq,
                rhs,
            );
        }
    }
    for e in spec.edges() {
        let mut terms = std::mem::take(&mut load[spec.edge_index(e)]);
        terms.push((THETA.to_string(), -spec.capacity(e.dir)));
        m.constrain(
            format!("cap_e{}_{}_{}", e.tail.x, e.tail.y, e.dir.tag()),
            terms,
            Cmp::Le,
            0.0,
        );
    }
    Ok(m)
}

pub fn export_opt_lp<W: Write>(d: &TrafficMatrix, sink: W) -> Result<LpCounts> {
    let spec = d.spec();
    opt_lp(d)?.write_lp(
        sink,
        &format!(
            "min-congestion routing of {} demands, {}x{} torus, c1={}, c2={}",
            d.len(),
            spec.rows,
            spec.cols,
            spec.cap_vertical,
            spec.cap_horizontal
        ),
    )
}

/// Assignment of the fixed-demand LP from a policy's flows, `th` set to the
/// policy's load on `d`.
pub fn opt_assignment(policy: &dyn crate::Policy, d: &TrafficMatrix) -> Result<BTreeMap<String, f64>> {
    let report = crate::eval::edge_loads(policy, d)?;
    let mut values = BTreeMap::new();
    for (s, t, _) in d.iter() {
        policy.visit_pair(s, t, &mut |e, f| {
            values.insert(pair_var(s, t, e), f);
        });
    }
    values.insert(THETA.to_string(), report.max_load);
    Ok(values)
}
