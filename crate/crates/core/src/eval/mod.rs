//! Load evaluation: per-edge loads for a fixed demand, exact worst case
//! over the k-limited class, and seeded Monte Carlo summaries.

mod matching;

use std::io::Write;

use rayon::prelude::*;

pub use matching::{k_matching, k_matching_max, KMatching};

use crate::policy::Policy;
use crate::torus::{DirectedEdge, Direction, Node, TorusSpec};
use crate::traffic::TrafficMatrix;
use crate::{Error, Result};

/// Loads of every directed edge under one traffic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    spec: TorusSpec,
    /// Traffic per unit capacity, by edge index.
    pub per_edge: Vec<f64>,
    pub max_load: f64,
    pub argmax_edge: DirectedEdge,
    /// Demand-weighted mean number of hops.
    pub avg_hops: f64,
}

impl LoadReport {
    pub fn load(&self, e: DirectedEdge) -> f64 {
        self.per_edge[self.spec.edge_index(e)]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["edge_tail_x", "edge_tail_y", "dir", "load"])?;
        for e in self.spec.edges() {
            out.write_record([
                e.tail.x.to_string(),
                e.tail.y.to_string(),
                e.dir.label().to_string(),
                self.load(e).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Loads of `p` under demand `d`.
pub fn edge_loads(p: &dyn Policy, d: &TrafficMatrix) -> Result<LoadReport> {
    let spec = *p.spec();
    if *d.spec() != spec {
        return Err(Error::SpecMismatch);
    }
    let mut per_edge = vec![0.0; spec.num_edges()];
    let mut hops = 0.0;
    for (s, t, demand) in d.iter() {
        p.visit_pair(s, t, &mut |e, f| {
            per_edge[spec.edge_index(e)] += demand * f / spec.capacity(e.dir);
            hops += demand * f;
        });
    }
    let mut arg = 0;
    for (i, &v) in per_edge.iter().enumerate() {
        if v > per_edge[arg] {
            arg = i;
        }
    }
    let total = d.total();
    Ok(LoadReport {
        spec,
        max_load: per_edge[arg],
        argmax_edge: spec.edge_at(arg),
        avg_hops: if total > 0.0 { hops / total } else { 0.0 },
        per_edge,
    })
}

/// Worst k-sparse demand for a policy.
#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    pub value: f64,
    /// Unit demands attaining `value`.
    pub witness: TrafficMatrix,
    /// The edge whose load is `value` under the witness.
    pub edge: DirectedEdge,
}

/// `W[s][t] = f^{s,t}(e) / c(e)`, rows and columns by node index.
pub fn edge_weight_matrix(p: &dyn Policy, e: DirectedEdge) -> Vec<Vec<f64>> {
    let spec = *p.spec();
    let n = spec.num_nodes();
    let cap = spec.capacity(e.dir);
    let mut w = vec![vec![0.0; n]; n];
    if let Some(g) = p.as_origin() {
        // f^{s,s+t}(e) = g^t(e - s)
        for t in spec.nodes() {
            for &(idx, f) in g.flows_to(t) {
                let local = spec.edge_at(idx);
                if local.dir != e.dir {
                    continue;
                }
                let s = spec.sub(e.tail, local.tail);
                w[spec.node_index(s)][spec.node_index(spec.add(s, t))] += f / cap;
            }
        }
    } else {
        for (si, s) in spec.nodes().enumerate() {
            for (ti, t) in spec.nodes().enumerate() {
                if s != t {
                    w[si][ti] = p.pair_flow(s, t, e) / cap;
                }
            }
        }
    }
    w
}

/// Edges whose worst case covers every edge: a representative per
/// reflection class for invariant origin policies, the four origin edges for
/// other origin policies, and every edge otherwise.
pub fn candidate_edges(p: &dyn Policy) -> Vec<DirectedEdge> {
    let spec = *p.spec();
    let at_origin = |d: Direction| DirectedEdge::new(Node::ORIGIN, d);
    match p.as_origin() {
        Some(g) if g.check_reflection_invariance() => {
            if spec.is_square_symmetric() {
                vec![at_origin(Direction::PosVert)]
            } else {
                vec![at_origin(Direction::PosVert), at_origin(Direction::PosHor)]
            }
        }
        Some(_) => Direction::ALL.iter().map(|&d| at_origin(d)).collect(),
        None => spec.edges().collect(),
    }
}

/// Worst load on edge `e` over the k-limited class, with its witness.
pub fn worst_case_on_edge(p: &dyn Policy, k: usize, e: DirectedEdge) -> Result<WorstCaseResult> {
    let spec = *p.spec();
    let w = edge_weight_matrix(p, e);
    let (value, pairs) = k_matching_max(&w, k);
    let mut witness = TrafficMatrix::new(spec);
    for (si, ti) in pairs {
        witness.set(spec.node_at(si), spec.node_at(ti), 1.0)?;
    }
    Ok(WorstCaseResult {
        value,
        witness,
        edge: e,
    })
}

/// Maximum over the k-limited class of the maximum edge load.
pub fn worst_case_load(p: &dyn Policy, k: usize) -> Result<WorstCaseResult> {
    if k == 0 {
        return Err(Error::OutOfRegime("k must be positive".into()));
    }
    let results = candidate_edges(p)
        .into_par_iter()
        .map(|e| worst_case_on_edge(p, k, e))
        .collect::<Result<Vec<_>>>()?;
    let mut best: Option<WorstCaseResult> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| r.value > b.value + 1e-12) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one candidate edge"))
}

/// Mean, sample standard deviation and range of one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    pub fn of(values: &[f64]) -> Stats {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Stats {
            mean,
            std: var.sqrt(),
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSummary {
    pub trials: usize,
    pub base_seed: u64,
    pub max_load: Stats,
    pub avg_hops: Stats,
}

impl TrialSummary {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["metric", "mean", "std", "min", "max", "trials", "seed"])?;
        for (name, s) in [("max_load", self.max_load), ("avg_hops", self.avg_hops)] {
            out.write_record([
                name.to_string(),
                s.mean.to_string(),
                s.std.to_string(),
                s.min.to_string(),
                s.max.to_string(),
                self.trials.to_string(),
                self.base_seed.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Evaluate `p` on `trials` generated matrices; trial `i` uses seed
/// `base_seed + i`. Results do not depend on the thread count.
pub fn run_trials<G>(p: &dyn Policy, generator: G, trials: usize, base_seed: u64) -> Result<TrialSummary>
where
    G: Fn(u64) -> Result<TrafficMatrix> + Sync,
{
    if trials == 0 {
        return Err(Error::OutOfRegime("at least one trial is required".into()));
    }
    let reports = (0..trials)
        .into_par_iter()
        .map(|i| edge_loads(p, &generator(base_seed.wrapping_add(i as u64))?))
        .collect::<Result<Vec<_>>>()?;
    let loads: Vec<f64> = reports.iter().map(|r| r.max_load).collect();
    let hops: Vec<f64> = reports.iter().map(|r| r.avg_hops).collect();
    Ok(TrialSummary {
        trials,
        base_seed,
        max_load: Stats::of(&loads),
        avg_hops: Stats::of(&hops),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::OriginPolicy;
    use crate::schemes::build_ecmp;

    #[test]
    fn zero_traffic_has_zero_load() {
        let spec = TorusSpec::square(4).unwrap();
        let g = build_ecmp(&spec).unwrap();
        let r = edge_loads(&g, &TrafficMatrix::new(spec)).unwrap();
        assert_eq!(r.max_load, 0.0);
        assert_eq!(r.avg_hops, 0.0);
    }

    #[test]
    fn spec_mismatch_is_rejected() {
        let g = OriginPolicy::new(TorusSpec::square(4).unwrap());
        let d = TrafficMatrix::new(TorusSpec::square(5).unwrap());
        assert!(matches!(edge_loads(&g, &d), Err(Error::SpecMismatch)));
    }

    #[test]
    fn single_demand_worst_case() {
        let spec = TorusSpec::square(6).unwrap();
        let g = build_ecmp(&spec).unwrap();
        let wc = worst_case_load(&g, 1).unwrap();
        assert!((wc.value - 1.0).abs() < 1e-12);
        assert_eq!(wc.witness.len(), 1);
    }

    #[test]
    fn representative_edges_agree_with_full_scan() {
        let spec = TorusSpec::square(6).unwrap();
        let g = build_ecmp(&spec).unwrap();
        let fast = worst_case_load(&g, 3).unwrap().value;
        let full = spec
            .edges()
            .map(|e| worst_case_on_edge(&g, 3, e).unwrap().value)
            .fold(0.0, f64::max);
        assert!((fast - full).abs() < 1e-9);
    }
}
