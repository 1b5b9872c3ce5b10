use super::ecmp::{ecmp_dense, shortest_path_counts};
use crate::policy::{sparse_from_dense, OriginPolicy};
use crate::torus::TorusSpec;
use crate::Result;

/// Which nodes serve as VLB intermediates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VlbIntermediates {
    /// Every node, each with weight `1 / NM`.
    All,
    /// Every node except the source, each with weight `1 / (NM - 1)`.
    ExcludeSource,
}

/// Two-phase Valiant load balancing with ECMP inside each phase, using
/// every node except the source as an intermediate.
pub fn build_vlb(spec: &TorusSpec) -> Result<OriginPolicy> {
    build_vlb_with(spec, VlbIntermediates::ExcludeSource)
}

pub fn build_vlb_with(spec: &TorusSpec, mode: VlbIntermediates) -> Result<OriginPolicy> {
    let counts = shortest_path_counts(spec);
    let ecmp: Vec<Vec<(usize, f64)>> = spec
        .nodes()
        .map(|m| sparse_from_dense(&ecmp_dense(spec, &counts, m)))
        .collect();
    let n = spec.num_nodes();
    let (first, weight) = match mode {
        VlbIntermediates::All => (0, 1.0 / n as f64),
        VlbIntermediates::ExcludeSource => (1, 1.0 / (n - 1) as f64),
    };
    super::build_invariant(spec, |t| {
        let mut flows = vec![0.0; spec.num_edges()];
        for mi in first..n {
            let m = spec.node_at(mi);
            for &(idx, f) in &ecmp[mi] {
                flows[idx] += weight * f;
            }
            let rest = spec.sub(t, m);
            for &(idx, f) in &ecmp[spec.node_index(rest)] {
                let e = spec.translate_edge(spec.edge_at(idx), m);
                flows[spec.edge_index(e)] += weight * f;
            }
        }
        Ok(flows)
    })
}
