//! Closed-form load bounds.
//!
//! All values are traffic per unit capacity, matching [`crate::eval`].

use std::collections::BTreeSet;

use crate::paths::max_flow;
use crate::torus::{Node, TorusSpec};
use crate::{Error, Result};

/// Load any routing must place on some edge: `sqrt(k) / 4`.
pub fn cut_lower_bound(k: usize) -> f64 {
    (k as f64).sqrt() / 4.0
}

/// [`cut_lower_bound`] restricted to `1 <= k <= N^2 / 4`.
pub fn cut_lower_bound_checked(n: usize, k: usize) -> Result<f64> {
    if k == 0 || 4 * k > n * n {
        return Err(Error::OutOfRegime(format!(
            "cut bound needs 1 <= k <= N^2/4, got k = {k}, N = {n}"
        )));
    }
    Ok(cut_lower_bound(k))
}

/// Largest `m` with `2 m^2 <= k`.
fn diamond_radius(k: usize) -> usize {
    let mut m = 0;
    while 2 * (m + 1) * (m + 1) <= k {
        m += 1;
    }
    m
}

/// Lower bound for automorphism-invariant policies: `sqrt(2k) / 4` when
/// `2k` is a perfect square, otherwise the interpolation between the two
/// neighbouring split-diamond sizes.
pub fn oblivious_lower_bound(k: usize) -> f64 {
    let m = diamond_radius(k);
    if 2 * m * m == k {
        return m as f64 / 2.0;
    }
    let alpha = (k - 2 * m * m) as f64 / (4 * m + 2) as f64;
    (m as f64 + alpha) / 2.0
}

/// The coarser bound `sqrt(2k') / 4` with `k' = 2 m^2 <= k`.
pub fn oblivious_lower_bound_floor(k: usize) -> f64 {
    diamond_radius(k) as f64 / 2.0
}

/// VLB on hotspot traffic: `(2 sqrt(k) / 4) (1 - k / N^2)`.
pub fn vlb_hotspot_lower_bound(n: usize, k: usize) -> f64 {
    let nn = (n * n) as f64;
    (2.0 * (k as f64).sqrt() / 4.0) * (1.0 - k as f64 / nn)
}

/// Worst-case load of LLB with stem radius `r`: `r/4 + k/(8r)`.
pub fn llb_load_upper(r: usize, k: usize) -> f64 {
    r as f64 / 4.0 + k as f64 / (8.0 * r as f64)
}

/// Integer radius minimizing [`llb_load_upper`]; the smaller on ties.
pub fn best_llb_radius(k: usize) -> usize {
    let mut best = 1;
    for r in 2..=k.max(1) {
        if llb_load_upper(r, k) < llb_load_upper(best, k) - 1e-12 {
            best = r;
        }
    }
    best
}

/// Load of VLB for dense traffic on an `N x N` torus.
pub fn vlb_dense_optimum(n: usize) -> f64 {
    n as f64 / 4.0
}

/// Normalized size `L = min(sqrt(c2/c1) N, sqrt(c1/c2) M)`.
pub fn normalized_size(spec: &TorusSpec) -> f64 {
    let (c1, c2) = (spec.cap_vertical, spec.cap_horizontal);
    ((c2 / c1).sqrt() * spec.rows as f64).min((c1 / c2).sqrt() * spec.cols as f64)
}

/// Bisection bandwidth from the closed form: a cut across the columns
/// severs `2N` horizontal links, one across the rows `2M` vertical links.
pub fn bisection_bandwidth(spec: &TorusSpec) -> f64 {
    let across_columns = 2.0 * spec.rows as f64 * spec.cap_horizontal;
    let across_rows = 2.0 * spec.cols as f64 * spec.cap_vertical;
    across_columns.min(across_rows)
}

/// Bisection bandwidth computed by max-flow between complementary halves
/// (left/right and top/bottom). Requires even dimensions.
pub fn bisection_by_max_flow(spec: &TorusSpec) -> Result<f64> {
    if spec.rows % 2 == 1 || spec.cols % 2 == 1 {
        return Err(Error::OddSizeUnsupported);
    }
    let caps = |e: crate::DirectedEdge| spec.capacity(e.dir);
    let half =
        |pred: &dyn Fn(Node) -> bool| -> (BTreeSet<Node>, BTreeSet<Node>) { spec.nodes().partition(|&u| pred(u)) };
    let (left, right) = half(&|u| u.x < spec.cols / 2);
    let (top, bottom) = half(&|u| u.y < spec.rows / 2);
    let a = max_flow(spec, &BTreeSet::new(), &left, &right, &caps)?.0;
    let b = max_flow(spec, &BTreeSet::new(), &top, &bottom, &caps)?.0;
    Ok(a.min(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `k <= L^2 / 2`
    Sparse,
    /// `L^2 / 2 < k <= NM / 2`
    Mid,
    /// `k > NM / 2`
    Dense,
}

/// Every bound that applies to a spec and sparsity level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub k: usize,
    pub regime: Regime,
    pub normalized_size: f64,
    pub bisection: f64,
    pub cut_lb: f64,
    pub oblivious_lb: f64,
    /// Square unit-capacity tori only.
    pub vlb_hotspot_lb: Option<f64>,
    pub llb_ub: Option<f64>,
    pub vlb_dense: Option<f64>,
    pub general_lb: f64,
    /// Achievable load, including `slack` in the sparse regime.
    pub general_ub: f64,
    /// Additive term `1 / min(c1, c2)` of the sparse upper bound.
    pub slack: f64,
}

pub fn general_torus_bounds(spec: &TorusSpec, k: usize) -> BoundSet {
    let (c1, c2) = (spec.cap_vertical, spec.cap_horizontal);
    let g = (c1 * c2).sqrt();
    let l = normalized_size(spec);
    let nm = (spec.rows * spec.cols) as f64;
    let kf = k as f64;
    let slack = 1.0 / c1.min(c2);
    let regime = if kf <= l * l / 2.0 + 1e-9 {
        Regime::Sparse
    } else if kf <= nm / 2.0 {
        Regime::Mid
    } else {
        Regime::Dense
    };
    let sparse = (2.0 * kf).sqrt() / (4.0 * g);
    let (general_lb, general_ub) = match regime {
        Regime::Sparse => (sparse, sparse + slack),
        Regime::Mid => (kf / (2.0 * l * g), kf / (2.0 * l * g)),
        Regime::Dense => (nm / (4.0 * l * g), nm / (4.0 * l * g)),
    };
    let unit_square = spec.is_square_symmetric() && c1 == 1.0;
    BoundSet {
        k,
        regime,
        normalized_size: l,
        bisection: bisection_bandwidth(spec),
        cut_lb: cut_lower_bound(k) / g,
        oblivious_lb: oblivious_lower_bound(k) / g,
        vlb_hotspot_lb: unit_square.then(|| vlb_hotspot_lower_bound(spec.rows, k)),
        llb_ub: unit_square.then(|| llb_load_upper(best_llb_radius(k), k)),
        vlb_dense: unit_square.then(|| vlb_dense_optimum(spec.rows)),
        general_lb,
        general_ub,
        slack,
    }
}
