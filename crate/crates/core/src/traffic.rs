//! Traffic matrices, hose-class membership and the worst-case generators.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::torus::{Automorphism, Node, TorusSpec};
use crate::{Error, Result};

const TOL: f64 = 1e-9;

/// Sparse nonnegative demands keyed by absolute `(source, destination)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficMatrix {
    spec: TorusSpec,
    entries: BTreeMap<(Node, Node), f64>,
}

impl TrafficMatrix {
    pub fn new(spec: TorusSpec) -> Self {
        TrafficMatrix {
            spec,
            entries: BTreeMap::new(),
        }
    }

    pub fn spec(&self) -> &TorusSpec {
        &self.spec
    }

    /// Set the demand from `s` to `t`. A zero demand removes the entry.
    pub fn set(&mut self, s: Node, t: Node, demand: f64) -> Result<()> {
        if !self.spec.contains(s) || !self.spec.contains(t) {
            return Err(Error::InvalidNode {
                x: s.x.max(t.x) as i64,
                y: s.y.max(t.y) as i64,
                rows: self.spec.rows,
                cols: self.spec.cols,
            });
        }
        if s == t {
            return Err(Error::Parse(format!("self demand at {s}")));
        }
        if !(demand >= 0.0 && demand.is_finite()) {
            return Err(Error::Parse(format!("invalid demand {demand}")));
        }
        if demand == 0.0 {
            self.entries.remove(&(s, t));
        } else {
            self.entries.insert((s, t), demand);
        }
        Ok(())
    }

    /// Add to the demand from `s` to `t`.
    pub fn add(&mut self, s: Node, t: Node, demand: f64) -> Result<()> {
        let current = self.get(s, t);
        self.set(s, t, current + demand)
    }

    pub fn get(&self, s: Node, t: Node) -> f64 {
        self.entries.get(&(s, t)).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Node, Node, f64)> + '_ {
        self.entries.iter().map(|(&(s, t), &d)| (s, t, d))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.entries.values().sum()
    }

    pub fn sources(&self) -> BTreeSet<Node> {
        self.entries.keys().map(|&(s, _)| s).collect()
    }

    pub fn sinks(&self) -> BTreeSet<Node> {
        self.entries.keys().map(|&(_, t)| t).collect()
    }

    /// Write as CSV with header `src_x,src_y,dst_x,dst_y,demand`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["src_x", "src_y", "dst_x", "dst_y", "demand"])?;
        for (s, t, d) in self.iter() {
            out.write_record([
                s.x.to_string(),
                s.y.to_string(),
                t.x.to_string(),
                t.y.to_string(),
                d.to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(spec: TorusSpec, r: R) -> Result<Self> {
        let mut input = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(r);
        let headers = input.headers()?.clone();
        let expected = ["src_x", "src_y", "dst_x", "dst_y", "demand"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::Parse(format!("unexpected header {headers:?}")));
        }
        let mut d = TrafficMatrix::new(spec);
        for record in input.records() {
            let record = record?;
            let field =
                |i: usize| -> Result<&str> { record.get(i).ok_or_else(|| Error::Parse("short traffic row".into())) };
            let int = |i: usize| -> Result<i64> {
                field(i)?
                    .parse::<i64>()
                    .map_err(|e| Error::Parse(format!("column {}: {e}", expected[i])))
            };
            let s = spec.checked_node(int(0)?, int(1)?)?;
            let t = spec.checked_node(int(2)?, int(3)?)?;
            let demand = field(4)?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("demand: {e}")))?;
            d.add(s, t, demand)?;
        }
        Ok(d)
    }
}

/// Membership of a matrix in the hose, k-limited and k-sparse classes.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficClassReport {
    pub is_hose: bool,
    pub is_k_limited: bool,
    pub is_k_sparse: bool,
    pub total: f64,
    pub num_sources: usize,
    pub num_sinks: usize,
    pub violations: Vec<String>,
}

pub fn classify(d: &TrafficMatrix, k: usize) -> TrafficClassReport {
    let mut out_rate: BTreeMap<Node, f64> = BTreeMap::new();
    let mut in_rate: BTreeMap<Node, f64> = BTreeMap::new();
    for (s, t, v) in d.iter() {
        *out_rate.entry(s).or_default() += v;
        *in_rate.entry(t).or_default() += v;
    }
    let mut violations = Vec::new();
    for (s, rate) in &out_rate {
        if *rate > 1.0 + TOL {
            violations.push(format!("source {s} sends {rate} > 1"));
        }
    }
    for (t, rate) in &in_rate {
        if *rate > 1.0 + TOL {
            violations.push(format!("sink {t} receives {rate} > 1"));
        }
    }
    let is_hose = violations.is_empty();
    let total = d.total();
    let total_ok = total <= k as f64 + TOL;
    if !total_ok {
        violations.push(format!("total demand {total} exceeds k = {k}"));
    }
    let counts_ok = out_rate.len() <= k && in_rate.len() <= k;
    if out_rate.len() > k {
        violations.push(format!("{} sources exceed k = {k}", out_rate.len()));
    }
    if in_rate.len() > k {
        violations.push(format!("{} sinks exceed k = {k}", in_rate.len()));
    }
    TrafficClassReport {
        is_hose,
        is_k_limited: is_hose && total_ok,
        is_k_sparse: is_hose && counts_ok,
        total,
        num_sources: out_rate.len(),
        num_sinks: in_rate.len(),
        violations,
    }
}

/// Antipodal offset `(cols/2, rows/2)`.
pub fn antipode(spec: &TorusSpec) -> Node {
    Node::new(spec.cols / 2, spec.rows / 2)
}

/// Source set of the split-diamond matrix.
pub fn split_diamond_sources(spec: &TorusSpec, r: usize) -> Result<BTreeSet<Node>> {
    if !spec.is_square_symmetric() {
        return Err(Error::NotSquare);
    }
    if spec.rows % 2 == 1 {
        return Err(Error::OddSizeUnsupported);
    }
    let n = spec.rows;
    if 4 * r * r > n * n {
        return Err(Error::OutOfRegime(format!(
            "2r^2 = {} exceeds N^2/2 = {}",
            2 * r * r,
            n * n / 2
        )));
    }
    let far = antipode(spec);
    let half = n / 2;
    Ok(spec
        .nodes()
        .filter(|j| j.y < half)
        .filter(|&j| spec.hop_distance(j, Node::ORIGIN) < r || spec.hop_distance(j, far) <= r)
        .collect())
}

/// Split-diamond traffic: `2r^2` unit demands, each to the antipodal offset.
pub fn gen_split_diamond(spec: &TorusSpec, r: usize) -> Result<TrafficMatrix> {
    let far = antipode(spec);
    let mut d = TrafficMatrix::new(*spec);
    for s in split_diamond_sources(spec, r)? {
        d.set(s, spec.add(s, far), 1.0)?;
    }
    Ok(d)
}

/// Hotspot traffic: `k` sources filling a block `floor(sqrt(k))` columns wide
/// in row-major order from `origin`, each paired with the node the block
/// width further along the horizontal axis.
pub fn gen_hotspot(spec: &TorusSpec, k: usize, origin: Node) -> Result<TrafficMatrix> {
    let mut d = TrafficMatrix::new(*spec);
    if k == 0 {
        return Ok(d);
    }
    if 2 * k > spec.num_nodes() {
        return Err(Error::DoesNotFit(format!(
            "k = {k} exceeds half of the {} nodes",
            spec.num_nodes()
        )));
    }
    let width = (k as f64).sqrt().floor() as usize;
    let height = k.div_ceil(width);
    if 2 * width > spec.cols || height > spec.rows {
        return Err(Error::DoesNotFit(format!(
            "two {width}x{height} blocks on a {}x{} torus",
            spec.rows, spec.cols
        )));
    }
    for i in 0..k {
        let s = spec.add(origin, Node::new(i % width, i / width));
        d.set(s, spec.add(s, Node::new(width, 0)), 1.0)?;
    }
    Ok(d)
}

/// `k` distinct sources and `k` distinct sinks drawn uniformly, joined by a
/// uniform random pairing. Draws that pair a node with itself are redrawn.
pub fn gen_random_sparse(spec: &TorusSpec, k: usize, seed: u64) -> Result<TrafficMatrix> {
    let n = spec.num_nodes();
    if k > n {
        return Err(Error::OutOfRegime(format!("k = {k} exceeds {n} nodes")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let sources = index::sample(&mut rng, n, k).into_vec();
        let mut sinks = index::sample(&mut rng, n, k).into_vec();
        sinks.shuffle(&mut rng);
        if sources.iter().zip(&sinks).any(|(a, b)| a == b) {
            continue;
        }
        let mut d = TrafficMatrix::new(*spec);
        for (a, b) in sources.into_iter().zip(sinks) {
            d.set(spec.node_at(a), spec.node_at(b), 1.0)?;
        }
        return Ok(d);
    }
}

/// The two weighted split matrices for an `N x M` torus with hop weights
/// `lambda_v`, `lambda_h`. Sources lie in the weighted ball of radius `r`
/// around the origin (strict) or around `t* = (M/2, N/2)` (inclusive), cut to
/// the lower half (`d1`) or the left half (`d2`); all send one unit to `s + t*`.
pub fn gen_generalized_split(
    spec: &TorusSpec,
    lambda_v: f64,
    lambda_h: f64,
    r: f64,
) -> Result<(TrafficMatrix, TrafficMatrix)> {
    if spec.rows % 2 == 1 || spec.cols % 2 == 1 {
        return Err(Error::OddSizeUnsupported);
    }
    if !(lambda_v > 0.0 && lambda_h > 0.0) {
        return Err(Error::OutOfRegime("weights must be positive".into()));
    }
    let far = antipode(spec);
    let in_balls = |s: Node| {
        spec.weighted_distance(Node::ORIGIN, s, lambda_v, lambda_h) < r - TOL
            || spec.weighted_distance(far, s, lambda_v, lambda_h) <= r + TOL
    };
    let mut d1 = TrafficMatrix::new(*spec);
    let mut d2 = TrafficMatrix::new(*spec);
    for s in spec.nodes().filter(|&s| in_balls(s)) {
        if s.y < spec.rows / 2 {
            d1.set(s, spec.add(s, far), 1.0)?;
        }
        if s.x < spec.cols / 2 {
            d2.set(s, spec.add(s, far), 1.0)?;
        }
    }
    Ok((d1, d2))
}

/// `d'[s, t] = d[phi(s), phi(t)]`.
pub fn transform_traffic(d: &TrafficMatrix, phi: &Automorphism) -> Result<TrafficMatrix> {
    let spec = *d.spec();
    phi.check(&spec)?;
    let inv = phi.inverse(&spec);
    let mut out = TrafficMatrix::new(spec);
    for (a, b, v) in d.iter() {
        out.set(inv.apply_unchecked(&spec, a), inv.apply_unchecked(&spec, b), v)?;
    }
    Ok(out)
}
