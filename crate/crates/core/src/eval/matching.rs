//! Maximum-weight bipartite matching with at most `k` edges.
//!
//! Solved as a min-cost flow of value `k` on
//! `S -> row (cap 1) -> col (cost -w) -> T (cap 1)` plus a zero-cost bypass
//! `S -> T` of capacity `k`, by successive shortest paths with potentials.

/// Optimal matching together with an optimal solution of the dual
/// `min sum(alpha) + sum(beta) + k gamma` s.t. `alpha_i + beta_j + gamma >= w_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct KMatching {
    pub value: f64,
    /// Matched `(row, col)` pairs, sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: f64,
}

impl KMatching {
    /// Largest violation of the dual constraints and the dual objective gap.
    pub fn dual_defect(&self, weights: &[Vec<f64>], k: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in weights.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                worst = worst.max(w - self.alpha[i] - self.beta[j] - self.gamma);
            }
        }
        let dual: f64 = self.alpha.iter().sum::<f64>() + self.beta.iter().sum::<f64>() + k as f64 * self.gamma;
        worst.max((dual - self.value).abs())
    }
}

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: f64,
    cost: f64,
}

struct Graph {
    arcs: Vec<Arc>,
    out: Vec<Vec<usize>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Graph {
            arcs: Vec::new(),
            out: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64, cost: f64) {
        self.out[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap, cost });
        self.out[v].push(self.arcs.len());
        self.arcs.push(Arc {
            to: u,
            cap: 0.0,
            cost: -cost,
        });
    }

    fn tail(&self, a: usize) -> usize {
        self.arcs[a ^ 1].to
    }

    /// Dense Dijkstra on reduced costs; returns distances and parent arcs.
    fn dijkstra(&self, s: usize, pot: &[f64]) -> (Vec<f64>, Vec<usize>) {
        let n = self.out.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut done = vec![false; n];
        dist[s] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for v in 0..n {
                if !done[v] && dist[v] < best {
                    best = dist[v];
                    u = v;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            for &a in &self.out[u] {
                let arc = self.arcs[a];
                if arc.cap <= 0.5 {
                    continue;
                }
                let reduced = (arc.cost + pot[u] - pot[arc.to]).max(0.0);
                if dist[u] + reduced < dist[arc.to] {
                    dist[arc.to] = dist[u] + reduced;
                    parent[arc.to] = a;
                }
            }
        }
        (dist, parent)
    }

    /// Shortest distances from `s` by Bellman-Ford over the residual graph.
    fn bellman_ford(&self, s: usize) -> Vec<f64> {
        let n = self.out.len();
        let mut dist = vec![f64::INFINITY; n];
        dist[s] = 0.0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if dist[u].is_infinite() {
                    continue;
                }
                for &a in &self.out[u] {
                    let arc = self.arcs[a];
                    if arc.cap > 0.5 && dist[u] + arc.cost < dist[arc.to] - 1e-12 {
                        dist[arc.to] = dist[u] + arc.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        dist
    }
}

/// Maximum total weight of a matching with at most `k` edges, and its edges.
pub fn k_matching_max(weights: &[Vec<f64>], k: usize) -> (f64, Vec<(usize, usize)>) {
    let m = k_matching(weights, k);
    (m.value, m.pairs)
}

/// [`k_matching_max`] with an optimal dual certificate.
pub fn k_matching(weights: &[Vec<f64>], k: usize) -> KMatching {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let s = 0;
    let t = 1;
    let row = |i: usize| 2 + i;
    let col = |j: usize| 2 + rows + j;
    let mut g = Graph::new(2 + rows + cols);
    let bypass = g.arcs.len();
    g.add(s, t, k as f64, 0.0);
    for i in 0..rows {
        g.add(s, row(i), 1.0, 0.0);
    }
    for (i, ws) in weights.iter().enumerate() {
        for (j, &w) in ws.iter().enumerate() {
            if w > 0.0 {
                g.add(row(i), col(j), 1.0, -w);
            }
        }
    }
    for j in 0..cols {
        g.add(col(j), t, 1.0, 0.0);
    }

    // the initial graph is a DAG, so feasible potentials come from one pass
    let mut pot = vec![0.0; g.out.len()];
    for j in 0..cols {
        pot[col(j)] = weights.iter().map(|ws| -ws[j]).fold(0.0, f64::min);
    }
    pot[t] = (0..cols).map(|j| pot[col(j)]).fold(0.0, f64::min);

    let mut sent = 0;
    while sent < k {
        let (dist, parent) = g.dijkstra(s, &pot);
        if dist[t].is_infinite() {
            break;
        }
        let mut v = t;
        let mut through_bypass = false;
        while v != s {
            let a = parent[v];
            through_bypass |= a == bypass;
            g.arcs[a].cap -= 1.0;
            g.arcs[a ^ 1].cap += 1.0;
            v = g.tail(a);
        }
        let far = dist.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max);
        for (p, d) in pot.iter_mut().zip(&dist) {
            *p += if d.is_finite() { *d } else { far };
        }
        sent += 1;
        if through_bypass {
            // every later augmentation is the bypass as well
            let rest = (k - sent) as f64;
            g.arcs[bypass].cap -= rest;
            g.arcs[bypass ^ 1].cap += rest;
            break;
        }
    }

    let mut pairs = Vec::new();
    let mut value = 0.0;
    for (i, w) in weights.iter().enumerate().take(rows) {
        for &a in &g.out[row(i)] {
            let arc = g.arcs[a];
            if a % 2 == 0 && arc.to >= col(0) && arc.cap < 0.5 {
                let j = arc.to - col(0);
                pairs.push((i, j));
                value += w[j];
            }
        }
    }
    pairs.sort_unstable();

    let phi = g.bellman_ford(s);
    // columns no residual arc reaches carry no positive weight
    let alpha = (0..rows).map(|i| (phi[row(i)] - phi[s]).max(0.0)).collect();
    let beta = (0..cols)
        .map(|j| {
            let c = phi[col(j)];
            if c.is_finite() {
                (phi[t] - c).max(0.0)
            } else {
                0.0
            }
        })
        .collect();
    let gamma = (phi[s] - phi[t]).max(0.0);
    KMatching {
        value,
        pairs,
        alpha,
        beta,
        gamma,
    }
}
