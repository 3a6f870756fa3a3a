//! Per-node influence measures.
//!
//! Shortest-path measures (closeness, betweenness) and the degree family run
//! on the symmetrized unweighted skeleton; the linear-algebra family
//! (Bonacich, eigenvector, PageRank) runs on the directed 0/1 adjacency, so an
//! edge i -> j confers standing on j through its in-links. Rumor centrality
//! scores candidate sources of an observed infected set.

use serde_json::json;
use thiserror::Error;

use crate::graph::{Graph, Matrix};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Error)]
pub enum CentralityError {
    #[error("graph has no edges")]
    EdgelessGraph,
    #[error("attenuation alpha={alpha} exceeds 1/spectral-radius={limit}")]
    AttenuationTooLarge { alpha: f64, limit: f64 },
    #[error("linear system is singular")]
    SingularSystem,
    #[error("no convergence within {max_iter} iterations")]
    NoConvergence { max_iter: usize },
    #[error("damping factor {0} must lie strictly inside (0, 1)")]
    InvalidDamping(f64),
    #[error("infected set is empty")]
    EmptyInfectedSet,
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node {0} appears twice in the infected set")]
    DuplicateInfected(usize),
    #[error("infected set does not induce a connected subgraph")]
    DisconnectedInfectedSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
    Total,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::In => "in",
            Direction::Out => "out",
            Direction::Total => "total",
        }
    }
}

/// Which measure produced a score vector, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure {
    Degree(Direction),
    HIndex,
    Closeness,
    Betweenness,
    Bonacich { alpha: f64, beta: f64 },
    Eigenvector,
    PageRank { damping: f64 },
    Rumor { infected: Vec<usize> },
}

impl Measure {
    pub fn name(&self) -> &'static str {
        match self {
            Measure::Degree(_) => "degree",
            Measure::HIndex => "h-index",
            Measure::Closeness => "closeness",
            Measure::Betweenness => "betweenness",
            Measure::Bonacich { .. } => "bonacich",
            Measure::Eigenvector => "eigenvector",
            Measure::PageRank { .. } => "pagerank",
            Measure::Rumor { .. } => "rumor",
        }
    }

    pub fn params(&self) -> serde_json::Value {
        match self {
            Measure::Degree(d) => json!({ "direction": d.as_str() }),
            Measure::Bonacich { alpha, beta } => json!({ "alpha": alpha, "beta": beta }),
            Measure::PageRank { damping } => json!({ "damping": damping }),
            Measure::Rumor { infected } => json!({ "infected": infected }),
            _ => json!({}),
        }
    }
}

/// A score per node, in node-id order.
#[derive(Debug, Clone)]
pub struct CentralityScores {
    pub measure: Measure,
    pub values: Vec<f64>,
}

impl CentralityScores {
    /// Highest-scoring node, ties broken by the lowest id.
    pub fn argmax(&self) -> Option<usize> {
        crate::util::argmax_tie_lowest(&self.values)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "measure": self.measure.name(),
            "params": self.measure.params(),
            "scores": self.values,
        })
    }
}

/// Incident edge counts. `Total` counts distinct neighbors in the symmetrized
/// skeleton, so an undirected edge stored as two arcs counts once.
pub fn degree(g: &Graph, direction: Direction) -> CentralityScores {
    let values = (0..g.node_count())
        .map(|i| match direction {
            Direction::In => g.in_degree(i) as f64,
            Direction::Out => g.out_degree(i) as f64,
            Direction::Total => g.sym_degree(i) as f64,
        })
        .collect();
    CentralityScores { measure: Measure::Degree(direction), values }
}

/// Largest h such that the node has at least h neighbors of (total) degree
/// at least h.
pub fn h_index(g: &Graph) -> CentralityScores {
    let deg: Vec<usize> = (0..g.node_count()).map(|i| g.sym_degree(i)).collect();
    let values = (0..g.node_count())
        .map(|i| {
            let mut nd: Vec<usize> = g.sym_neighbors(i).iter().map(|&j| deg[j]).collect();
            nd.sort_unstable_by(|a, b| b.cmp(a));
            let mut h = 0;
            for (rank, &d) in nd.iter().enumerate() {
                if d > rank {
                    h = rank + 1;
                } else {
                    break;
                }
            }
            h as f64
        })
        .collect();
    CentralityScores { measure: Measure::HIndex, values }
}

/// Closeness on the symmetrized skeleton: (number reachable) / (sum of BFS
/// distances to them); 0 for nodes that reach nothing.
pub fn closeness(g: &Graph) -> CentralityScores {
    let values = (0..g.node_count())
        .map(|i| {
            let dist = g.bfs_distances(i);
            let mut reachable = 0usize;
            let mut total = 0usize;
            for (j, &d) in dist.iter().enumerate() {
                if j != i && d != usize::MAX {
                    reachable += 1;
                    total += d;
                }
            }
            if total == 0 {
                0.0
            } else {
                reachable as f64 / total as f64
            }
        })
        .collect();
    CentralityScores { measure: Measure::Closeness, values }
}

/// Brandes betweenness on the symmetrized skeleton. Endpoints are excluded
/// and each unordered pair is counted once.
pub fn betweenness(g: &Graph) -> CentralityScores {
    let n = g.node_count();
    let mut score = vec![0.0; n];
    for s in 0..n {
        let mut stack = Vec::with_capacity(n);
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut sigma = vec![0.0; n];
        let mut dist = vec![-1i64; n];
        sigma[s] = 1.0;
        dist[s] = 0;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            stack.push(u);
            for &v in g.sym_neighbors(u) {
                if dist[v] < 0 {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                    preds[v].push(u);
                }
            }
        }
        let mut delta = vec![0.0; n];
        while let Some(w) = stack.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                score[w] += delta[w];
            }
        }
    }
    // each unordered pair was accumulated from both endpoints
    for x in score.iter_mut() {
        *x /= 2.0;
    }
    CentralityScores { measure: Measure::Betweenness, values: score }
}

/// Bonacich centrality: solves (I - alpha A^T) c = beta 1, so that
/// c_i = beta + alpha * sum_j A_ji c_j on the directed 0/1 adjacency.
/// Requires alpha < 1 / spectral_radius(A).
pub fn bonacich(g: &Graph, alpha: f64, beta: f64) -> Result<CentralityScores, CentralityError> {
    let rho = g.spectral_radius();
    if rho > 0.0 && alpha >= 1.0 / rho - 1e-12 {
        return Err(CentralityError::AttenuationTooLarge { alpha, limit: 1.0 / rho });
    }
    let n = g.node_count();
    let mut m = Matrix::identity(n, n);
    for e in g.edges() {
        // (A^T)[i][j] = A[j][i]
        m[(e.dst, e.src)] -= alpha;
    }
    let rhs = nalgebra::DVector::from_element(n, beta);
    let c = m.lu().solve(&rhs).ok_or(CentralityError::SingularSystem)?;
    Ok(CentralityScores {
        measure: Measure::Bonacich { alpha, beta },
        values: c.iter().copied().collect(),
    })
}

/// Dominant eigenvector of A^T by (shifted) power iteration, normalized to
/// unit sum. Converged when the residual ||A^T v - lambda v||_inf <= tol.
pub fn eigenvector_centrality(
    g: &Graph,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityScores, CentralityError> {
    if g.edge_count() == 0 {
        return Err(CentralityError::EdgelessGraph);
    }
    let n = g.node_count();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..max_iter {
        // w = A^T v
        let mut w = vec![0.0; n];
        for e in g.edges() {
            w[e.dst] += v[e.src];
        }
        let vv: f64 = v.iter().map(|x| x * x).sum();
        let wv: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        let lambda = wv / vv;
        let resid = w.iter().zip(&v).map(|(a, b)| (a - lambda * b).abs()).fold(0.0_f64, f64::max);
        if resid <= tol && lambda > 0.0 {
            let sum: f64 = v.iter().sum();
            let values = v.iter().map(|x| x / sum).collect();
            return Ok(CentralityScores { measure: Measure::Eigenvector, values });
        }
        // shift by the identity to damp periodic structure
        let mut next: Vec<f64> = w.iter().zip(&v).map(|(a, b)| a + b).collect();
        let norm: f64 = next.iter().sum();
        if norm <= 0.0 {
            return Err(CentralityError::NoConvergence { max_iter });
        }
        for x in next.iter_mut() {
            *x /= norm;
        }
        v = next;
    }
    Err(CentralityError::NoConvergence { max_iter })
}

/// PageRank with uniform teleportation and dangling mass redistributed
/// uniformly. The result sums to 1.
pub fn pagerank(
    g: &Graph,
    damping: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityScores, CentralityError> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(CentralityError::InvalidDamping(damping));
    }
    let n = g.node_count();
    let nf = n as f64;
    let mut x = vec![1.0 / nf; n];
    for _ in 0..max_iter {
        let mut next = vec![0.0; n];
        let mut dangling = 0.0;
        for (i, &xi) in x.iter().enumerate() {
            let out = g.out_degree(i);
            if out == 0 {
                dangling += xi;
            } else {
                let share = xi / out as f64;
                for &(j, _, _) in g.out_neighbors(i) {
                    next[j] += share;
                }
            }
        }
        let base = (1.0 - damping) / nf + damping * dangling / nf;
        for v in next.iter_mut() {
            *v = damping * *v + base;
        }
        let sum: f64 = next.iter().sum();
        for v in next.iter_mut() {
            *v /= sum;
        }
        let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if diff <= tol {
            return Ok(CentralityScores { measure: Measure::PageRank { damping }, values: x });
        }
    }
    Err(CentralityError::NoConvergence { max_iter })
}

/// Rumor centrality of each candidate source in an observed infected set,
/// reported as log-counts of infection orderings.
///
/// On trees the count is exact: R(v) = k! / prod_u T_u(v) with T_u the
/// subtree sizes rooted at v. On non-trees the BFS tree of the candidate is
/// used, which keeps the ranking useful but is no longer an exact count.
/// Nodes outside the infected set score 0.
pub fn rumor_centrality(
    g: &Graph,
    infected: &[usize],
) -> Result<CentralityScores, CentralityError> {
    if infected.is_empty() {
        return Err(CentralityError::EmptyInfectedSet);
    }
    let n = g.node_count();
    let mut in_set = vec![false; n];
    for &v in infected {
        if v >= n {
            return Err(CentralityError::NodeOutOfRange { node: v, n });
        }
        if in_set[v] {
            return Err(CentralityError::DuplicateInfected(v));
        }
        in_set[v] = true;
    }
    let k = infected.len();

    // induced symmetrized subgraph, neighbors ascending
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|u| {
            if !in_set[u] {
                return Vec::new();
            }
            g.sym_neighbors(u).iter().copied().filter(|&v| in_set[v]).collect()
        })
        .collect();

    // connectivity check
    let start = infected.iter().copied().min().unwrap();
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    let mut visited = 1usize;
    let mut induced_edges = 0usize;
    while let Some(u) = stack.pop() {
        induced_edges += adj[u].len();
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                visited += 1;
                stack.push(v);
            }
        }
    }
    if visited != k {
        return Err(CentralityError::DisconnectedInfectedSet);
    }
    let is_tree = induced_edges / 2 == k - 1;

    let log_k_fact: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    let mut values = vec![0.0; n];
    for &root in infected {
        // spanning tree rooted at root: the induced tree itself, or the BFS
        // tree of the candidate on non-trees
        let mut parent = vec![usize::MAX; n];
        let mut order = Vec::with_capacity(k);
        let mut mark = vec![false; n];
        mark[root] = true;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &adj[u] {
                if !mark[v] {
                    mark[v] = true;
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        debug_assert_eq!(order.len(), k);
        let _ = is_tree; // tree and BFS-tree paths coincide on trees
        let mut subtree = vec![1usize; n];
        for &u in order.iter().rev() {
            if parent[u] != usize::MAX {
                subtree[parent[u]] += subtree[u];
            }
        }
        let log_r = log_k_fact - order.iter().map(|&u| (subtree[u] as f64).ln()).sum::<f64>();
        values[root] = log_r;
    }
    Ok(CentralityScores { measure: Measure::Rumor { infected: infected.to_vec() }, values })
}
