//! Directed, rate-weighted network representation plus file ingestion and
//! synthetic generators.
//!
//! Edges carry a nonnegative interaction rate (events per unit time). The
//! structural analytics (shortest paths, Laplacian, modularity) operate on the
//! symmetrized 0/1 skeleton, while the dynamics modules consume the rates
//! directly. A [`Graph`] is immutable once built and safe to share across
//! threads.

use std::collections::HashMap;
use std::io::BufRead;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::Partition;
use crate::rng;

/// Dense square real matrix, dimension = node count when derived from a graph.
pub type Matrix = nalgebra::DMatrix<f64>;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least one node")]
    Empty,
    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {node}")]
    SelfLoop { node: usize },
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: usize, dst: usize },
    #[error("negative rate {rate} on edge {src} -> {dst}")]
    NegativeRate { src: usize, dst: usize, rate: f64 },
    #[error("line {line}: {message}")]
    ParseLine { line: usize, message: String },
    #[error("invalid probabilities: need 0 <= p_out < p_in <= 1, got p_in={p_in}, p_out={p_out}")]
    InvalidProbabilities { p_in: f64, p_out: f64 },
    #[error("regular tree needs degree >= 1")]
    InvalidTreeDegree,
    #[error("read error: {0}")]
    Io(#[from] std::io::Error),
}

/// A single directed edge with its interaction rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    labels: Option<Vec<String>>,
    edges: Vec<Edge>,
    /// Per node: (neighbor, rate, edge index), sorted by neighbor.
    out_adj: Vec<Vec<(usize, f64, usize)>>,
    in_adj: Vec<Vec<(usize, f64, usize)>>,
    /// Symmetrized neighbor lists (edge in either direction), sorted, deduped.
    sym_adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Build from explicit rated edges. Node ids must be `0..n`.
    pub fn from_rated_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut seen = HashMap::new();
        let mut list = Vec::with_capacity(edges.len());
        for &(src, dst, rate) in edges {
            if src >= n {
                return Err(GraphError::NodeOutOfRange { node: src, n });
            }
            if dst >= n {
                return Err(GraphError::NodeOutOfRange { node: dst, n });
            }
            if src == dst {
                return Err(GraphError::SelfLoop { node: src });
            }
            if rate.is_nan() || rate < 0.0 {
                return Err(GraphError::NegativeRate { src, dst, rate });
            }
            if seen.insert((src, dst), ()).is_some() {
                return Err(GraphError::DuplicateEdge { src, dst });
            }
            list.push(Edge { src, dst, rate });
        }
        Ok(Self::assemble(n, None, list))
    }

    /// Build from unit-rate edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let rated: Vec<(usize, usize, f64)> = edges.iter().map(|&(s, d)| (s, d, 1.0)).collect();
        Self::from_rated_edges(n, &rated)
    }

    fn assemble(n: usize, labels: Option<Vec<String>>, edges: Vec<Edge>) -> Self {
        let mut out_adj = vec![Vec::new(); n];
        let mut in_adj = vec![Vec::new(); n];
        let mut sym_adj = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            out_adj[e.src].push((e.dst, e.rate, idx));
            in_adj[e.dst].push((e.src, e.rate, idx));
            sym_adj[e.src].push(e.dst);
            sym_adj[e.dst].push(e.src);
        }
        for v in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            v.sort_unstable_by_key(|&(nbr, _, _)| nbr);
        }
        for v in sym_adj.iter_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Graph { n, labels, edges, out_adj, in_adj, sym_adj }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Original label of a node, falling back to its id.
    pub fn label(&self, node: usize) -> String {
        match &self.labels {
            Some(l) => l[node].clone(),
            None => node.to_string(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.n).map(|i| self.label(i)).collect()
    }

    /// Out-neighbors as (neighbor, rate, edge index), sorted by neighbor.
    pub fn out_neighbors(&self, node: usize) -> &[(usize, f64, usize)] {
        &self.out_adj[node]
    }

    /// In-neighbors as (neighbor, rate, edge index), sorted by neighbor.
    pub fn in_neighbors(&self, node: usize) -> &[(usize, f64, usize)] {
        &self.in_adj[node]
    }

    /// Neighbors in the symmetrized skeleton (edge in either direction).
    pub fn sym_neighbors(&self, node: usize) -> &[usize] {
        &self.sym_adj[node]
    }

    pub fn out_degree(&self, node: usize) -> usize {
        self.out_adj[node].len()
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.in_adj[node].len()
    }

    /// Number of distinct neighbors in the symmetrized skeleton.
    pub fn sym_degree(&self, node: usize) -> usize {
        self.sym_adj[node].len()
    }

    /// Number of edges in the symmetrized skeleton (unordered pairs).
    pub fn sym_edge_count(&self) -> usize {
        self.sym_adj.iter().map(|v| v.len()).sum::<usize>() / 2
    }

    pub fn rate(&self, src: usize, dst: usize) -> Option<f64> {
        self.out_adj[src]
            .binary_search_by_key(&dst, |&(nbr, _, _)| nbr)
            .ok()
            .map(|i| self.out_adj[src][i].1)
    }

    /// Dense weighted adjacency: `A[(i, j)]` = rate of edge i -> j, 0 if absent.
    pub fn adjacency(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src, e.dst)] = e.rate;
        }
        a
    }

    /// Dense 0/1 adjacency of the directed structure.
    pub fn adjacency_unweighted(&self) -> Matrix {
        let mut a = Matrix::zeros(self.n, self.n);
        for e in &self.edges {
            a[(e.src, e.dst)] = 1.0;
        }
        a
    }

    /// Unnormalized Laplacian L = D - A of the symmetrized 0/1 skeleton.
    /// Rows sum to zero; positive semidefinite.
    pub fn laplacian(&self) -> Matrix {
        let mut l = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for &j in &self.sym_adj[i] {
                l[(i, j)] = -1.0;
            }
            l[(i, i)] = self.sym_adj[i].len() as f64;
        }
        l
    }

    /// Spectral radius of the directed 0/1 adjacency, by power iteration.
    pub fn spectral_radius(&self) -> f64 {
        if self.edges.is_empty() {
            return 0.0;
        }
        let n = self.n;
        let mut v = vec![1.0 / n as f64; n];
        let mut lambda = 0.0;
        for _ in 0..200 {
            // w = A^T v, with an identity shift to stabilize periodic structure
            let mut w = v.clone();
            for e in &self.edges {
                w[e.dst] += v[e.src];
            }
            let norm: f64 = w.iter().sum();
            if norm <= 0.0 {
                return 0.0;
            }
            for x in w.iter_mut() {
                *x /= norm;
            }
            lambda = norm - 1.0;
            v = w;
        }
        lambda.max(0.0)
    }

    /// Connected components of the symmetrized skeleton: (component id per
    /// node, component count).
    pub fn components(&self) -> (Vec<usize>, usize) {
        let mut comp = vec![usize::MAX; self.n];
        let mut count = 0;
        for start in 0..self.n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = count;
            while let Some(u) = stack.pop() {
                for &v in &self.sym_adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// BFS distances from `start` on the symmetrized skeleton; `usize::MAX`
    /// marks unreachable nodes.
    pub fn bfs_distances(&self, start: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.sym_adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Serialize to the edge-list text format accepted by [`load_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            out.push_str(&format!("{},{},{}\n", self.label(e.src), self.label(e.dst), e.rate));
        }
        out
    }

    /// Label map sidecar: `{ "labels": ["a", "b", ...] }`.
    pub fn label_map_json(&self) -> String {
        #[derive(Serialize)]
        struct LabelMap {
            labels: Vec<String>,
        }
        serde_json::to_string(&LabelMap { labels: self.labels() }).expect("label map serializes")
    }
}

/// Parse an edge-list stream: lines `src,dst[,rate]`, `#` comments, LF or
/// CRLF. Node names are re-indexed densely in order of first appearance; the
/// original names are kept as labels.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<Graph, GraphError> {
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut seen: HashMap<(usize, usize), usize> = HashMap::new();

    let intern = |name: &str, labels: &mut Vec<String>, ids: &mut HashMap<String, usize>| {
        *ids.entry(name.to_string()).or_insert_with(|| {
            labels.push(name.to_string());
            labels.len() - 1
        })
    };

    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let text = line.trim_end_matches('\r').trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        if fields.len() < 2 || fields.len() > 3 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(GraphError::ParseLine {
                line: lineno,
                message: format!("expected `src,dst[,rate]`, got `{text}`"),
            });
        }
        let rate = if fields.len() == 3 {
            fields[2].parse::<f64>().map_err(|_| GraphError::ParseLine {
                line: lineno,
                message: format!("rate `{}` is not a number", fields[2]),
            })?
        } else {
            1.0
        };
        if !rate.is_finite() || rate < 0.0 {
            return Err(GraphError::ParseLine {
                line: lineno,
                message: format!("rate {rate} must be finite and nonnegative"),
            });
        }
        let src = intern(fields[0], &mut labels, &mut ids);
        let dst = intern(fields[1], &mut labels, &mut ids);
        if src == dst {
            return Err(GraphError::ParseLine {
                line: lineno,
                message: format!("self-loop on `{}`", fields[0]),
            });
        }
        if seen.insert((src, dst), lineno).is_some() {
            return Err(GraphError::ParseLine {
                line: lineno,
                message: format!("duplicate edge `{}` -> `{}`", fields[0], fields[1]),
            });
        }
        edges.push(Edge { src, dst, rate });
    }
    if labels.is_empty() {
        return Err(GraphError::Empty);
    }
    let n = labels.len();
    Ok(Graph::assemble(n, Some(labels), edges))
}

/// Parse an edge list held in a string.
pub fn load_edge_list_str(text: &str) -> Result<Graph, GraphError> {
    load_edge_list(std::io::Cursor::new(text))
}

/// Random graph of `k` equally sized communities: within-community pairs are
/// linked with probability `p_in`, across-community pairs with `p_out`. Both
/// edge directions are emitted with rate 1. Returns the graph and the
/// ground-truth partition. Deterministic per seed.
pub fn generate_planted_partition(
    k: usize,
    size: usize,
    p_in: f64,
    p_out: f64,
    seed: u64,
) -> Result<(Graph, Partition), GraphError> {
    if !(0.0..=1.0).contains(&p_in) || !(0.0..=1.0).contains(&p_out) || p_out >= p_in {
        return Err(GraphError::InvalidProbabilities { p_in, p_out });
    }
    let n = k * size;
    if n == 0 {
        return Err(GraphError::Empty);
    }
    let labels: Vec<usize> = (0..n).map(|i| i / size).collect();
    let mut rng = rng::stream(seed, &[rng::tag::PLANTED]);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = if labels[i] == labels[j] { p_in } else { p_out };
            if p > 0.0 && rng.gen::<f64>() < p {
                edges.push((i, j, 1.0));
                edges.push((j, i, 1.0));
            }
        }
    }
    let g = Graph::from_rated_edges(n, &edges)?;
    Ok((g, Partition::from_labels(labels)))
}

/// Rooted tree in which the root has `degree` children and every other
/// internal node has `degree - 1` children, down to `depth` levels. Edges are
/// bidirectional with rate 1; node 0 is the root.
pub fn generate_regular_tree(degree: usize, depth: usize) -> Result<Graph, GraphError> {
    if degree < 1 {
        return Err(GraphError::InvalidTreeDegree);
    }
    let mut edges = Vec::new();
    let mut frontier = vec![0usize];
    let mut next_id = 1usize;
    for level in 0..depth {
        let children_per = if level == 0 { degree } else { degree - 1 };
        let mut next_frontier = Vec::new();
        for &parent in &frontier {
            for _ in 0..children_per {
                let child = next_id;
                next_id += 1;
                edges.push((parent, child));
                edges.push((child, parent));
                next_frontier.push(child);
            }
        }
        frontier = next_frontier;
        if frontier.is_empty() {
            break;
        }
    }
    Graph::from_edges(next_id.max(1), &edges)
}
