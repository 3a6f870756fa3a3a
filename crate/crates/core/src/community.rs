//! Partition scoring and community detection: modularity, greedy (Louvain
//! style) maximization, spectral embedding/clustering, and modularity-driven
//! selection of the community count.
//!
//! All scoring happens on the symmetrized 0/1 skeleton of the graph.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, Matrix};
use crate::rng;

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("modularity is undefined on a graph with no edges")]
    ZeroEdges,
    #[error("invalid community count k={k} for {n} nodes")]
    InvalidK { k: usize, n: usize },
    #[error("invalid k range [{k_min}, {k_max}] for {n} nodes")]
    InvalidKRange { k_min: usize, k_max: usize, n: usize },
    #[error("partition labels {got} nodes, graph has {expected}")]
    LabelLengthMismatch { got: usize, expected: usize },
    #[error("eigen solver failed to converge")]
    EigenFailure,
}

/// Community assignment with dense ids `0..k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Normalize arbitrary labels to dense ids in order of first appearance.
    pub fn from_labels(raw: Vec<usize>) -> Self {
        let mut remap = std::collections::HashMap::new();
        let mut labels = Vec::with_capacity(raw.len());
        for l in raw {
            let next = remap.len();
            let id = *remap.entry(l).or_insert(next);
            labels.push(id);
        }
        let k = remap.len().max(1);
        Partition { labels, k }
    }

    /// Everyone in one community.
    pub fn single(n: usize) -> Self {
        Partition { labels: vec![0; n], k: 1 }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Per-node coordinates from the low eigenvectors of the Laplacian.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// n x k matrix; column j is the eigenvector with the j-th smallest eigenvalue.
    pub coords: Matrix,
    /// Eigenvalues in ascending order, one per column.
    pub eigenvalues: Vec<f64>,
}

/// Newman modularity Q of a partition on the symmetrized 0/1 skeleton.
///
/// Q = sum_c [ e_c / m - (d_c / 2m)^2 ] with e_c internal edges of community c
/// and d_c its total degree. The all-in-one partition scores exactly 0.
pub fn modularity(g: &Graph, p: &Partition) -> Result<f64, CommunityError> {
    if p.len() != g.node_count() {
        return Err(CommunityError::LabelLengthMismatch { got: p.len(), expected: g.node_count() });
    }
    let m = g.sym_edge_count();
    if m == 0 {
        return Err(CommunityError::ZeroEdges);
    }
    let labels = p.labels();
    let mut internal = vec![0usize; p.k()];
    let mut degree = vec![0usize; p.k()];
    for i in 0..g.node_count() {
        degree[labels[i]] += g.sym_degree(i);
        for &j in g.sym_neighbors(i) {
            if i < j && labels[i] == labels[j] {
                internal[labels[i]] += 1;
            }
        }
    }
    let m = m as f64;
    let mut q = 0.0;
    for c in 0..p.k() {
        let frac_internal = internal[c] as f64 / m;
        let frac_degree = degree[c] as f64 / (2.0 * m);
        q += frac_internal - frac_degree * frac_degree;
    }
    Ok(q)
}

/// Weighted undirected graph used by the aggregation levels of the greedy
/// optimizer. `self_w[i]` holds the (single-counted) weight of internal edges
/// collapsed into node i.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_w: Vec<f64>,
    total_w: f64,
}

impl LevelGraph {
    fn from_graph(g: &Graph) -> Self {
        let n = g.node_count();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, slot) in adj.iter_mut().enumerate() {
            for &j in g.sym_neighbors(i) {
                slot.push((j, 1.0));
            }
        }
        LevelGraph { adj, self_w: vec![0.0; n], total_w: g.sym_edge_count() as f64 }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    /// Weighted degree including the self weight twice.
    fn strength(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum::<f64>() + 2.0 * self.self_w[i]
    }
}

/// Local-move sweeps in the given node order, starting from the given labels
/// (dense, < n). A node may join an adjacent community or break out into a
/// fresh empty one; sweeps repeat until a full pass makes no move. Returns
/// the labels and whether any move happened.
fn local_moves_init(lg: &LevelGraph, init: &[usize], order: &[usize]) -> (Vec<usize>, bool) {
    let n = lg.n();
    let two_m = 2.0 * lg.total_w;
    let mut labels = init.to_vec();
    let mut sigma_tot = vec![0.0_f64; n];
    let mut counts = vec![0usize; n];
    for i in 0..n {
        sigma_tot[labels[i]] += lg.strength(i);
        counts[labels[i]] += 1;
    }
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &u in order {
            let k_u = lg.strength(u);
            let current = labels[u];
            // weight from u into each adjacent community
            let mut links: std::collections::BTreeMap<usize, f64> =
                std::collections::BTreeMap::new();
            links.insert(current, 0.0);
            for &(v, w) in &lg.adj[u] {
                if v != u {
                    *links.entry(labels[v]).or_insert(0.0) += w;
                }
            }
            sigma_tot[current] -= k_u;
            counts[current] -= 1;
            let mut best_c = current;
            let mut best_gain = links[&current] - sigma_tot[current] * k_u / two_m;
            // breaking out into an empty community re-inserts at gain 0
            if counts[current] > 0 && 0.0 > best_gain + 1e-12 {
                if let Some(free) = (0..n).find(|&c| counts[c] == 0) {
                    best_gain = 0.0;
                    best_c = free;
                }
            }
            for (&c, &w_uc) in &links {
                if c == current {
                    continue;
                }
                let gain = w_uc - sigma_tot[c] * k_u / two_m;
                if gain > best_gain + 1e-12 {
                    best_gain = gain;
                    best_c = c;
                }
            }
            sigma_tot[best_c] += k_u;
            counts[best_c] += 1;
            if best_c != current {
                labels[u] = best_c;
                moved = true;
                moved_any = true;
            }
        }
        if !moved {
            break;
        }
    }
    (labels, moved_any)
}

/// Collapse communities into super-nodes, summing edge weights.
fn aggregate(lg: &LevelGraph, labels: &[usize]) -> (LevelGraph, Vec<usize>) {
    let dense = Partition::from_labels(labels.to_vec());
    let k = dense.k();
    let dl = dense.labels();
    let mut self_w = vec![0.0; k];
    let mut pair_w: std::collections::BTreeMap<(usize, usize), f64> =
        std::collections::BTreeMap::new();
    for i in 0..lg.n() {
        self_w[dl[i]] += lg.self_w[i];
        for &(j, w) in &lg.adj[i] {
            if i < j {
                let (a, b) = (dl[i], dl[j]);
                if a == b {
                    self_w[a] += w;
                } else {
                    let key = (a.min(b), a.max(b));
                    *pair_w.entry(key).or_insert(0.0) += w;
                }
            }
        }
    }
    let mut adj = vec![Vec::new(); k];
    for (&(a, b), &w) in &pair_w {
        adj[a].push((b, w));
        adj[b].push((a, w));
    }
    let total_w = lg.total_w;
    (LevelGraph { adj, self_w, total_w }, dl.to_vec())
}

/// Number of deterministic sweep orders the greedy optimizer tries; the first
/// is always 0..n, the rest are internally seeded shuffles of it.
const GREEDY_SWEEP_ORDERS: u64 = 8;
const GREEDY_ORDER_SEED: u64 = 2_654_435_769;

fn sweep_order(n: usize, restart: u64, level: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    if restart > 0 {
        use rand::seq::SliceRandom;
        let mut rng = rng::stream(GREEDY_ORDER_SEED, &[restart, level]);
        order.shuffle(&mut rng);
    }
    order
}

/// One multi-level pass: fine-level refinement sweeps alternating with
/// coarse-phase aggregation until no move improves Q.
fn louvain_once(g: &Graph, restart: u64) -> Vec<usize> {
    let n = g.node_count();
    let lg0 = LevelGraph::from_graph(g);
    let mut labels: Vec<usize> = (0..n).collect();
    loop {
        // fine-level sweeps from the current partition
        let order = sweep_order(n, restart, 0);
        let (fine, moved_fine) = local_moves_init(&lg0, &labels, &order);
        labels = Partition::from_labels(fine).labels().to_vec();

        // coarse phases: collapse communities and sweep super-nodes
        let mut moved_coarse = false;
        let (mut lg, _) = aggregate(&lg0, &labels);
        let mut map = labels.clone();
        let mut level = 1u64;
        loop {
            let singletons: Vec<usize> = (0..lg.n()).collect();
            let order = sweep_order(lg.n(), restart, level);
            let (coarse, moved) = local_moves_init(&lg, &singletons, &order);
            if !moved {
                break;
            }
            moved_coarse = true;
            let dense = Partition::from_labels(coarse).labels().to_vec();
            for x in map.iter_mut() {
                *x = dense[*x];
            }
            let (next, _) = aggregate(&lg, &dense);
            if next.n() == lg.n() {
                break;
            }
            lg = next;
            level += 1;
        }
        labels = map;
        if !moved_fine && !moved_coarse {
            break;
        }
    }
    labels
}

/// Greedy modularity maximization: Louvain-style local moves plus
/// aggregation, run over a fixed family of deterministic sweep orders with
/// the best-scoring partition kept. Single sweep orders stall in one-move
/// local optima on small dense graphs; the order family keeps the result
/// deterministic while escaping those.
pub fn greedy_modularity(g: &Graph) -> Result<Partition, CommunityError> {
    if g.sym_edge_count() == 0 {
        return Err(CommunityError::ZeroEdges);
    }
    let mut best: Option<(f64, Partition)> = None;
    for restart in 0..GREEDY_SWEEP_ORDERS {
        let p = Partition::from_labels(louvain_once(g, restart));
        let q = modularity(g, &p)?;
        match &best {
            None => best = Some((q, p)),
            Some((bq, _)) if q > bq + 1e-12 => best = Some((q, p)),
            _ => {}
        }
    }
    Ok(best.unwrap().1)
}

/// Eigenvectors of the Laplacian with the `k` smallest eigenvalues, columns in
/// ascending eigenvalue order, unit norm, first nonzero component positive.
pub fn spectral_embedding(g: &Graph, k: usize) -> Result<Embedding, CommunityError> {
    let n = g.node_count();
    if k < 1 || k > n {
        return Err(CommunityError::InvalidK { k, n });
    }
    let l = g.laplacian();
    let eig = nalgebra::SymmetricEigen::try_new(l.clone(), 1e-13, 100_000)
        .ok_or(CommunityError::EigenFailure)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap().then(a.cmp(&b))
    });

    let mut coords = DMatrix::zeros(n, k);
    let mut eigenvalues = Vec::with_capacity(k);
    for (col, &idx) in order.iter().take(k).enumerate() {
        let mut v: Vec<f64> = (0..n).map(|r| eig.eigenvectors[(r, idx)]).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-9) {
            if *first < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        for r in 0..n {
            coords[(r, col)] = v[r];
        }
        eigenvalues.push(eig.eigenvalues[idx]);
    }
    Ok(Embedding { coords, eigenvalues })
}

/// k-means++ initialization followed by Lloyd iterations on embedding rows.
/// Returns (labels, inertia).
fn kmeans_once(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> (Vec<usize>, f64) {
    let n = points.len();
    let dim = points[0].len();
    let d2 =
        |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum() };

    // k-means++ seeding
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let first = rng.gen_range(0..n);
    centers.push(points[first].clone());
    chosen[first] = true;
    let mut min_d2: Vec<f64> = points.iter().map(|p| d2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = min_d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (i, &w) in min_d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                target -= w;
                if target <= 0.0 {
                    pick = Some(i);
                    break;
                }
            }
            pick.unwrap_or_else(|| {
                min_d2.iter().enumerate().rev().find(|(_, &w)| w > 0.0).map(|(i, _)| i).unwrap()
            })
        } else {
            // all remaining points coincide with a center; take the lowest unchosen id
            (0..n).find(|&i| !chosen[i]).unwrap_or(0)
        };
        chosen[pick] = true;
        centers.push(points[pick].clone());
        for (i, p) in points.iter().enumerate() {
            let d = d2(p, centers.last().unwrap());
            if d < min_d2[i] {
                min_d2[i] = d;
            }
        }
    }

    let mut assign = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let d = d2(p, center);
                if d < best_d - 1e-15 {
                    best_d = d;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        // recompute centers; refill empty clusters with the worst-fit point
        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (i, p) in points.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, x) in sums[assign[i]].iter_mut().zip(p) {
                *s += x;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        d2(&points[a], &centers[assign[a]])
                            .partial_cmp(&d2(&points[b], &centers[assign[b]]))
                            .unwrap()
                            .then(b.cmp(&a))
                    })
                    .unwrap();
                centers[c] = points[far].clone();
                assign[far] = c;
                changed = true;
            } else {
                for (j, s) in sums[c].iter().enumerate() {
                    centers[c][j] = s / counts[c] as f64;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let inertia: f64 = points.iter().zip(&assign).map(|(p, &c)| d2(p, &centers[c])).sum();
    (assign, inertia)
}

const KMEANS_RESTARTS: usize = 10;

/// Spectral clustering: k-means on the rows of the spectral embedding,
/// k-means++ initialization, 10 restarts, best inertia kept. Deterministic per
/// seed; restart r draws from the (seed, r) stream.
pub fn spectral_clustering(g: &Graph, k: usize, seed: u64) -> Result<Partition, CommunityError> {
    let emb = spectral_embedding(g, k)?;
    let n = g.node_count();
    let points: Vec<Vec<f64>> =
        (0..n).map(|i| (0..k).map(|j| emb.coords[(i, j)]).collect()).collect();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = rng::stream(seed, &[rng::tag::KMEANS, r as u64]);
        let (labels, inertia) = kmeans_once(&points, k, &mut rng);
        match &best {
            None => best = Some((inertia, labels)),
            Some((bi, _)) if inertia < bi - 1e-15 => best = Some((inertia, labels)),
            _ => {}
        }
    }
    Ok(Partition::from_labels(best.unwrap().1))
}

/// Try each k in [k_min, k_max], keep the clustering of maximal modularity.
/// Ties go to the smallest k.
pub fn select_k(
    g: &Graph,
    k_min: usize,
    k_max: usize,
    seed: u64,
) -> Result<(usize, Partition), CommunityError> {
    let n = g.node_count();
    if k_min < 1 || k_min > k_max || k_max > n {
        return Err(CommunityError::InvalidKRange { k_min, k_max, n });
    }
    let mut best: Option<(f64, usize, Partition)> = None;
    for k in k_min..=k_max {
        let p = spectral_clustering(g, k, seed)?;
        let q = modularity(g, &p)?;
        match &best {
            None => best = Some((q, k, p)),
            Some((bq, _, _)) if q > *bq => best = Some((q, k, p)),
            _ => {}
        }
    }
    let (_, k, p) = best.unwrap();
    Ok((k, p))
}

/// Normalized mutual information between two partitions of the same node set,
/// with arithmetic-mean normalization. Two identical trivial partitions score 1.
pub fn normalized_mutual_information(a: &Partition, b: &Partition) -> f64 {
    assert_eq!(a.len(), b.len(), "partitions must cover the same nodes");
    let n = a.len() as f64;
    let mut joint = vec![vec![0.0; b.k()]; a.k()];
    for (&la, &lb) in a.labels().iter().zip(b.labels()) {
        joint[la][lb] += 1.0;
    }
    let pa: Vec<f64> = joint.iter().map(|row| row.iter().sum::<f64>() / n).collect();
    let pb: Vec<f64> =
        (0..b.k()).map(|j| joint.iter().map(|row| row[j]).sum::<f64>() / n).collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0.0 {
                let pij = c / n;
                mi += pij * (pij / (pa[i] * pb[j])).ln();
            }
        }
    }
    let h =
        |p: &[f64]| -> f64 { -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>() };
    let (ha, hb) = (h(&pa), h(&pb));
    if ha + hb == 0.0 {
        return 1.0;
    }
    2.0 * mi / (ha + hb)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_planted_partition;

    fn two_cliques(size: usize) -> Graph {
        let mut edges = Vec::new();
        for block in 0..2 {
            let base = block * size;
            for i in 0..size {
                for j in (i + 1)..size {
                    edges.push((base + i, base + j));
                    edges.push((base + j, base + i));
                }
            }
        }
        Graph::from_edges(2 * size, &edges).unwrap()
    }

    /// Definitional modularity: (1/2m) sum_ij [A_ij - d_i d_j / 2m] delta(c_i, c_j).
    fn modularity_definitional(g: &Graph, p: &Partition) -> f64 {
        let n = g.node_count();
        let two_m = (2 * g.sym_edge_count()) as f64;
        let mut q = 0.0;
        for i in 0..n {
            for j in 0..n {
                if p.labels()[i] != p.labels()[j] {
                    continue;
                }
                let a_ij =
                    if i != j && g.sym_neighbors(i).binary_search(&j).is_ok() { 1.0 } else { 0.0 };
                q += a_ij - (g.sym_degree(i) * g.sym_degree(j)) as f64 / two_m;
            }
        }
        q / two_m
    }

    #[test]
    fn all_in_one_partition_scores_zero() {
        let g = two_cliques(4);
        let q = modularity(&g, &Partition::single(8)).unwrap();
        assert!(q.abs() < 1e-12, "Q = {q}");
    }

    #[test]
    fn two_cliques_split_scores_half() {
        let g = two_cliques(4);
        let p = Partition::from_labels(vec![0, 0, 0, 0, 1, 1, 1, 1]);
        let q = modularity(&g, &p).unwrap();
        assert!((q - 0.5).abs() < 1e-12, "Q = {q}");

        // one node misplaced strictly lowers Q
        let bad = Partition::from_labels(vec![0, 0, 0, 1, 1, 1, 1, 1]);
        let qb = modularity(&g, &bad).unwrap();
        assert!(qb < q - 1e-6, "{qb} !< {q}");
    }

    #[test]
    fn modularity_matches_definitional_form() {
        let (g, truth) = generate_planted_partition(3, 5, 0.8, 0.2, 11).unwrap();
        let q = modularity(&g, &truth).unwrap();
        let q_def = modularity_definitional(&g, &truth);
        assert!((q - q_def).abs() < 1e-12);
    }

    #[test]
    fn modularity_errors_on_edgeless_graph() {
        let g = Graph::from_edges(3, &[]).unwrap();
        assert!(matches!(modularity(&g, &Partition::single(3)), Err(CommunityError::ZeroEdges)));
    }

    #[test]
    fn greedy_recovers_disjoint_cliques() {
        let g = two_cliques(4);
        let p = greedy_modularity(&g).unwrap();
        assert_eq!(p.k(), 2);
        let l = p.labels();
        for i in 1..4 {
            assert_eq!(l[i], l[0]);
            assert_eq!(l[4 + i], l[4]);
        }
        assert_ne!(l[0], l[4]);
        let q = modularity(&g, &p).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn greedy_never_below_single_partition() {
        for seed in 0..5 {
            let (g, _) = generate_planted_partition(2, 4, 0.9, 0.3, seed).unwrap();
            let p = greedy_modularity(&g).unwrap();
            let q = modularity(&g, &p).unwrap();
            assert!(q >= -1e-12, "seed {seed}: Q = {q}");
        }
    }

    #[test]
    fn embedding_constant_column_and_residuals() {
        let (g, _) = generate_planted_partition(2, 5, 1.0, 0.4, 5).unwrap();
        let emb = spectral_embedding(&g, 3).unwrap();
        // connected graph: first eigenvector is the all-ones direction
        assert!(emb.eigenvalues[0].abs() < 1e-8);
        let n = g.node_count() as f64;
        let expect = 1.0 / n.sqrt();
        for i in 0..g.node_count() {
            assert!((emb.coords[(i, 0)] - expect).abs() < 1e-8);
        }
        // residual check per column
        let l = g.laplacian();
        for c in 0..3 {
            let v = emb.coords.column(c);
            let lv = &l * v;
            for r in 0..g.node_count() {
                assert!((lv[r] - emb.eigenvalues[c] * v[r]).abs() <= 1e-8);
            }
        }
        // eigenvalues ascend
        assert!(emb.eigenvalues.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn disconnected_cliques_embed_as_two_points() {
        let g = two_cliques(4);
        let emb = spectral_embedding(&g, 2).unwrap();
        assert!(emb.eigenvalues[0].abs() < 1e-9);
        assert!(emb.eigenvalues[1].abs() < 1e-9);
        let row = |i: usize| (emb.coords[(i, 0)], emb.coords[(i, 1)]);
        for i in 1..4 {
            assert!((row(i).0 - row(0).0).abs() < 1e-9);
            assert!((row(i).1 - row(0).1).abs() < 1e-9);
        }
        for i in 5..8 {
            assert!((row(i).0 - row(4).0).abs() < 1e-9);
            assert!((row(i).1 - row(4).1).abs() < 1e-9);
        }
        let da = (row(0).0 - row(4).0).abs() + (row(0).1 - row(4).1).abs();
        assert!(da > 1e-3, "clique rows must differ, gap {da}");
    }

    #[test]
    fn zero_eigenvalue_multiplicity_equals_components() {
        let g = two_cliques(3);
        let emb = spectral_embedding(&g, 6).unwrap();
        let zeros = emb.eigenvalues.iter().filter(|&&e| e.abs() < 1e-8).count();
        assert_eq!(zeros, 2);
    }

    #[test]
    fn clustering_recovers_cliques_exactly() {
        let g = two_cliques(4);
        let p = spectral_clustering(&g, 2, 9).unwrap();
        let truth = Partition::from_labels(vec![0, 0, 0, 0, 1, 1, 1, 1]);
        assert!((normalized_mutual_information(&p, &truth) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn clustering_k_equals_n_gives_singletons() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 0), (1, 2), (2, 1), (2, 3), (3, 2)]).unwrap();
        let p = spectral_clustering(&g, 4, 1).unwrap();
        assert_eq!(p.k(), 4);
    }

    #[test]
    fn clustering_beats_nmi_threshold_on_planted_graph() {
        let (g, truth) = generate_planted_partition(3, 15, 0.9, 0.02, 1).unwrap();
        let p = spectral_clustering(&g, 3, 1).unwrap();
        let nmi = normalized_mutual_information(&p, &truth);
        assert!(nmi >= 0.95, "NMI {nmi}");
    }

    #[test]
    fn select_k_finds_two_cliques() {
        let g = two_cliques(4);
        let (k, _) = select_k(&g, 1, 4, 17).unwrap();
        assert_eq!(k, 2);
    }

    #[test]
    fn select_k_collapsed_range() {
        let g = two_cliques(3);
        let (k, p) = select_k(&g, 3, 3, 0).unwrap();
        assert_eq!(k, 3);
        assert_eq!(p.k(), 3);
    }

    #[test]
    fn select_k_recovers_planted_three_blocks() {
        let (g, _) = generate_planted_partition(3, 10, 0.9, 0.03, 2).unwrap();
        let (k, _) = select_k(&g, 2, 6, 2).unwrap();
        assert_eq!(k, 3);
    }

    #[test]
    fn nmi_of_identical_trivial_partitions_is_one() {
        let a = Partition::single(5);
        let b = Partition::single(5);
        assert_eq!(normalized_mutual_information(&a, &b), 1.0);
    }
}
