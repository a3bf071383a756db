//! Local views of a graph: common-neighbour neighbourhoods, cores and
//! core-periphery slices.

use crate::eigen::CsrMatrix;
use crate::error::{Error, Result};
use crate::graph::{SparseGraph, Subgraph};
use crate::graphgen::LatentSample;

/// The `k` nodes sharing the most neighbours with a query node.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub query: usize,
    /// Query first, then candidates by descending score, ties by id.
    pub core_ids: Vec<usize>,
    /// Common-neighbour counts; the query's own entry is its degree.
    pub scores: Vec<usize>,
}

impl Neighborhood {
    pub fn k(&self) -> usize {
        self.core_ids.len()
    }
}

/// Ranks every node by `|N(query) ∩ N(v)|`, not counting `query` or `v`
/// themselves as common neighbours, and returns the query plus the best
/// `k - 1` others.
pub fn common_neighbor_neighborhood(g: &SparseGraph, query: usize, k: usize) -> Result<Neighborhood> {
    let n = g.n();
    if query >= n {
        return Err(Error::InvalidParameter(format!("query {query} out of range")));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("neighbourhood size {k} not in 1..={n}")));
    }
    if g.simple_degree(query) == 0 {
        return Err(Error::IsolatedNode(query));
    }
    let mut counts = vec![0usize; n];
    for &w in g.neighbors(query) {
        let w = w as usize;
        if w == query {
            continue;
        }
        for &v in g.neighbors(w) {
            let v = v as usize;
            if v != w {
                counts[v] += 1;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&v| v != query).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut core_ids = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    core_ids.push(query);
    scores.push(g.simple_degree(query));
    for &v in order.iter().take(k - 1) {
        core_ids.push(v);
        scores.push(counts[v]);
    }
    Ok(Neighborhood { query, core_ids, scores })
}

/// Induced subgraph on `core_ids` (node `i` of the result is `core_ids[i]`).
pub fn extract_core(g: &SparseGraph, core_ids: &[usize]) -> Result<Subgraph> {
    Ok(Subgraph {
        graph: g.induced_subgraph(core_ids)?,
        node_map: core_ids.to_vec(),
    })
}

/// Rows of the adjacency matrix belonging to the core, against all nodes.
#[derive(Debug, Clone)]
pub struct CorePeripherySlice {
    /// `m x n`, entry `(i, j) = A[row_map[i], col_map[j]]`.
    pub matrix: CsrMatrix,
    pub row_map: Vec<usize>,
    pub col_map: Vec<usize>,
}

impl CorePeripherySlice {
    pub fn rows(&self) -> usize {
        self.row_map.len()
    }

    pub fn cols(&self) -> usize {
        self.col_map.len()
    }

    /// The square block on the core columns, in core order.
    pub fn core_block(&self) -> CsrMatrix {
        self.matrix.select_columns(&self.row_map).expect("core ids are columns")
    }
}

pub fn extract_cp_slice(g: &SparseGraph, core_ids: &[usize]) -> Result<CorePeripherySlice> {
    let mut seen = vec![false; g.n()];
    let mut triplets = Vec::new();
    for (r, &id) in core_ids.iter().enumerate() {
        if id >= g.n() {
            return Err(Error::InvalidParameter(format!("node {id} out of range")));
        }
        if std::mem::replace(&mut seen[id], true) {
            return Err(Error::InvalidParameter(format!("duplicate node {id}")));
        }
        triplets.extend(g.neighbors(id).iter().map(|&j| (r, j as usize, 1.0)));
    }
    Ok(CorePeripherySlice {
        matrix: CsrMatrix::from_triplets(core_ids.len(), g.n(), &triplets)?,
        row_map: core_ids.to_vec(),
        col_map: (0..g.n()).collect(),
    })
}

/// Centre of a latent ball.
#[derive(Debug, Clone, PartialEq)]
pub enum BallCenter {
    Node(usize),
    Point(Vec<f64>),
}

/// Nodes whose latent position lies within `radius` of the centre, using
/// geodesic distance on curved domains and Euclidean distance otherwise.
pub fn latent_ball_core(latents: &LatentSample, center: &BallCenter, radius: f64) -> Result<Vec<usize>> {
    let c: Vec<f64> = match center {
        BallCenter::Node(i) if *i < latents.len() => latents.row(*i).to_vec(),
        BallCenter::Node(i) => return Err(Error::InvalidParameter(format!("node {i} out of range"))),
        BallCenter::Point(p) if p.len() == latents.dim => p.clone(),
        BallCenter::Point(p) => {
            return Err(Error::DimensionMismatch(format!("centre has {} coordinates, latents have {}", p.len(), latents.dim)))
        }
    };
    let domain = latents.model.domain;
    Ok((0..latents.len())
        .filter(|&i| domain.distance(latents.row(i), &c) <= radius)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::LinearOperator;
    use crate::graphgen::sample_latents;
    use crate::kernels::LatentModel;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn complete_on(ids: &[usize], edges: &mut Vec<(usize, usize)>) {
        for (a, &i) in ids.iter().enumerate() {
            for &j in &ids[a + 1..] {
                edges.push((i, j));
            }
        }
    }

    #[test]
    fn complete_graph_ties_by_id() {
        let mut e = Vec::new();
        complete_on(&[0, 1, 2, 3, 4], &mut e);
        let g = SparseGraph::from_edges(5, &e, false).unwrap();
        let nb = common_neighbor_neighborhood(&g, 0, 3).unwrap();
        assert_eq!(nb.core_ids, vec![0, 1, 2]);
        assert_eq!(nb.scores, vec![4, 3, 3]);
    }

    #[test]
    fn disjoint_cliques_stay_separate() {
        let mut e = Vec::new();
        complete_on(&[0, 1, 2, 3], &mut e);
        complete_on(&[4, 5, 6, 7], &mut e);
        let g = SparseGraph::from_edges(8, &e, false).unwrap();
        let nb = common_neighbor_neighborhood(&g, 5, 4).unwrap();
        let mut ids = nb.core_ids.clone();
        ids.sort();
        assert_eq!(ids, vec![4, 5, 6, 7]);
    }

    fn brute_scores(g: &SparseGraph, q: usize) -> Vec<usize> {
        (0..g.n())
            .map(|v| {
                (0..g.n())
                    .filter(|&w| w != q && w != v && g.has_edge(q, w) && g.has_edge(v, w))
                    .count()
            })
            .collect()
    }

    #[test]
    fn hand_built_graph_matches_brute_force() {
        let e = [
            (0, 1), (0, 2), (0, 3), (1, 2), (1, 4), (2, 5), (3, 5), (3, 6), (4, 7), (5, 8), (6, 9), (7, 10), (8, 11),
            (2, 3), (4, 5), (9, 10), (10, 11), (1, 6),
        ];
        let g = SparseGraph::from_edges(12, &e, false).unwrap();
        for q in 0..12 {
            let nb = common_neighbor_neighborhood(&g, q, 12).unwrap();
            let brute = brute_scores(&g, q);
            for (pos, (&id, &s)) in nb.core_ids.iter().zip(&nb.scores).enumerate().skip(1) {
                assert_eq!(s, brute[id], "query {q} position {pos}");
            }
            assert!(nb.scores.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn isolated_query_rejected() {
        let g = SparseGraph::from_edges(3, &[(0, 1)], false).unwrap();
        assert!(matches!(common_neighbor_neighborhood(&g, 2, 2), Err(Error::IsolatedNode(2))));
    }

    #[test]
    fn core_extraction_cases() {
        let mut e = Vec::new();
        complete_on(&[0, 1, 2, 3], &mut e);
        let g = SparseGraph::from_edges(4, &e, false).unwrap();
        assert_eq!(extract_core(&g, &[0, 1, 2, 3]).unwrap().graph, g);
        let one = extract_core(&g, &[2]).unwrap();
        assert_eq!((one.graph.n(), one.graph.edge_count()), (1, 0));
        let tri = extract_core(&g, &[0, 1, 3]).unwrap();
        assert_eq!(tri.graph.edge_count(), 3);
    }

    #[test]
    fn slice_of_all_nodes_is_adjacency() {
        let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (3, 4), (0, 4)], false).unwrap();
        let s = extract_cp_slice(&g, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(LinearOperator::to_dense(&s.matrix), crate::eigen::SymmetricOperator::to_dense(&g));
    }

    #[test]
    fn latent_ball_cases() {
        let lat = LatentModel::uniform_circle(1.0).unwrap();
        let n = 20_000;
        let s = sample_latents(&lat, n, 4).unwrap();
        assert_eq!(latent_ball_core(&s, &BallCenter::Node(0), 4.0).unwrap().len(), n);
        assert_eq!(latent_ball_core(&s, &BallCenter::Node(7), 0.0).unwrap(), vec![7]);
        let ball = latent_ball_core(&s, &BallCenter::Point(vec![1.0, 0.0]), std::f64::consts::PI / 8.0).unwrap();
        let p = 1.0 / 8.0;
        let expected = n as f64 * p;
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((ball.len() as f64 - expected).abs() < 4.0 * sd, "{} vs {expected}", ball.len());
    }

    fn random_graph(n: usize, p: f64, seed: u64) -> SparseGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    e.push((i, j));
                }
            }
        }
        SparseGraph::from_edges(n, &e, false).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn slice_consistent_with_core(n in 2usize..40, p in 0.05f64..0.7, seed in any::<u64>(), frac in 0.1f64..1.0) {
            let g = random_graph(n, p, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
            let mut ids: Vec<usize> = (0..n).filter(|_| rng.random::<f64>() < frac).collect();
            if ids.is_empty() { ids.push(0); }
            ids.reverse();
            let slice = extract_cp_slice(&g, &ids).unwrap();
            let core = extract_core(&g, &ids).unwrap();
            let block = LinearOperator::to_dense(&slice.core_block());
            prop_assert_eq!(block, crate::eigen::SymmetricOperator::to_dense(&core.graph));
            let sums = slice.matrix.row_sums();
            for (r, &id) in ids.iter().enumerate() {
                prop_assert_eq!(sums[r], g.degree(id) as f64);
            }
        }

        #[test]
        fn neighborhood_stable_under_relabeling(n in 5usize..40, p in 0.1f64..0.6, seed in any::<u64>()) {
            let g = random_graph(n, p, seed);
            let q = (0..n).find(|&i| g.degree(i) > 0);
            prop_assume!(q.is_some());
            let q = q.unwrap();
            let k = n / 2;
            let nb = common_neighbor_neighborhood(&g, q, k).unwrap();
            // only meaningful when the cut-off score is untied
            let all = common_neighbor_neighborhood(&g, q, n).unwrap();
            prop_assume!(k == n || all.scores[k - 1] != all.scores[k]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
            let mut perm: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() { perm.swap(i, rng.random_range(0..=i)); }
            let mut inv = vec![0; n];
            for (i, &p) in perm.iter().enumerate() { inv[p] = i; }
            let nb2 = common_neighbor_neighborhood(&g.permuted(&perm), perm[q], k).unwrap();
            let mut a = nb.core_ids.clone();
            let mut b: Vec<usize> = nb2.core_ids.iter().map(|&v| inv[v]).collect();
            a.sort(); b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
