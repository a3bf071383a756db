//! Degrees, triangles, clustering and low-degree subgraphs.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{SparseGraph, Subgraph};
use crate::graphgen::{derive_seed, sample_graph_from_embedding, Pairing};
use crate::spectral::ase;

/// Forward-oriented adjacency: each edge points from lower to higher
/// `(degree, id)` rank. Self-loops are dropped.
fn forward_lists(g: &SparseGraph) -> Vec<Vec<u32>> {
    let deg: Vec<usize> = (0..g.n()).map(|i| g.simple_degree(i)).collect();
    let rank = |v: usize| (deg[v], v);
    (0..g.n())
        .map(|u| {
            g.neighbors(u)
                .iter()
                .copied()
                .filter(|&w| w as usize != u && rank(w as usize) > rank(u))
                .collect()
        })
        .collect()
}

fn merge_count(a: &[u32], b: &[u32]) -> u64 {
    let (mut i, mut j, mut c) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

/// Node count up to which the dense bitset kernel may be used (~60 MB).
const BITSET_MAX_N: usize = 22_000;

/// Exact number of triangles; self-loops are ignored.
///
/// Edges are oriented by `(degree, id)` and forward lists intersected, so
/// every triangle is counted once from its lowest-ranked vertex. Dense
/// graphs switch to word-parallel bitset intersection.
pub fn count_triangles(g: &SparseGraph) -> u64 {
    let n = g.n();
    if n < 3 {
        return 0;
    }
    let fwd = forward_lists(g);
    let arcs: usize = fwd.iter().map(Vec::len).sum();
    let words = n.div_ceil(64);
    if n <= BITSET_MAX_N && 2 * arcs > n * words {
        count_bitset(&fwd, words)
    } else {
        (0..n)
            .into_par_iter()
            .map(|u| fwd[u].iter().map(|&v| merge_count(&fwd[u], &fwd[v as usize])).sum::<u64>())
            .sum()
    }
}

fn count_bitset(fwd: &[Vec<u32>], words: usize) -> u64 {
    let mut bits = vec![0u64; fwd.len() * words];
    for (u, row) in fwd.iter().enumerate() {
        for &v in row {
            bits[u * words + v as usize / 64] |= 1 << (v % 64);
        }
    }
    let bits = &bits;
    (0..fwd.len())
        .into_par_iter()
        .map(|u| {
            let bu = &bits[u * words..(u + 1) * words];
            fwd[u]
                .iter()
                .map(|&v| {
                    let bv = &bits[v as usize * words..(v as usize + 1) * words];
                    bu.iter().zip(bv).map(|(a, b)| (a & b).count_ones() as u64).sum::<u64>()
                })
                .sum::<u64>()
        })
        .sum()
}

/// Triangle and node counts of the degree-capped subgraphs of one graph.
#[derive(Debug, Clone, PartialEq)]
pub struct LowDegreeProfile {
    pub caps: Vec<usize>,
    /// Triangles whose three vertices all have degree at most `caps[i]`.
    pub triangles: Vec<u64>,
    /// Nodes of degree at most `caps[i]`.
    pub nodes: Vec<usize>,
}

/// Equivalent to counting triangles of `low_degree_subgraph(g, c)` for
/// every `c` in `caps`, in a single enumeration: each triangle is binned
/// by the largest degree among its vertices.
pub fn low_degree_profile(g: &SparseGraph, caps: &[usize]) -> LowDegreeProfile {
    let n = g.n();
    let deg: Vec<usize> = (0..n).map(|i| g.simple_degree(i)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    let fwd = forward_lists(g);
    // With (degree, id) orientation the last vertex of u -> v -> w has the largest degree.
    let by_max = (0..n)
        .into_par_iter()
        .fold(
            || vec![0u64; max_deg + 1],
            |mut hist, u| {
                for &v in &fwd[u] {
                    let (a, b) = (&fwd[u], &fwd[v as usize]);
                    let (mut i, mut j) = (0, 0);
                    while i < a.len() && j < b.len() {
                        match a[i].cmp(&b[j]) {
                            std::cmp::Ordering::Less => i += 1,
                            std::cmp::Ordering::Greater => j += 1,
                            std::cmp::Ordering::Equal => {
                                hist[deg[a[i] as usize]] += 1;
                                i += 1;
                                j += 1;
                            }
                        }
                    }
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; max_deg + 1],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let mut deg_hist = vec![0usize; max_deg + 1];
    for &d in &deg {
        deg_hist[d] += 1;
    }
    let cum_t: Vec<u64> = by_max.iter().scan(0u64, |s, &v| {
        *s += v;
        Some(*s)
    }).collect();
    let cum_n: Vec<usize> = deg_hist.iter().scan(0usize, |s, &v| {
        *s += v;
        Some(*s)
    }).collect();
    LowDegreeProfile {
        caps: caps.to_vec(),
        triangles: caps.iter().map(|&c| cum_t[c.min(max_deg)]).collect(),
        nodes: caps.iter().map(|&c| cum_n[c.min(max_deg)]).collect(),
    }
}

/// Sizes of the connected components, largest first.
pub fn component_sizes(g: &SparseGraph) -> Vec<usize> {
    let n = g.n();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        stack.push(s);
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &w in g.neighbors(u) {
                let w = w as usize;
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Summary statistics of a graph (self-loops excluded throughout).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub n: usize,
    pub edge_count: usize,
    pub avg_degree: f64,
    pub triangle_count: u64,
    pub triangle_density: f64,
    pub connected_triples: u64,
    pub clustering_coefficient: f64,
    /// `degree_histogram[k]` = number of nodes of degree `k`.
    #[serde(skip)]
    pub degree_histogram: Vec<usize>,
}

pub fn graph_stats(g: &SparseGraph) -> GraphStats {
    let n = g.n();
    let degrees: Vec<usize> = (0..n).map(|i| g.simple_degree(i)).collect();
    let max_deg = degrees.iter().copied().max().unwrap_or(0);
    let mut degree_histogram = vec![0usize; max_deg + 1];
    for &d in &degrees {
        degree_histogram[d] += 1;
    }
    let simple_edges = degrees.iter().sum::<usize>() / 2;
    let triangles = count_triangles(g);
    let triples: u64 = degrees.iter().map(|&d| (d as u64) * (d as u64).saturating_sub(1) / 2).sum();
    GraphStats {
        n,
        edge_count: simple_edges,
        avg_degree: if n > 0 { 2.0 * simple_edges as f64 / n as f64 } else { 0.0 },
        triangle_count: triangles,
        triangle_density: if n > 0 { triangles as f64 / n as f64 } else { 0.0 },
        connected_triples: triples,
        clustering_coefficient: if triples > 0 { 3.0 * triangles as f64 / triples as f64 } else { 0.0 },
        degree_histogram,
    }
}

/// How the degree cap is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegreeCapMode {
    /// Keep nodes whose degree in the original graph is at most `c`.
    #[default]
    SinglePass,
    /// Repeatedly delete the node of largest current degree (ties: larger
    /// id first) until every remaining degree is at most `c`.
    Peeling,
}

pub fn low_degree_subgraph(g: &SparseGraph, c: usize) -> Subgraph {
    low_degree_subgraph_with(g, c, DegreeCapMode::SinglePass)
}

pub fn low_degree_subgraph_with(g: &SparseGraph, c: usize, mode: DegreeCapMode) -> Subgraph {
    let keep: Vec<usize> = match mode {
        DegreeCapMode::SinglePass => (0..g.n()).filter(|&i| g.simple_degree(i) <= c).collect(),
        DegreeCapMode::Peeling => peel(g, c),
    };
    let graph = g.induced_subgraph(&keep).expect("ids are valid and distinct");
    Subgraph { graph, node_map: keep }
}

fn peel(g: &SparseGraph, c: usize) -> Vec<usize> {
    use std::collections::BinaryHeap;
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|i| g.simple_degree(i)).collect();
    let mut alive = vec![true; n];
    let mut heap: BinaryHeap<(usize, usize)> = (0..n).map(|i| (deg[i], i)).collect();
    while let Some((d, v)) = heap.pop() {
        if !alive[v] || d != deg[v] {
            continue;
        }
        if d <= c {
            break;
        }
        alive[v] = false;
        for &w in g.neighbors(v) {
            let w = w as usize;
            if w != v && alive[w] {
                deg[w] -= 1;
                heap.push((deg[w], w));
            }
        }
    }
    (0..n).filter(|&i| alive[i]).collect()
}

/// Triangle recovery at one embedding dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryPoint {
    pub dim: usize,
    /// `100 * mean(T_resampled) / T_source`.
    pub mean_percent: f64,
    /// Standard error of `mean_percent` over resamples.
    pub std_error: f64,
}

/// For each `d`: embed `g` by ASE, resample `resamples` graphs from the
/// embedding and report the mean fraction of triangles reproduced.
pub fn triangle_recovery_curve(g: &SparseGraph, dims: &[usize], resamples: usize, seed: u64) -> Result<Vec<RecoveryPoint>> {
    triangle_recovery_curve_with(g, dims, resamples, seed, false)
}

/// As [`triangle_recovery_curve`]; `indefinite` resamples with the
/// eigenvalue-signed product `<x_i, S x_j>` instead of `<x_i, x_j>`.
pub fn triangle_recovery_curve_with(
    g: &SparseGraph,
    dims: &[usize],
    resamples: usize,
    seed: u64,
    indefinite: bool,
) -> Result<Vec<RecoveryPoint>> {
    let pairing = if indefinite { Pairing::Indefinite } else { Pairing::Symmetric };
    let source = count_triangles(g);
    if source == 0 {
        return Err(Error::NoTriangles);
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter("resamples must be positive".into()));
    }
    dims.iter()
        .map(|&d| {
            if d == 0 || d > g.n() {
                return Err(Error::InvalidParameter(format!("dimension {d} not in 1..={}", g.n())));
            }
            let emb = ase(g, d)?;
            let counts = (0..resamples)
                .map(|r| {
                    let h = sample_graph_from_embedding(&emb, pairing, derive_seed(seed, (d * 1_000_003 + r) as u64))?;
                    Ok(100.0 * count_triangles(&h) as f64 / source as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let (mean, se) = mean_and_se(&counts);
            Ok(RecoveryPoint {
                dim: d,
                mean_percent: mean,
                std_error: se,
            })
        })
        .collect()
}

/// Sample mean and its standard error (0 for a single value).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
