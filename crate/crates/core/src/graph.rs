//! Undirected simple graphs in compressed sparse row form.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Undirected graph stored as a symmetric CSR adjacency.
///
/// Every undirected edge `{i, j}` with `i != j` appears as both `(i, j)` and
/// `(j, i)`; a self-loop `(i, i)` appears once. Neighbour lists are sorted
/// and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseGraph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    allows_self_loops: bool,
    self_loops: usize,
}

impl SparseGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            offsets: vec![0; n + 1],
            neighbors: Vec::new(),
            allows_self_loops: false,
            self_loops: 0,
        }
    }

    /// Builds a graph from undirected edges. Duplicates (in either
    /// orientation) collapse to one edge; self-loops are kept only when
    /// `allow_self_loops` is set, otherwise dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)], allow_self_loops: bool) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!("too many nodes: {n}")));
        }
        let mut directed: Vec<(u32, u32)> = Vec::with_capacity(edges.len() * 2);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!("edge ({u}, {v}) out of range for n = {n}")));
            }
            if u == v {
                if allow_self_loops {
                    directed.push((u as u32, u as u32));
                }
                continue;
            }
            directed.push((u as u32, v as u32));
            directed.push((v as u32, u as u32));
        }
        directed.sort_unstable();
        directed.dedup();
        Ok(Self::from_sorted_directed(n, &directed, allow_self_loops))
    }

    /// Builds from per-row sorted, deduplicated neighbour lists that are
    /// already symmetric.
    pub(crate) fn from_rows(rows: Vec<Vec<u32>>, allows_self_loops: bool) -> Self {
        let n = rows.len();
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let total = rows.iter().map(Vec::len).sum();
        let mut neighbors = Vec::with_capacity(total);
        let mut self_loops = 0;
        for (i, row) in rows.into_iter().enumerate() {
            if row.binary_search(&(i as u32)).is_ok() {
                self_loops += 1;
            }
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Self {
            n,
            offsets,
            neighbors,
            allows_self_loops,
            self_loops,
        }
    }

    fn from_sorted_directed(n: usize, directed: &[(u32, u32)], allows_self_loops: bool) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(u, _) in directed {
            offsets[u as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let neighbors = directed.iter().map(|&(_, v)| v).collect();
        let self_loops = directed.iter().filter(|(u, v)| u == v).count();
        Self {
            n,
            offsets,
            neighbors,
            allows_self_loops,
            self_loops,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allows_self_loops
    }

    pub fn self_loop_count(&self) -> usize {
        self.self_loops
    }

    /// Undirected edge count, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        (self.neighbors.len() - self.self_loops) / 2 + self.self_loops
    }

    /// Sorted neighbours of `i` (including `i` itself if it has a loop).
    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[self.offsets[i]..self.offsets[i + 1]]
    }

    /// Number of stored neighbours; a self-loop contributes one.
    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Degree ignoring any self-loop.
    pub fn simple_degree(&self, i: usize) -> usize {
        let d = self.degree(i);
        if self.self_loops > 0 && self.neighbors(i).binary_search(&(i as u32)).is_ok() {
            d - 1
        } else {
            d
        }
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&(j as u32)).is_ok()
    }

    /// Undirected edges `(i, j)` with `i <= j`, in row order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| j as usize >= i)
                .map(move |&j| (i, j as usize))
        })
    }

    /// Induced subgraph on `ids` (in the given order; node `k` of the result
    /// is `ids[k]`).
    pub fn induced_subgraph(&self, ids: &[usize]) -> Result<SparseGraph> {
        let mut position = vec![u32::MAX; self.n];
        for (k, &id) in ids.iter().enumerate() {
            if id >= self.n {
                return Err(Error::InvalidParameter(format!("node {id} out of range")));
            }
            if position[id] != u32::MAX {
                return Err(Error::InvalidParameter(format!("duplicate node {id}")));
            }
            position[id] = k as u32;
        }
        let rows = ids
            .iter()
            .map(|&id| {
                let mut row: Vec<u32> = self
                    .neighbors(id)
                    .iter()
                    .filter_map(|&j| {
                        let p = position[j as usize];
                        (p != u32::MAX).then_some(p)
                    })
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        Ok(SparseGraph::from_rows(rows, self.allows_self_loops))
    }

    /// Graph with nodes renamed by `perm` (node `i` becomes `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> SparseGraph {
        let mut rows = vec![Vec::new(); self.n];
        for i in 0..self.n {
            let mut row: Vec<u32> = self.neighbors(i).iter().map(|&j| perm[j as usize] as u32).collect();
            row.sort_unstable();
            rows[perm[i]] = row;
        }
        SparseGraph::from_rows(rows, self.allows_self_loops)
    }

    /// Stable content fingerprint (hex prefix of a SHA-256 over the CSR arrays).
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n as u64).to_le_bytes());
        for &o in &self.offsets {
            h.update((o as u64).to_le_bytes());
        }
        for &v in &self.neighbors {
            h.update(v.to_le_bytes());
        }
        let digest = h.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks the structural invariants. Used by tests.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.offsets.len() != self.n + 1 || self.offsets[self.n] != self.neighbors.len() {
            return bad("offset array inconsistent".into());
        }
        let mut loops = 0;
        for i in 0..self.n {
            let row = self.neighbors(i);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("row {i} not strictly sorted"));
            }
            for &j in row {
                let j = j as usize;
                if j >= self.n {
                    return bad(format!("neighbour {j} out of range"));
                }
                if j == i {
                    loops += 1;
                    if !self.allows_self_loops {
                        return bad(format!("unexpected self-loop at {i}"));
                    }
                } else if !self.has_edge(j, i) {
                    return bad(format!("edge ({i}, {j}) has no reverse"));
                }
            }
        }
        if loops != self.self_loops {
            return bad("self-loop count mismatch".into());
        }
        let deg_sum: usize = self.degrees().iter().sum();
        if deg_sum + self.self_loops != 2 * self.edge_count() {
            return bad("degree sum identity violated".into());
        }
        Ok(())
    }
}

/// An induced subgraph together with the original id of each node.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: SparseGraph,
    pub node_map: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn builds_symmetric_deduplicated_graph() {
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 0), (1, 2), (2, 2), (3, 1)], false).unwrap();
        assert_eq!(g.edge_count(), 3);
        assert_eq!(g.neighbors(1), &[0, 2, 3]);
        assert!(!g.has_edge(2, 2));
        g.validate().unwrap();

        let g = SparseGraph::from_edges(3, &[(0, 1), (2, 2)], true).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.self_loop_count(), 1);
        assert_eq!(g.degree(2), 1);
        assert_eq!(g.simple_degree(2), 0);
        g.validate().unwrap();
    }

    #[test]
    fn out_of_range_edge_rejected() {
        assert!(SparseGraph::from_edges(2, &[(0, 2)], false).is_err());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = SparseGraph::from_edges(5, &[(0, 1), (1, 2), (2, 0), (3, 4), (0, 4)], false).unwrap();
        let s = g.induced_subgraph(&[4, 0, 3]).unwrap();
        assert_eq!(s.n(), 3);
        assert_eq!(s.edge_count(), 2);
        assert!(s.has_edge(0, 1) && s.has_edge(0, 2) && !s.has_edge(1, 2));
        assert!(g.induced_subgraph(&[0, 0]).is_err());
    }

    proptest! {
        #[test]
        fn invariants_hold_for_random_edge_lists(
            n in 1usize..40,
            raw in prop::collection::vec((0usize..40, 0usize..40), 0..200),
            loops in any::<bool>(),
        ) {
            let edges: Vec<_> = raw.into_iter().map(|(a, b)| (a % n, b % n)).collect();
            let g = SparseGraph::from_edges(n, &edges, loops).unwrap();
            prop_assert!(g.validate().is_ok());
            let perm: Vec<usize> = (0..n).rev().collect();
            let p = g.permuted(&perm);
            prop_assert!(p.validate().is_ok());
            prop_assert_eq!(p.edge_count(), g.edge_count());
            let back = p.permuted(&perm);
            prop_assert_eq!(back, g);
        }
    }
}
