//! Adjacency / Laplacian spectral embeddings, slice SVD embeddings, scree
//! values and Procrustes alignment.

use nalgebra::DMatrix;

use crate::eigen::{singular_triplets, symmetric_eigs, EigenOptions, LinearOperator, NormalizedAdjacency, SymmetricOperator, Which};
use crate::error::{Error, Result};
use crate::graph::SparseGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Ase,
    Lse,
    SliceLeft,
    SliceRight,
}

impl EmbeddingKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Ase => "ase",
            Self::Lse => "lse",
            Self::SliceLeft => "slice_left",
            Self::SliceRight => "slice_right",
        }
    }
}

/// Node positions with the spectral values that produced them.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `n x d`.
    pub rows: DMatrix<f64>,
    /// Eigen- or singular values, descending by magnitude.
    pub values: Vec<f64>,
    pub kind: EmbeddingKind,
    pub source_hash: String,
    /// Sign of each eigenvalue (all `+1` for singular values).
    pub signature: Vec<f64>,
    /// Original node id of each row, when rows were dropped or reordered.
    pub node_map: Option<Vec<usize>>,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    /// `X X^T`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.rows * self.rows.transpose()
    }

    /// `X S X^T` with `S` the eigenvalue signature.
    pub fn indefinite_gram(&self) -> DMatrix<f64> {
        let mut scaled = self.rows.clone();
        for (mut c, s) in scaled.column_iter_mut().zip(&self.signature) {
            c *= *s;
        }
        scaled * self.rows.transpose()
    }
}

fn embed_from_pairs(
    op: &(impl SymmetricOperator + ?Sized),
    d: usize,
    kind: EmbeddingKind,
    source_hash: String,
    opts: &EigenOptions,
) -> Result<Embedding> {
    let n = op.dim();
    if d == 0 || d > n {
        return Err(Error::InvalidParameter(format!("embedding dimension {d} not in 1..={n}")));
    }
    let pairs = symmetric_eigs(op, d, Which::LargestMagnitude, opts)?;
    let mut rows = pairs.vectors;
    for (mut c, v) in rows.column_iter_mut().zip(&pairs.values) {
        c *= v.abs().sqrt();
    }
    Ok(Embedding {
        rows,
        signature: pairs.values.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect(),
        values: pairs.values,
        kind,
        source_hash,
        node_map: None,
    })
}

/// Adjacency spectral embedding: top-`d` eigenvectors by magnitude scaled by
/// `|lambda|^{1/2}`.
pub fn ase(g: &SparseGraph, d: usize) -> Result<Embedding> {
    ase_with(g, d, &EigenOptions::default())
}

pub fn ase_with(g: &SparseGraph, d: usize, opts: &EigenOptions) -> Result<Embedding> {
    embed_from_pairs(g, d, EmbeddingKind::Ase, g.fingerprint(), opts)
}

/// ASE of an explicit symmetric matrix (e.g. a probability matrix).
pub fn ase_matrix(p: &DMatrix<f64>, d: usize, opts: &EigenOptions) -> Result<Embedding> {
    if p.nrows() != p.ncols() {
        return Err(Error::DimensionMismatch(format!("{}x{} matrix is not square", p.nrows(), p.ncols())));
    }
    embed_from_pairs(p, d, EmbeddingKind::Ase, String::new(), opts)
}

/// Laplacian spectral embedding: ASE of `D^{-1/2} A D^{-1/2}`. Isolated
/// nodes are dropped; `node_map` then lists the retained original ids.
pub fn lse(g: &SparseGraph, d: usize) -> Result<Embedding> {
    lse_with(g, d, &EigenOptions::default())
}

pub fn lse_with(g: &SparseGraph, d: usize, opts: &EigenOptions) -> Result<Embedding> {
    let keep: Vec<usize> = (0..g.n()).filter(|&i| g.degree(i) > 0).collect();
    if keep.is_empty() {
        return Err(Error::Empty("every node is isolated".into()));
    }
    let dropped = g.n() - keep.len();
    let hash = g.fingerprint();
    let mut emb = if dropped > 0 {
        log::warn!("LSE: dropping {dropped} isolated node(s)");
        let sub = g.induced_subgraph(&keep)?;
        let op = NormalizedAdjacency::new(&sub)?;
        embed_from_pairs(&op, d, EmbeddingKind::Lse, hash, opts)?
    } else {
        let op = NormalizedAdjacency::new(g)?;
        embed_from_pairs(&op, d, EmbeddingKind::Lse, hash, opts)?
    };
    if dropped > 0 {
        emb.node_map = Some(keep);
    }
    Ok(emb)
}

/// Left and right singular embeddings `U S^{1/2}`, `V S^{1/2}` of a
/// rectangular matrix.
pub fn slice_svd<M: LinearOperator + ?Sized>(slice: &M, d: usize) -> Result<(Embedding, Embedding)> {
    slice_svd_with(slice, d, &EigenOptions::default())
}

pub fn slice_svd_with<M: LinearOperator + ?Sized>(slice: &M, d: usize, opts: &EigenOptions) -> Result<(Embedding, Embedding)> {
    let (s, mut u, mut v) = singular_triplets(slice, d, opts)?;
    for (c, sv) in s.iter().enumerate() {
        let w = sv.sqrt();
        u.column_mut(c).scale_mut(w);
        v.column_mut(c).scale_mut(w);
    }
    let make = |rows, kind| Embedding {
        rows,
        values: s.clone(),
        kind,
        source_hash: String::new(),
        signature: vec![1.0; d],
        node_map: None,
    };
    Ok((make(u, EmbeddingKind::SliceLeft), make(v, EmbeddingKind::SliceRight)))
}

/// Top singular values, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Scree {
    pub values: Vec<f64>,
}

impl Scree {
    pub fn m(&self) -> usize {
        self.values.len()
    }

    /// `s_i / s_{i+1}` with 1-based `i`.
    pub fn ratio(&self, i: usize) -> f64 {
        self.values[i - 1] / self.values[i]
    }
}

/// Scree of a rectangular operator.
pub fn scree<M: LinearOperator + ?Sized>(matrix: &M, m: usize) -> Result<Scree> {
    scree_with(matrix, m, &EigenOptions::default())
}

pub fn scree_with<M: LinearOperator + ?Sized>(matrix: &M, m: usize, opts: &EigenOptions) -> Result<Scree> {
    let (s, _, _) = singular_triplets(matrix, m, opts)?;
    Ok(Scree { values: s })
}

/// Scree of a symmetric operator: its singular values are `|lambda|`.
pub fn symmetric_scree<A: SymmetricOperator + ?Sized>(op: &A, m: usize) -> Result<Scree> {
    symmetric_scree_with(op, m, &EigenOptions::default())
}

pub fn symmetric_scree_with<A: SymmetricOperator + ?Sized>(op: &A, m: usize, opts: &EigenOptions) -> Result<Scree> {
    let pairs = symmetric_eigs(op, m, Which::LargestMagnitude, opts)?;
    let mut values: Vec<f64> = pairs.values.iter().map(|v| v.abs()).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(Scree { values })
}

/// Result of an orthogonal Procrustes fit.
#[derive(Debug, Clone)]
pub struct Procrustes {
    pub aligned: Embedding,
    /// Orthogonal `d x d` map applied on the right.
    pub rotation: DMatrix<f64>,
    /// `||source W - target||_F`.
    pub residual: f64,
}

/// Finds the orthogonal `W` (reflections allowed) minimizing
/// `||source W - target||_F`.
pub fn procrustes_align(source: &Embedding, target: &DMatrix<f64>) -> Result<Procrustes> {
    if source.rows.shape() != target.shape() {
        return Err(Error::DimensionMismatch(format!(
            "source is {:?}, target is {:?}",
            source.rows.shape(),
            target.shape()
        )));
    }
    let cross = source.rows.tr_mul(target);
    let svd = cross
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("Procrustes SVD did not converge".into()))?;
    let rotation = svd.u.expect("requested") * svd.v_t.expect("requested");
    let rows = &source.rows * &rotation;
    let residual = (&rows - target).norm();
    let mut aligned = source.clone();
    aligned.rows = rows;
    Ok(Procrustes {
        aligned,
        rotation,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::{CsrMatrix, Method};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn krylov() -> EigenOptions {
        EigenOptions {
            method: Method::Krylov,
            ..Default::default()
        }
    }

    fn plain(rows: DMatrix<f64>) -> Embedding {
        let d = rows.ncols();
        Embedding {
            rows,
            values: vec![1.0; d],
            kind: EmbeddingKind::Ase,
            source_hash: String::new(),
            signature: vec![1.0; d],
            node_map: None,
        }
    }

    #[test]
    fn rank_one_ase() {
        let x = DMatrix::from_column_slice(2, 1, &[0.6, 0.8]);
        let p = &x * x.transpose();
        let e = ase_matrix(&p, 1, &krylov()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        assert!((e.rows[0] - 0.6).abs() < 1e-12 && (e.rows[1] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn two_block_probability_matrix_reconstructed() {
        let p = DMatrix::from_fn(6, 6, |i, j| if (i < 3) == (j < 3) { 0.5 } else { 0.1 });
        let e = ase_matrix(&p, 2, &krylov()).unwrap();
        assert!((e.gram() - &p).amax() < 1e-8);
    }

    #[test]
    fn full_rank_ase_reconstructs_up_to_negative_spectrum() {
        let g = SparseGraph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)], false).unwrap();
        let a = SymmetricOperator::to_dense(&g);
        let e = ase_with(&g, 6, &krylov()).unwrap();
        assert!((e.indefinite_gram() - &a).amax() < 1e-8);
        let eig = a.clone().symmetric_eigen();
        let neg: f64 = eig.eigenvalues.iter().filter(|v| **v < 0.0).map(|v| v * v).sum();
        let got = (e.gram() - &a).norm();
        assert!((got - (4.0 * neg).sqrt()).abs() < 1e-8, "{got} vs {}", (4.0 * neg).sqrt());
    }

    #[test]
    fn lse_of_triangle() {
        let g = SparseGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)], false).unwrap();
        let e = lse(&g, 1).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-12);
        for i in 0..3 {
            assert!((e.rows[i] - 1.0 / 3f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn lse_regular_graph_is_scaled_ase() {
        // 6-cycle is 2-regular
        let edges: Vec<_> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
        let g = SparseGraph::from_edges(6, &edges, false).unwrap();
        let a = ase_with(&g, 1, &krylov()).unwrap();
        let l = lse_with(&g, 1, &krylov()).unwrap();
        for i in 0..6 {
            assert!((l.rows[i] - a.rows[i] / 2f64.sqrt()).abs() < 1e-10);
        }
    }

    #[test]
    fn lse_drops_isolated_nodes() {
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0)], false).unwrap();
        let e = lse(&g, 1).unwrap();
        assert_eq!(e.n(), 3);
        assert_eq!(e.node_map.as_deref(), Some(&[0, 1, 2][..]));
        assert!(lse(&SparseGraph::empty(3), 1).is_err());
    }

    #[test]
    fn slice_svd_rank_one() {
        let a = DMatrix::from_column_slice(3, 1, &[1.0, 2.0, 2.0]);
        let b = DMatrix::from_column_slice(4, 1, &[0.5, 0.0, 1.0, 1.0]);
        let m = &a * b.transpose();
        let (l, r) = slice_svd_with(&CsrMatrix::from_dense(&m), 1, &krylov()).unwrap();
        let recon = &l.rows * r.rows.transpose();
        assert!((recon - &m).amax() < 1e-10);
        let cos = (l.rows.column(0).dot(&a.column(0)) / (l.rows.norm() * a.norm())).abs();
        assert!((cos - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scree_of_identity_and_rank_two() {
        let s = scree_with(&DMatrix::<f64>::identity(5, 5), 5, &krylov()).unwrap();
        assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = DMatrix::from_fn(6, 2, |_, _| rng.random::<f64>());
        let v = DMatrix::from_fn(5, 2, |_, _| rng.random::<f64>());
        let m = u * v.transpose();
        for method in [Method::Krylov, Method::Dense] {
            let s = scree_with(&m, 4, &EigenOptions { method, ..Default::default() }).unwrap();
            assert!(s.values[2] < 1e-10 && s.values[3] < 1e-10, "{:?}", s.values);
        }
    }

    #[test]
    fn procrustes_recovers_rotation_and_reflection() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let src = DMatrix::from_fn(30, 2, |_, _| rng.random::<f64>() - 0.5);
        let (c, s) = (0.7f64.cos(), 0.7f64.sin());
        let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        let tgt = &src * &rot;
        let p = procrustes_align(&plain(src.clone()), &tgt).unwrap();
        assert!(p.residual < 1e-10);
        assert!((p.rotation - rot).amax() < 1e-10);
        let mut flipped = src.clone();
        flipped.column_mut(1).neg_mut();
        assert!(procrustes_align(&plain(src), &flipped).unwrap().residual < 1e-10);
    }

    #[test]
    fn procrustes_matches_angle_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let src = DMatrix::from_fn(25, 2, |_, _| rng.random::<f64>() - 0.5);
        let tgt = DMatrix::from_fn(25, 2, |_, _| rng.random::<f64>() - 0.5);
        let p = procrustes_align(&plain(src.clone()), &tgt).unwrap();
        let residual_at = |theta: f64, reflect: bool| {
            let (c, s) = (theta.cos(), theta.sin());
            let f = if reflect { -1.0 } else { 1.0 };
            let w = DMatrix::from_row_slice(2, 2, &[c, -s * f, s, c * f]);
            (&src * w - &tgt).norm()
        };
        let mut best = f64::INFINITY;
        for reflect in [false, true] {
            // coarse grid then golden-section refinement
            let steps = 3600;
            let h = std::f64::consts::TAU / steps as f64;
            let (mut arg, mut val) = (0.0, f64::INFINITY);
            for i in 0..steps {
                let r = residual_at(i as f64 * h, reflect);
                if r < val {
                    val = r;
                    arg = i as f64 * h;
                }
            }
            let (mut a, mut b) = (arg - h, arg + h);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if residual_at(c, reflect) < residual_at(d, reflect) {
                    b = d;
                } else {
                    a = c;
                }
            }
            best = best.min(residual_at(0.5 * (a + b), reflect));
        }
        assert!((p.residual - best).abs() < 1e-6, "{} vs {best}", p.residual);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        assert!(procrustes_align(&plain(DMatrix::zeros(3, 2)), &DMatrix::zeros(3, 3)).is_err());
        let g = SparseGraph::from_edges(3, &[(0, 1)], false).unwrap();
        assert!(ase(&g, 4).is_err());
    }
}
