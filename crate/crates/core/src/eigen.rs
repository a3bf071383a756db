//! Truncated symmetric eigensolver (thick-restart Lanczos in Krylov–Schur
//! form) and the operator abstractions it runs on.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;

const START_SEED: u64 = 0x5eed_1a2c;
const MIN_PARALLEL_ROWS: usize = 2048;

/// A real symmetric linear operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut y);
            m.set_column(j, &DVector::from_column_slice(&y));
            e[j] = 0.0;
        }
        m
    }
}

/// A real rectangular linear operator.
pub trait LinearOperator: Sync {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `y = A x`, `x` of length `ncols`.
    fn apply(&self, x: &[f64], y: &mut [f64]);
    /// `y = A^T x`, `x` of length `nrows`.
    fn apply_transpose(&self, x: &[f64], y: &mut [f64]);

    fn to_dense(&self) -> DMatrix<f64> {
        let (m, n) = (self.nrows(), self.ncols());
        let mut out = DMatrix::zeros(m, n);
        let mut e = vec![0.0; n];
        let mut y = vec![0.0; m];
        for j in 0..n {
            e[j] = 1.0;
            self.apply(&e, &mut y);
            out.set_column(j, &DVector::from_column_slice(&y));
            e[j] = 0.0;
        }
        out
    }
}

fn par_rows<F: Fn(usize) -> f64 + Sync + Send>(y: &mut [f64], f: F) {
    if y.len() >= MIN_PARALLEL_ROWS {
        y.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    } else {
        y.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
}

impl SymmetricOperator for SparseGraph {
    fn dim(&self) -> usize {
        self.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        par_rows(y, |i| self.neighbors(i).iter().map(|&j| x[j as usize]).sum());
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self * DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

impl LinearOperator for DMatrix<f64> {
    fn nrows(&self) -> usize {
        self.nrows()
    }

    fn ncols(&self) -> usize {
        self.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let r = self * DVector::from_column_slice(x);
        y.copy_from_slice(r.as_slice());
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        let r = self.tr_mul(&DVector::from_column_slice(x));
        y.copy_from_slice(r.as_slice());
    }

    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

/// `D^{-1/2} A D^{-1/2}` for a graph without isolated nodes.
pub struct NormalizedAdjacency<'a> {
    graph: &'a SparseGraph,
    inv_sqrt_degree: Vec<f64>,
}

impl<'a> NormalizedAdjacency<'a> {
    pub fn new(graph: &'a SparseGraph) -> Result<Self> {
        let inv_sqrt_degree = (0..graph.n())
            .map(|i| match graph.degree(i) {
                0 => Err(Error::IsolatedNode(i)),
                d => Ok(1.0 / (d as f64).sqrt()),
            })
            .collect::<Result<_>>()?;
        Ok(Self { graph, inv_sqrt_degree })
    }
}

impl SymmetricOperator for NormalizedAdjacency<'_> {
    fn dim(&self) -> usize {
        self.graph.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let s = &self.inv_sqrt_degree;
        par_rows(y, |i| {
            s[i] * self.graph.neighbors(i).iter().map(|&j| s[j as usize] * x[j as usize]).sum::<f64>()
        });
    }
}

/// Real sparse matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// From `(row, col, value)` triplets; repeated positions are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut t = triplets.to_vec();
        for &(r, c, _) in &t {
            if r >= nrows || c >= ncols {
                return Err(Error::DimensionMismatch(format!("entry ({r}, {c}) outside {nrows}x{ncols}")));
            }
        }
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut offsets = vec![0usize; nrows + 1];
        let mut indices = Vec::with_capacity(t.len());
        let mut values: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            indices.push(c);
            values.push(v);
            offsets[r + 1] += 1;
            last = Some((r, c));
        }
        for i in 0..nrows {
            offsets[i + 1] += offsets[i];
        }
        Ok(Self {
            nrows,
            ncols,
            offsets,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    triplets.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &triplets).expect("in range")
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (idx, val) = self.row(i);
        idx.binary_search(&j).map(|p| val[p]).unwrap_or(0.0)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).1.iter().sum()).collect()
    }

    /// Triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(move |(&j, &v)| (i, j, v))
        })
    }

    /// Sub-matrix with the given columns, renumbered in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> Result<CsrMatrix> {
        let mut pos = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            if c >= self.ncols {
                return Err(Error::DimensionMismatch(format!("column {c} out of range")));
            }
            pos[c] = k;
        }
        let triplets: Vec<_> = self
            .triplets()
            .filter(|&(_, j, _)| pos[j] != usize::MAX)
            .map(|(i, j, v)| (i, pos[j], v))
            .collect();
        CsrMatrix::from_triplets(self.nrows, cols.len(), &triplets)
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        par_rows(y, |i| {
            let (idx, val) = self.row(i);
            idx.iter().zip(val).map(|(&j, &v)| v * x[j]).sum()
        });
    }

    fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.nrows {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                y[j] += v * x[i];
            }
        }
    }
}

/// The symmetric embedding `[[0, A], [A^T, 0]]` of a rectangular operator,
/// whose positive eigenvalues are the singular values of `A`.
pub struct Augmented<'a, M: LinearOperator + ?Sized>(pub &'a M);

impl<M: LinearOperator + ?Sized> SymmetricOperator for Augmented<'_, M> {
    fn dim(&self) -> usize {
        self.0.nrows() + self.0.ncols()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.0.nrows();
        let (xu, xv) = x.split_at(m);
        let (yu, yv) = y.split_at_mut(m);
        self.0.apply(xv, yu);
        self.0.apply_transpose(xu, yv);
    }
}

/// Which end of the spectrum to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    LargestMagnitude,
    LargestAlgebraic,
}

/// Solver selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dense decomposition for small problems, Krylov otherwise.
    Auto,
    Krylov,
    Dense,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Residual tolerance relative to `max(1, |theta|_max)`.
    pub tol: f64,
    pub max_restarts: usize,
    pub method: Method,
    /// Problems of at most this dimension go dense under `Method::Auto`.
    pub dense_threshold: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 1000,
            method: Method::Auto,
            dense_threshold: 400,
        }
    }
}

/// Leading eigenpairs, ordered by the requested criterion.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `n x k`, orthonormal columns.
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
}

fn sort_key(which: Which, v: f64) -> f64 {
    match which {
        Which::LargestMagnitude => v.abs(),
        Which::LargestAlgebraic => v,
    }
}

fn order_indices(values: &[f64], which: Which) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        sort_key(which, values[b])
            .total_cmp(&sort_key(which, values[a]))
            .then(values[b].total_cmp(&values[a]))
    });
    idx
}

/// Makes the largest-magnitude entry of each column positive.
pub(crate) fn fix_signs(vectors: &mut DMatrix<f64>) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0.0f64;
        for &v in col.iter() {
            if v.abs() > best.abs() + 1e-14 * best.abs().max(1.0) {
                best = v;
            }
        }
        if best < 0.0 {
            col.neg_mut();
        }
    }
}

/// The `k` leading eigenpairs of a symmetric operator.
pub fn symmetric_eigs<A: SymmetricOperator + ?Sized>(
    op: &A,
    k: usize,
    which: Which,
    opts: &EigenOptions,
) -> Result<EigenPairs> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of an {n}-dimensional operator")));
    }
    let dense = match opts.method {
        Method::Dense => true,
        Method::Krylov => false,
        Method::Auto => n <= opts.dense_threshold,
    };
    if dense {
        dense_eigs(op.to_dense(), k, which)
    } else {
        krylov_schur(op, k, which, opts)
    }
}

fn dense_eigs(a: DMatrix<f64>, k: usize, which: Which) -> Result<EigenPairs> {
    let n = a.nrows();
    let eig = SymmetricEigen::try_new(a, f64::EPSILON, 0)
        .ok_or_else(|| Error::Decomposition("dense symmetric eigensolver did not converge".into()))?;
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = order_indices(&vals, which);
    let mut vectors = DMatrix::zeros(n, k);
    let mut values = Vec::with_capacity(k);
    for (c, &i) in order.iter().take(k).enumerate() {
        vectors.set_column(c, &eig.eigenvectors.column(i));
        values.push(vals[i]);
    }
    fix_signs(&mut vectors);
    Ok(EigenPairs {
        values,
        vectors,
        residuals: vec![0.0; k],
        restarts: 0,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Classical Gram–Schmidt against `basis`, applied twice. Returns the
/// accumulated coefficients.
fn orthogonalize(basis: &[Vec<f64>], w: &mut [f64]) -> Vec<f64> {
    let mut coeffs = vec![0.0; basis.len()];
    for _ in 0..2 {
        let h: Vec<f64> = if w.len() >= MIN_PARALLEL_ROWS {
            basis.par_iter().map(|v| dot(v, w)).collect()
        } else {
            basis.iter().map(|v| dot(v, w)).collect()
        };
        for (v, &c) in basis.iter().zip(&h) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        for (a, b) in coeffs.iter_mut().zip(&h) {
            *a += b;
        }
    }
    coeffs
}

/// A unit vector orthogonal to `basis`, or `None` if the basis spans the space.
fn random_orthogonal(basis: &[Vec<f64>], n: usize, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
    for _ in 0..5 {
        let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let before = norm(&v);
        orthogonalize(basis, &mut v);
        let nv = norm(&v);
        if nv > 1e-8 * before {
            v.iter_mut().for_each(|x| *x /= nv);
            return Some(v);
        }
    }
    None
}

fn krylov_schur<A: SymmetricOperator + ?Sized>(op: &A, k: usize, which: Which, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = op.dim();
    let m = n.min((2 * k + 1).max(k + 32));
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    basis.push(random_orthogonal(&[], n, &mut rng).expect("nonzero start"));
    let mut t = DMatrix::<f64>::zeros(m, m);
    let mut kept = 0usize;
    let mut anorm = 0.0f64;
    let mut w = vec![0.0; n];

    for restart in 0..=opts.max_restarts {
        // Extend the factorization to m vectors.
        let mut beta = 0.0;
        let mut next: Option<Vec<f64>> = None;
        for j in kept..m {
            op.apply(&basis[j], &mut w);
            anorm = anorm.max(norm(&w));
            let h = orthogonalize(&basis, &mut w);
            for (i, &hi) in h.iter().enumerate() {
                t[(i, j)] = hi;
                t[(j, i)] = hi;
            }
            beta = norm(&w);
            let broke = beta <= 1e-12 * anorm.max(f64::MIN_POSITIVE);
            let v = if broke {
                beta = 0.0;
                if j + 1 < n {
                    random_orthogonal(&basis, n, &mut rng)
                } else {
                    None
                }
            } else {
                Some(w.iter().map(|x| x / beta).collect())
            };
            if j + 1 < m {
                let v = v.ok_or_else(|| Error::Decomposition("Krylov basis exhausted".into()))?;
                t[(j + 1, j)] = beta;
                t[(j, j + 1)] = beta;
                basis.push(v);
            } else {
                next = v;
            }
        }

        let eig = SymmetricEigen::try_new(t.clone(), f64::EPSILON, 0)
            .ok_or_else(|| Error::Decomposition("projected eigenproblem did not converge".into()))?;
        let theta: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let order = order_indices(&theta, which);
        let scale = theta.iter().fold(1.0f64, |a, &b| a.max(b.abs()));
        let residuals: Vec<f64> = order
            .iter()
            .take(k)
            .map(|&i| (beta * eig.eigenvectors[(m - 1, i)]).abs())
            .collect();
        let converged = residuals.iter().all(|&r| r <= opts.tol * scale);

        if converged || restart == opts.max_restarts || next.is_none() {
            let mut vectors = DMatrix::zeros(n, k);
            let mut values = Vec::with_capacity(k);
            for (c, &i) in order.iter().take(k).enumerate() {
                let s = eig.eigenvectors.column(i);
                let mut y = vec![0.0; n];
                for (q, v) in basis.iter().enumerate().take(m) {
                    let sq = s[q];
                    for (yi, vi) in y.iter_mut().zip(v) {
                        *yi += sq * vi;
                    }
                }
                vectors.set_column(c, &DVector::from_vec(y));
                values.push(theta[i]);
            }
            if !converged {
                return Err(Error::NoConvergence {
                    restarts: restart,
                    residuals,
                });
            }
            fix_signs(&mut vectors);
            // Explicit residual check on the assembled vectors.
            let mut explicit = Vec::with_capacity(k);
            for c in 0..k {
                let y: Vec<f64> = vectors.column(c).iter().copied().collect();
                op.apply(&y, &mut w);
                let r: f64 = w.iter().zip(&y).map(|(a, b)| (a - values[c] * b).powi(2)).sum::<f64>().sqrt();
                explicit.push(r);
            }
            if explicit.iter().any(|&r| r > 1e3 * opts.tol * scale) {
                return Err(Error::NoConvergence {
                    restarts: restart,
                    residuals: explicit,
                });
            }
            return Ok(EigenPairs {
                values,
                vectors,
                residuals: explicit,
                restarts: restart,
            });
        }

        // Thick restart: keep the best Ritz vectors plus the residual direction.
        let p = (k + (m - k) / 2).min(m - 1);
        let mut new_basis = Vec::with_capacity(m + 1);
        for &i in order.iter().take(p) {
            let s = eig.eigenvectors.column(i);
            let mut y = vec![0.0; n];
            for (q, v) in basis.iter().enumerate().take(m) {
                let sq = s[q];
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += sq * vi;
                }
            }
            new_basis.push(y);
        }
        let f = next.expect("checked above");
        new_basis.push(f);
        basis = new_basis;
        t.fill(0.0);
        for (c, &i) in order.iter().take(p).enumerate() {
            t[(c, c)] = theta[i];
        }
        kept = p;
        log::trace!("restart {restart}: max residual {:e}", residuals.iter().cloned().fold(0.0, f64::max));
    }
    unreachable!("loop returns on the final restart")
}

/// Leading singular triplets `(s, U, V)` of a rectangular operator.
pub fn singular_triplets<M: LinearOperator + ?Sized>(
    op: &M,
    k: usize,
    opts: &EigenOptions,
) -> Result<(Vec<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (rows, cols) = (op.nrows(), op.ncols());
    if k == 0 || k > rows.min(cols) {
        return Err(Error::InvalidParameter(format!("requested {k} singular values of a {rows}x{cols} matrix")));
    }
    let dense = match opts.method {
        Method::Dense => true,
        Method::Krylov => false,
        Method::Auto => rows.min(cols) <= opts.dense_threshold,
    };
    let (s, mut u, mut v) = if dense {
        let svd = op.to_dense().try_svd(true, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Decomposition("dense SVD did not converge".into()))?;
        let vals: Vec<f64> = svd.singular_values.iter().copied().collect();
        let order = order_indices(&vals, Which::LargestAlgebraic);
        let su = svd.u.expect("requested");
        let svt = svd.v_t.expect("requested");
        let mut u = DMatrix::zeros(rows, k);
        let mut v = DMatrix::zeros(cols, k);
        let mut s = Vec::with_capacity(k);
        for (c, &i) in order.iter().take(k).enumerate() {
            u.set_column(c, &su.column(i));
            v.set_column(c, &svt.row(i).transpose());
            s.push(vals[i]);
        }
        (s, u, v)
    } else {
        let pairs = krylov_schur(&Augmented(op), k, Which::LargestAlgebraic, opts)?;
        let mut u = DMatrix::zeros(rows, k);
        let mut v = DMatrix::zeros(cols, k);
        let mut s = Vec::with_capacity(k);
        for c in 0..k {
            let col = pairs.vectors.column(c);
            let sigma = pairs.values[c].max(0.0);
            let mut uc = col.rows(0, rows).into_owned();
            let mut vc = col.rows(rows, cols).into_owned();
            // Each half carries norm 1/sqrt(2) for sigma > 0.
            let (nu, nv) = (uc.norm(), vc.norm());
            if nu > 0.0 {
                uc /= nu;
            }
            if nv > 0.0 {
                vc /= nv;
            }
            u.set_column(c, &uc);
            v.set_column(c, &vc);
            s.push(sigma);
        }
        (s, u, v)
    };
    // Sign convention on U, carried over to V.
    for c in 0..k {
        let col = u.column(c);
        let mut best = 0.0f64;
        for &x in col.iter() {
            if x.abs() > best.abs() + 1e-14 * best.abs().max(1.0) {
                best = x;
            }
        }
        if best < 0.0 {
            u.column_mut(c).neg_mut();
            v.column_mut(c).neg_mut();
        }
    }
    Ok((s, u, v))
}
