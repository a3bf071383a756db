//! Latent-position sampling and conditionally independent edge sampling.
//!
//! Edge draws are split into fixed row blocks and each block draws from its
//! own ChaCha stream keyed by `(seed, block)`, so a graph depends only on the
//! seed and never on the thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::kernels::{std_normal, Domain, KernelModel, LatentModel, Law};
use crate::spectral::Embedding;
use statrs::distribution::ContinuousCDF;

const ROW_BLOCK: usize = 32;

/// Deterministic child seed for sub-task `index` of a run seeded with `base`
/// (SplitMix64 finalizer over the pair).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Latent positions of `n` nodes, row-major `n x dim`.
#[derive(Debug, Clone)]
pub struct LatentSample {
    pub positions: Vec<f64>,
    pub dim: usize,
    pub seed: u64,
    pub model: LatentModel,
}

impl LatentSample {
    pub fn len(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    /// Intrinsic 1-D coordinate of node `i` (angle on the circle).
    pub fn intrinsic_coordinate(&self, i: usize) -> f64 {
        let x = self.row(i);
        match self.model.domain {
            Domain::Circle { radius } => radius * x[1].atan2(x[0]),
            _ => x[0],
        }
    }
}

/// Draws `n` i.i.d. latent positions.
pub fn sample_latents(model: &LatentModel, n: usize, seed: u64) -> Result<LatentSample> {
    if n == 0 {
        return Err(Error::InvalidParameter("cannot sample zero latent positions".into()));
    }
    if let (Law::Gaussian { .. }, Domain::Circle { .. } | Domain::Square { .. } | Domain::Sphere { .. }) =
        (model.law, model.domain)
    {
        return Err(Error::Unsupported("Gaussian law on a 2-D domain".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = model.domain.ambient_dim();
    let mut positions = Vec::with_capacity(n * dim);
    for _ in 0..n {
        positions.extend(draw_point(model, &mut rng));
    }
    Ok(LatentSample {
        positions,
        dim,
        seed,
        model: *model,
    })
}

pub(crate) fn draw_point<R: Rng + ?Sized>(model: &LatentModel, rng: &mut R) -> Vec<f64> {
    let mut out = vec![0.0; model.domain.ambient_dim()];
    draw_point_into(model, rng, &mut out);
    out
}

/// Writes one draw from the latent law into `out` (length = ambient dim).
pub(crate) fn draw_point_into<R: Rng + ?Sized>(model: &LatentModel, rng: &mut R, out: &mut [f64]) {
    match (model.law, model.domain) {
        (Law::Gaussian { sigma }, Domain::Interval { lo, hi }) => {
            let z = std_normal();
            let a = z.cdf(lo / sigma);
            let b = z.cdf(hi / sigma);
            let u: f64 = rng.random();
            out[0] = (sigma * z.inverse_cdf(a + u * (b - a))).clamp(lo, hi);
        }
        (Law::Gaussian { sigma }, _) => {
            let g: f64 = rng.sample(StandardNormal);
            out[0] = sigma * g;
        }
        (Law::Uniform, Domain::Interval { lo, hi }) => out[0] = lo + rng.random::<f64>() * (hi - lo),
        (Law::Uniform, Domain::Line) => panic!("no uniform law on the line"),
        (Law::Uniform, Domain::Circle { radius }) => {
            let t = rng.random::<f64>() * std::f64::consts::TAU;
            out[0] = radius * t.cos();
            out[1] = radius * t.sin();
        }
        (Law::Uniform, Domain::Square { half_width }) => {
            for v in out.iter_mut().take(2) {
                *v = (2.0 * rng.random::<f64>() - 1.0) * half_width;
            }
        }
        (Law::Uniform, Domain::Sphere { radius }) => loop {
            let v: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if norm > 1e-12 {
                for (o, c) in out.iter_mut().zip(v) {
                    *o = radius * c / norm;
                }
                break;
            }
        },
    }
}

/// Draws each pair `i < j` (and `i = j` when `self_loops`) independently
/// with probability `kernel(X_i, X_j)`.
pub fn sample_graph(latents: &LatentSample, kernel: &KernelModel, self_loops: bool, seed: u64) -> Result<SparseGraph> {
    let n = latents.len();
    bernoulli_graph(
        n,
        |i, j| kernel.evaluate(latents.row(i), latents.row(j)),
        self_loops,
        seed,
        true,
    )
}

/// How inner products between embedding rows become probabilities.
#[derive(Debug, Clone, Copy)]
pub enum Pairing<'a> {
    /// `<x_i, x_j>`.
    Symmetric,
    /// `<x_i, y_j>` for `i < j` with `y` the given right factor (rows
    /// aligned with the left embedding).
    LeftRight(&'a Embedding),
    /// `<x_i, S x_j>` with `S` the recorded eigenvalue signature.
    Indefinite,
}

/// Resamples a graph from an embedding, clamping inner products to `[0, 1]`.
/// Never produces self-loops.
pub fn sample_graph_from_embedding(embedding: &Embedding, pairing: Pairing<'_>, seed: u64) -> Result<SparseGraph> {
    let n = embedding.rows.nrows();
    let d = embedding.rows.ncols();
    if embedding.rows.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("embedding has non-finite entries".into()));
    }
    let left = row_major(&embedding.rows);
    let right = match pairing {
        Pairing::Symmetric => left.clone(),
        Pairing::LeftRight(r) => {
            if r.rows.nrows() != n || r.rows.ncols() != d {
                return Err(Error::DimensionMismatch(format!(
                    "left is {n}x{d}, right is {}x{}",
                    r.rows.nrows(),
                    r.rows.ncols()
                )));
            }
            row_major(&r.rows)
        }
        Pairing::Indefinite => {
            let mut r = left.clone();
            for row in r.chunks_mut(d) {
                for (v, s) in row.iter_mut().zip(&embedding.signature) {
                    *v *= s;
                }
            }
            r
        }
    };
    bernoulli_graph(
        n,
        |i, j| {
            let a = &left[i * d..(i + 1) * d];
            let b = &right[j * d..(j + 1) * d];
            a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>().clamp(0.0, 1.0)
        },
        false,
        seed,
        false,
    )
}

pub(crate) fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Core edge sampler over row blocks.
pub(crate) fn bernoulli_graph<F>(n: usize, prob: F, self_loops: bool, seed: u64, check: bool) -> Result<SparseGraph>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let blocks = n.div_ceil(ROW_BLOCK);
    // upper[i] holds j >= i
    let upper: Vec<Vec<Vec<u32>>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let lo = b * ROW_BLOCK;
            let hi = (lo + ROW_BLOCK).min(n);
            let mut rows = Vec::with_capacity(hi - lo);
            for i in lo..hi {
                let mut row = Vec::new();
                let start = if self_loops { i } else { i + 1 };
                for j in start..n {
                    let p = prob(i, j);
                    if check && !(0.0..=1.0).contains(&p) {
                        return Err(Error::KernelOutOfRange { i, j, value: p });
                    }
                    if rng.random::<f64>() < p {
                        row.push(j as u32);
                    }
                }
                rows.push(row);
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut i = 0;
    for block in upper {
        for up in block {
            for &j in &up {
                if j as usize != i {
                    rows[j as usize].push(i as u32);
                }
            }
            rows[i].extend_from_slice(&up);
            i += 1;
        }
    }
    Ok(SparseGraph::from_rows(rows, self_loops))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_model_with_scale, ExampleId, KernelKind};
    use crate::spectral::{Embedding, EmbeddingKind};
    use nalgebra::DMatrix;

    #[test]
    fn circle_latents_lie_on_circle_and_centre() {
        let lat = LatentModel::uniform_circle(1.0).unwrap();
        let s = sample_latents(&lat, 100_000, 3).unwrap();
        let mut mean = [0.0, 0.0];
        for i in 0..s.len() {
            let r = s.row(i);
            assert!(((r[0] * r[0] + r[1] * r[1]).sqrt() - 1.0).abs() < 1e-12);
            mean[0] += r[0];
            mean[1] += r[1];
        }
        let n = s.len() as f64;
        // coordinate variance is 1/2 on the unit circle
        let se = (0.5 / n).sqrt();
        assert!((mean[0] / n).abs() < 4.0 * se);
        assert!((mean[1] / n).abs() < 4.0 * se);
    }

    #[test]
    fn truncated_gaussian_variance() {
        // N(0,1) truncated to [-1, 1]: var = 1 - 2 phi(1) / (2 Phi(1) - 1)
        let lat = LatentModel::truncated_gaussian(1.0).unwrap();
        let s = sample_latents(&lat, 200_000, 11).unwrap();
        let phi1 = (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mass = std_normal().cdf(1.0) - std_normal().cdf(-1.0);
        let var = 1.0 - 2.0 * phi1 / mass;
        let xs: Vec<f64> = s.positions.clone();
        assert!(xs.iter().all(|x| x.abs() <= 1.0));
        let n = xs.len() as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
        let se = ((m4 - m2 * m2) / n).sqrt();
        assert!((m2 - var).abs() < 3.0 * se, "{m2} vs {var} (se {se})");
    }

    #[test]
    fn zero_nodes_rejected() {
        let lat = LatentModel::uniform_circle(1.0).unwrap();
        assert!(sample_latents(&lat, 0, 0).is_err());
    }

    #[test]
    fn sphere_and_square_samples_in_domain() {
        for lat in [LatentModel::uniform_sphere(3.0).unwrap(), LatentModel::uniform_square(2.0).unwrap()] {
            let s = sample_latents(&lat, 1000, 5).unwrap();
            for i in 0..s.len() {
                assert!(lat.domain.contains(s.row(i), 1e-12));
            }
        }
    }

    #[test]
    fn constant_kernels_give_complete_and_empty_graphs() {
        let lat = LatentModel::uniform_interval(0.0, 1.0).unwrap();
        let s = sample_latents(&lat, 5, 0).unwrap();
        let one = KernelModel::new(KernelKind::GraphonConstant { rho: 1.0 });
        let g = sample_graph(&s, &one, false, 1).unwrap();
        assert_eq!(g.edge_count(), 10);
        g.validate().unwrap();
        let g = sample_graph(&s, &one, true, 1).unwrap();
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.self_loop_count(), 5);
        g.validate().unwrap();
        let zero = KernelModel::new(KernelKind::GraphonConstant { rho: 0.0 });
        assert_eq!(sample_graph(&s, &zero, false, 1).unwrap().edge_count(), 0);
    }

    #[test]
    fn out_of_range_kernel_is_reported() {
        let lat = LatentModel::uniform_interval(0.0, 1.0).unwrap();
        let s = sample_latents(&lat, 4, 0).unwrap();
        let bad = KernelModel::new(KernelKind::GraphonConstant { rho: 1.5 });
        match sample_graph(&s, &bad, false, 0) {
            Err(Error::KernelOutOfRange { i, j, value }) => {
                assert_eq!((i, j), (0, 1));
                assert_eq!(value, 1.5);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generation_is_reproducible_across_thread_counts() {
        let (lat, ker) = make_model_with_scale(ExampleId::Ex2, 1.5).unwrap();
        let s = sample_latents(&lat, 300, 9).unwrap();
        let a = sample_graph(&s, &ker, false, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| sample_graph(&s, &ker, false, 42).unwrap());
        let pool1 = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool1.install(|| sample_graph(&s, &ker, false, 42).unwrap());
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(a, sample_graph(&s, &ker, false, 43).unwrap());
    }

    #[test]
    fn single_pair_frequency_matches_kernel() {
        let (lat, ker) = make_model_with_scale(ExampleId::Ex3, 3.0).unwrap();
        let s = sample_latents(&lat, 6, 2).unwrap();
        let p = ker.evaluate(s.row(0), s.row(1));
        let reps = 10_000;
        let hits = (0..reps)
            .filter(|&r| sample_graph(&s, &ker, false, r as u64).unwrap().has_edge(0, 1))
            .count();
        let freq = hits as f64 / reps as f64;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((freq - p).abs() < 4.0 * se, "{freq} vs {p}");
    }

    fn embedding(rows: DMatrix<f64>) -> Embedding {
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
    fn zero_embedding_gives_empty_graph() {
        let e = embedding(DMatrix::zeros(20, 3));
        assert_eq!(sample_graph_from_embedding(&e, Pairing::Symmetric, 0).unwrap().edge_count(), 0);
    }

    #[test]
    fn rank_one_factorization_expected_edges() {
        let n = 40;
        let x = DMatrix::from_fn(n, 1, |i, _| 0.2 + 0.6 * i as f64 / n as f64);
        let e = embedding(x.clone());
        let mut expected = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                expected += x[i] * x[j];
            }
        }
        let reps = 400;
        let mut total = 0usize;
        for r in 0..reps {
            total += sample_graph_from_embedding(&e, Pairing::Symmetric, r).unwrap().edge_count();
        }
        let mean = total as f64 / reps as f64;
        // variance of the edge count is sum p(1-p) <= expected
        let se = (expected / reps as f64).sqrt();
        assert!((mean - expected).abs() < 4.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn left_right_pairing_shape_checked() {
        let a = embedding(DMatrix::zeros(5, 2));
        let b = embedding(DMatrix::zeros(4, 2));
        assert!(sample_graph_from_embedding(&a, Pairing::LeftRight(&b), 0).is_err());
    }
}
