//! Cross-module properties: sampled graphs against oracles, spectral
//! recovery against planted truth, and experiment artifacts.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use irdpg::eigen::{singular_triplets, symmetric_eigs, CsrMatrix, EigenOptions, Method, Which};
use irdpg::experiment::{fig3_low_degree_recovery, run_experiment, ExperimentName, ExperimentSpec, Fig3Params, Fig3Row};
use irdpg::expr::ScaleRule;
use irdpg::graphgen::{derive_seed, sample_graph, sample_graph_from_embedding, sample_latents, Pairing};
use irdpg::kernels::{make_model, make_model_with_scale, ExampleId};
use irdpg::local::{extract_core, latent_ball_core, BallCenter};
use irdpg::oracles::{expected_degree, monte_carlo_rho, rate_fit, rho_quadrature, sum_lambda_cubed, SumMethod, DEFAULT_GRID};
use irdpg::spectral::{ase, ase_matrix, slice_svd};
use irdpg::stats::{count_triangles, graph_stats, mean_and_se, triangle_recovery_curve};
use irdpg::{Error, SparseGraph};

fn sample(ex: ExampleId, scale: f64, n: usize, seed: u64) -> (irdpg::graphgen::LatentSample, SparseGraph) {
    let (latent, kernel) = make_model_with_scale(ex, scale).unwrap();
    let x = sample_latents(&latent, n, derive_seed(seed, 0)).unwrap();
    let g = sample_graph(&x, &kernel, false, derive_seed(seed, 1)).unwrap();
    (x, g)
}

fn random_graph(n: usize, p: f64, seed: u64) -> SparseGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    SparseGraph::from_edges(n, &edges, false).unwrap()
}

#[test]
fn ball_core_grows_at_predicted_orders() {
    // Circle of fixed radius: a fixed arc holds a constant fraction of the
    // nodes, so core size and core degree grow like n and core triangles
    // per core node like n^2.
    let ns = [500usize, 1000, 2000, 4000];
    let (mut size, mut degree, mut delta) = (Vec::new(), Vec::new(), Vec::new());
    for &n in &ns {
        let (mut s, mut d, mut t) = (0.0, 0.0, 0.0);
        let reps = 3;
        for r in 0..reps {
            let (x, g) = sample(ExampleId::Ex2, 3.0, n, 100 + r);
            let ids = latent_ball_core(&x, &BallCenter::Point(vec![3.0, 0.0]), 1.5).unwrap();
            let core = extract_core(&g, &ids).unwrap();
            let st = graph_stats(&core.graph);
            s += ids.len() as f64;
            d += st.avg_degree;
            t += st.triangle_density;
        }
        size.push(s / reps as f64);
        degree.push(d / reps as f64);
        delta.push(t / reps as f64);
    }
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let fits = [
        rate_fit(&x, &size, 1.0, 0.2).unwrap(),
        rate_fit(&x, &degree, 1.0, 0.2).unwrap(),
        rate_fit(&x, &delta, 2.0, 0.3).unwrap(),
    ];
    for f in &fits {
        assert!(f.passes(), "slope {} vs {}", f.slope, f.claimed_slope);
    }
}

#[test]
fn mean_degree_matches_oracle_for_every_example() {
    let n = 400;
    for ex in [
        ExampleId::Ex1,
        ExampleId::Ex2,
        ExampleId::Ex3,
        ExampleId::Ex4,
        ExampleId::Logistic,
        ExampleId::Square2D,
        ExampleId::Graphon,
    ] {
        let rule = ScaleRule::parse(ex.default_scale()).unwrap();
        let (latent, kernel) = make_model(ex, n, &rule).unwrap();
        let rho = rho_quadrature(&latent, &kernel, DEFAULT_GRID).unwrap();
        let rho_se = rho.std_error.unwrap_or(0.0);
        let degs: Vec<f64> = (0..20u64)
            .map(|s| {
                let x = sample_latents(&latent, n, derive_seed(s, 0)).unwrap();
                graph_stats(&sample_graph(&x, &kernel, false, derive_seed(s, 1)).unwrap()).avg_degree
            })
            .collect();
        let (mean, se) = mean_and_se(&degs);
        let target = expected_degree(n, rho.value, false);
        let tol = 3.0 * (se * se + ((n - 1) as f64 * rho_se).powi(2)).sqrt();
        assert!((mean - target).abs() <= tol, "{ex}: mean degree {mean} vs {target} (tol {tol})");
    }
}

#[test]
fn trace_identity_for_one_dimensional_models() {
    for (ex, s) in [
        (ExampleId::Ex1, 1.0),
        (ExampleId::Ex1, 3.0),
        (ExampleId::Ex2, 1.0),
        (ExampleId::Ex2, 2.0),
        (ExampleId::Ex3, 5.0),
        (ExampleId::Logistic, 3.0),
        (ExampleId::Graphon, 0.3),
    ] {
        let (l, k) = make_model_with_scale(ex, s).unwrap();
        let ny = sum_lambda_cubed(&l, &k, SumMethod::Nystrom { grid: 600 }).unwrap().value;
        let mc = sum_lambda_cubed(&l, &k, SumMethod::MonteCarlo { triples: 400_000, seed: 3 }).unwrap();
        let tol = (0.01 * ny.abs()).max(3.0 * mc.std_error.unwrap());
        assert!((ny - mc.value).abs() <= tol, "{ex}({s}): nystrom {ny} vs mc {}", mc.value);
    }
}

#[test]
fn monte_carlo_rho_brackets_quadrature() {
    let (l, k) = make_model_with_scale(ExampleId::Ex1, 1.0).unwrap();
    let q = rho_quadrature(&l, &k, DEFAULT_GRID).unwrap().value;
    let mc = monte_carlo_rho(&l, &k, 10_000_000, 5).unwrap();
    assert!((q - mc.value).abs() < 4.0 * mc.std_error.unwrap());
}

#[test]
fn ase_of_circle_graph_resamples_triangle_density() {
    let (_, g) = sample(ExampleId::Ex2, 1.0, 1000, 21);
    let src = count_triangles(&g) as f64;
    let emb = ase(&g, 3).unwrap();
    let mut total = 0.0;
    for r in 0..5 {
        total += count_triangles(&sample_graph_from_embedding(&emb, Pairing::Symmetric, r).unwrap()) as f64;
    }
    let ratio = total / 5.0 / src;
    assert!((ratio - 1.0).abs() < 0.25, "resampled/source = {ratio}");
}

#[test]
fn recovery_does_not_decrease_with_dimension_on_average() {
    let (mut low, mut high) = (0.0, 0.0);
    for s in 0..20u64 {
        let (_, g) = sample(ExampleId::Square2D, 3.0, 300, 500 + s);
        let curve = triangle_recovery_curve(&g, &[1, 50], 2, s).unwrap();
        low += curve[0].mean_percent;
        high += curve[1].mean_percent;
    }
    assert!(high >= low, "d=50 mean {} < d=1 mean {}", high / 20.0, low / 20.0);
}

fn rows_for<'a>(rows: &'a [Fig3Row], dim: usize, stat: &str) -> Vec<&'a Fig3Row> {
    rows.iter().filter(|r| r.scope == "local" && r.query.is_none() && r.dim == dim && r.stat == stat).collect()
}

#[test]
fn fig3_local_curve_tracks_core_truth() {
    let (_, g) = sample(ExampleId::Square2D, 10.0, 4000, 33);
    let p = Fig3Params {
        k: 100,
        queries: 10,
        global_dims: vec![2],
        local_dims: vec![5],
        resamples: 10,
        caps: vec![10, 15, 20, 30, 40, 50, 60, 100],
        seed: 4,
        signed: false,
    };
    let rows = fig3_low_degree_recovery(&g, &p).unwrap();
    let truth = rows_for(&rows, 0, "p50");
    let fit = rows_for(&rows, 5, "p50");
    assert_eq!(truth.len(), p.caps.len());
    // Relative error is only meaningful where the capped core is
    // triangle-dense; below that both curves must stay triangle-sparse.
    let mut dense = 0;
    for (t, f) in truth.iter().zip(&fit) {
        assert_eq!(t.cap, f.cap);
        if t.density >= 1.0 {
            dense += 1;
            let rel = (f.triangles - t.triangles).abs() / t.triangles;
            assert!(rel <= 0.25, "cap {}: recovered {} vs truth {}", t.cap, f.triangles, t.triangles);
        } else {
            assert!(f.density < 1.0, "cap {}: recovered density {} over sparse truth {}", t.cap, f.density, t.density);
        }
    }
    assert!(dense >= 3);
}

#[test]
fn fig3_full_rank_signed_embedding_is_near_exact() {
    let (_, g) = sample(ExampleId::Square2D, 3.0, 300, 8);
    let k = 30;
    let p = Fig3Params {
        k,
        queries: 3,
        global_dims: vec![1],
        local_dims: vec![k],
        resamples: 2,
        caps: vec![1000],
        seed: 1,
        signed: true,
    };
    let rows = fig3_low_degree_recovery(&g, &p).unwrap();
    let per_query = |dim: usize, stat: &str| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.scope == "local" && r.query.is_some() && r.dim == dim && r.stat == stat)
            .map(|r| r.triangles)
            .collect()
    };
    for (t, f) in per_query(0, "truth").iter().zip(per_query(k, "mean")) {
        assert!(*t > 0.0);
        assert!(f / t >= 0.95, "recovered {f} of {t}");
    }
}

#[test]
fn fig3_errors_on_triangle_free_graph() {
    let g = SparseGraph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)], false).unwrap();
    let p = Fig3Params {
        k: 4,
        queries: 2,
        global_dims: vec![2],
        local_dims: vec![2],
        resamples: 1,
        caps: vec![2],
        seed: 0,
        signed: false,
    };
    assert!(matches!(fig3_low_degree_recovery(&g, &p), Err(Error::NoTriangles)));
}

#[test]
fn block_model_core_cannot_recover_positions() {
    let (a, b, c) = (0.5, 0.2, 0.3);
    let bm = [[a, a, b], [a, a, c], [b, c, a]];
    let size = 20;
    let p = DMatrix::from_fn(2 * size, 3 * size, |i, j| bm[i / size][j / size]);
    let core = p.columns(0, 2 * size).into_owned();
    let core_sv = slice_svd(&CsrMatrix::from_dense(&core), 2).unwrap().0.values;
    let slice_sv = slice_svd(&CsrMatrix::from_dense(&p), 2).unwrap().0.values;
    assert!(core_sv[1] < 1e-10 * core_sv[0], "core rank is not one: {core_sv:?}");
    assert!(slice_sv[1] > 1e-3 * slice_sv[0], "slice rank is not two: {slice_sv:?}");
}

#[test]
fn manifest_artifacts_exist_and_parse() {
    let dir = tempfile::tempdir().unwrap();
    for name in [ExperimentName::GraphonCheck, ExperimentName::Fig1Manifold] {
        let mut spec = ExperimentSpec::defaults(name, false);
        spec.out_dir = dir.path().join(name.name());
        let run = run_experiment(&spec).unwrap();
        let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(&run.manifest_path).unwrap()).unwrap();
        let listed = manifest["artifacts"].as_array().unwrap();
        assert_eq!(listed.len(), run.manifest.artifacts.len());
        for art in &run.manifest.artifacts {
            let path = spec.out_dir.join(&art.file);
            let bytes = std::fs::read(&path).unwrap();
            assert_eq!(format!("{:x}", Sha256::digest(&bytes)), art.sha256);
            let mut rdr = csv::Reader::from_reader(bytes.as_slice());
            let width = rdr.headers().unwrap().len();
            let mut rows = 0;
            for rec in rdr.records() {
                assert_eq!(rec.unwrap().len(), width);
                rows += 1;
            }
            assert_eq!(rows, art.rows, "{}", art.file);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn iterative_solvers_match_dense(n in 30usize..200, p in 0.02f64..0.5, seed in any::<u64>(), k in 1usize..8) {
        let g = random_graph(n, p, seed);
        prop_assume!(g.edge_count() > 0);
        let krylov = EigenOptions { method: Method::Krylov, ..EigenOptions::default() };
        let dense = EigenOptions { method: Method::Dense, ..EigenOptions::default() };
        let a = symmetric_eigs(&g, k, Which::LargestAlgebraic, &krylov).unwrap();
        let b = symmetric_eigs(&g, k, Which::LargestAlgebraic, &dense).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300), "{x} vs {y}");
        }
        let m = n / 3;
        let trip: Vec<(usize, usize, f64)> =
            (0..m).flat_map(|i| g.neighbors(i).iter().map(move |&j| (i, j as usize, 1.0))).collect();
        let slice = CsrMatrix::from_triplets(m, n, &trip).unwrap();
        let (sa, _, _) = singular_triplets(&slice, k.min(m), &krylov).unwrap();
        let (sb, _, _) = singular_triplets(&slice, k.min(m), &dense).unwrap();
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn ase_beats_random_rank_probes(n in 5usize..100, d in 1usize..4, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d + 2, |_, _| rng.random_range(0.0..0.4));
        let p = &x * x.transpose();
        let emb = ase_matrix(&p, d, &EigenOptions::default()).unwrap();
        let best = (emb.gram() - &p).norm();
        for _ in 0..10 {
            let y = DMatrix::from_fn(n, d, |_, _| rng.random_range(-0.5..0.5));
            prop_assert!(best <= (&y * y.transpose() - &p).norm() + 1e-10);
        }
        let perturbed = &emb.rows + DMatrix::from_fn(n, d, |_, _| rng.random_range(-1e-3..1e-3));
        prop_assert!(best <= (&perturbed * perturbed.transpose() - &p).norm() + 1e-10);
    }

    #[test]
    fn noise_free_slice_maps_linearly_to_core_positions(
        n in 30usize..150, d in 1usize..5, frac in 0.2f64..0.8, seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(0.05..0.6));
        let m = ((n as f64 * frac) as usize).max(d);
        let core = x.rows(0, m).into_owned();
        let slice = CsrMatrix::from_dense(&(&core * x.transpose()));
        let (left, _) = slice_svd(&slice, d).unwrap();
        let w = left.rows.clone().svd(true, true).solve(&core, 1e-14).unwrap();
        let residual = (&left.rows * w - &core).norm() / core.norm();
        prop_assert!(residual < 1e-8, "residual {residual}");
    }
}
