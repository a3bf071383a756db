//! Experiment drivers. Each experiment produces long-format CSV tables
//! and a `manifest.json` describing parameters, seeds, runtimes and
//! artifact checksums.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample as sample_indices;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::ScaleRule;
use crate::graph::SparseGraph;
use crate::graphgen::{derive_seed, sample_graph, sample_graph_from_embedding, sample_latents, LatentSample, Pairing};
use crate::io::{ingest_edge_list, Config, EdgeFormat};
use crate::kernels::{circle_feature_map, make_model, nystrom_features, Domain, ExampleId, FeatureMap, KernelKind, KernelModel, LatentModel};
use crate::local::{common_neighbor_neighborhood, extract_core, extract_cp_slice, CorePeripherySlice};
use crate::oracles::{delta_n, expected_degree, rho_delta_quadrature};
use crate::spectral::{ase, procrustes_align, scree, slice_svd, symmetric_scree, Scree};
use crate::stats::{count_triangles, graph_stats, low_degree_profile, mean_and_se, triangle_recovery_curve, RecoveryPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentName {
    Fig1Manifold,
    Fig2LocalVsGlobal,
    Fig3LowDegree,
    AppendixConstantRegime,
    AppendixHistograms,
    GraphonCheck,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Fig1Manifold,
        ExperimentName::Fig2LocalVsGlobal,
        ExperimentName::Fig3LowDegree,
        ExperimentName::AppendixConstantRegime,
        ExperimentName::AppendixHistograms,
        ExperimentName::GraphonCheck,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentName::Fig1Manifold => "fig1_manifold",
            ExperimentName::Fig2LocalVsGlobal => "fig2_local_vs_global",
            ExperimentName::Fig3LowDegree => "fig3_low_degree",
            ExperimentName::AppendixConstantRegime => "appendix_constant_regime",
            ExperimentName::AppendixHistograms => "appendix_histograms",
            ExperimentName::GraphonCheck => "graphon_check",
        }
    }
}

impl fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {s:?}")))
    }
}

/// Parameters of one experiment run. Not every field applies to every
/// experiment; unused ones are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub seed: u64,
    pub replicates: usize,
    pub n_values: Vec<usize>,
    pub examples: Vec<ExampleId>,
    /// Scale rules aligned with `examples`; sparsity rules for `graphon_check`.
    pub scales: Vec<String>,
    /// Global embedding dimensions.
    pub dims: Vec<usize>,
    /// Core / core-periphery embedding dimensions.
    pub local_dims: Vec<usize>,
    pub k: usize,
    pub resamples: usize,
    pub queries: usize,
    pub degree_caps: Vec<usize>,
    pub scree_m: usize,
    /// Quadrature nodes per axis, or Nyström grid size for `fig1_manifold`.
    pub grid: usize,
    /// Resample local embeddings with the eigenvalue-signed product.
    pub signed: bool,
    pub full_scale: bool,
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

impl ExperimentSpec {
    /// Desk-scale defaults, or the original-size parameters when `full_scale`.
    pub fn defaults(name: ExperimentName, full_scale: bool) -> Self {
        let mut s = ExperimentSpec {
            name,
            seed: 1,
            replicates: 1,
            n_values: vec![2000],
            examples: vec![],
            scales: vec![],
            dims: vec![],
            local_dims: vec![],
            k: 100,
            resamples: 10,
            queries: 10,
            degree_caps: vec![],
            scree_m: 100,
            grid: 256,
            signed: false,
            full_scale,
            input: None,
            out_dir: PathBuf::from("out").join(name.name()),
        };
        match name {
            ExperimentName::Fig1Manifold => {
                s.examples = vec![ExampleId::Ex1, ExampleId::Ex2, ExampleId::Logistic];
                s.scales = strings(&["n/2000", "n/2000", "3"]);
                s.dims = vec![3];
                s.grid = 400;
            }
            ExperimentName::Fig2LocalVsGlobal => {
                s.examples = vec![ExampleId::Square2D];
                s.scales = strings(&["10"]);
                s.n_values = vec![if full_scale { 20_000 } else { 5000 }];
                s.replicates = if full_scale { 1 } else { 10 };
                s.dims = if full_scale { vec![1, 2, 3, 5, 10, 20, 50, 100] } else { vec![1, 2, 3, 5, 10, 20] };
                s.local_dims = (1..=10).collect();
            }
            ExperimentName::Fig3LowDegree => {
                s.examples = vec![ExampleId::Square2D];
                s.scales = strings(&["10"]);
                s.n_values = vec![if full_scale { 20_000 } else { 5000 }];
                s.k = if full_scale { 500 } else { 100 };
                s.queries = if full_scale { 50 } else { 10 };
                s.resamples = if full_scale { 100 } else { 10 };
                s.dims = if full_scale { vec![8, 16, 32, 64, 128] } else { vec![2, 5, 10, 20] };
                s.local_dims = if full_scale { vec![1, 2, 4, 8, 16] } else { vec![1, 2, 3, 5] };
                s.degree_caps = vec![5, 10, 15, 20, 25, 30, 40, 50, 60, 80, 100, 150, 200, 300, 500];
            }
            ExperimentName::AppendixConstantRegime => {
                s.examples = vec![ExampleId::Ex1, ExampleId::Ex2];
                s.scales = strings(&["n/20", "n/50"]);
                s.n_values = if full_scale { vec![500, 1000, 2000, 3000, 5000, 10_000] } else { vec![500, 1000, 2000, 3000] };
                s.replicates = 20;
            }
            ExperimentName::AppendixHistograms => {
                s.examples = vec![ExampleId::Ex1, ExampleId::Ex2];
                s.scales = strings(&["n/20", "n/50"]);
                s.n_values = vec![500];
                s.replicates = 100;
            }
            ExperimentName::GraphonCheck => {
                s.examples = vec![ExampleId::Graphon];
                s.scales = strings(&["n^(-1)", "n^(-2/3)"]);
                s.n_values = vec![1000];
                s.replicates = 20;
            }
        }
        s
    }

    /// Defaults for `name` with every key present in `cfg` applied.
    pub fn from_config(name: ExperimentName, cfg: &Config) -> Result<Self> {
        let full = cfg.get_parsed::<bool>("full_scale")?.unwrap_or(false);
        let mut s = Self::defaults(name, full);
        s.apply(cfg)?;
        Ok(s)
    }

    pub fn apply(&mut self, cfg: &Config) -> Result<()> {
        const KNOWN: [&str; 18] = [
            "seed", "replicates", "n", "examples", "scales", "dims", "local_dims", "k", "resamples", "queries",
            "degree_caps", "scree_m", "grid", "signed", "full_scale", "input", "out_dir", "experiment",
        ];
        for key in cfg.keys() {
            if !KNOWN.contains(&key) && !key.contains('.') {
                log::warn!("ignoring unknown config key {key:?}");
            }
        }
        macro_rules! set {
            ($key:literal, $field:expr, parsed) => {
                if let Some(v) = cfg.get_parsed($key)? {
                    $field = v;
                }
            };
            ($key:literal, $field:expr, list) => {
                if let Some(v) = cfg.get_list($key)? {
                    $field = v;
                }
            };
        }
        set!("seed", self.seed, parsed);
        set!("replicates", self.replicates, parsed);
        set!("n", self.n_values, list);
        set!("examples", self.examples, list);
        set!("scales", self.scales, list);
        set!("dims", self.dims, list);
        set!("local_dims", self.local_dims, list);
        set!("k", self.k, parsed);
        set!("resamples", self.resamples, parsed);
        set!("queries", self.queries, parsed);
        set!("degree_caps", self.degree_caps, list);
        set!("scree_m", self.scree_m, parsed);
        set!("grid", self.grid, parsed);
        set!("signed", self.signed, parsed);
        set!("full_scale", self.full_scale, parsed);
        if let Some(p) = cfg.get("input") {
            self.input = Some(PathBuf::from(p));
        }
        if let Some(p) = cfg.get("out_dir") {
            self.out_dir = PathBuf::from(p);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.replicates == 0 {
            return bad("replicates must be positive".into());
        }
        if self.n_values.is_empty() || self.n_values.iter().any(|&n| n < 3) {
            return bad(format!("node counts must be at least 3, got {:?}", self.n_values));
        }
        if self.name != ExperimentName::GraphonCheck && self.scales.len() != self.examples.len() {
            return bad(format!("{} scale rules for {} examples", self.scales.len(), self.examples.len()));
        }
        for s in &self.scales {
            ScaleRule::parse(s)?;
        }
        if matches!(self.name, ExperimentName::Fig2LocalVsGlobal | ExperimentName::Fig3LowDegree) {
            if self.resamples == 0 {
                return bad("resamples must be positive".into());
            }
            if self.k < 2 {
                return bad(format!("neighbourhood size {} too small", self.k));
            }
        }
        Ok(())
    }

    /// Flat parameter listing, usable as a config file.
    pub fn parameters(&self) -> BTreeMap<String, String> {
        fn join<T: ToString>(v: &[T]) -> String {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        let mut m = BTreeMap::new();
        m.insert("experiment".into(), self.name.name().into());
        m.insert("seed".into(), self.seed.to_string());
        m.insert("replicates".into(), self.replicates.to_string());
        m.insert("n".into(), join(&self.n_values));
        m.insert("examples".into(), join(&self.examples));
        m.insert("scales".into(), self.scales.join(","));
        m.insert("dims".into(), join(&self.dims));
        m.insert("local_dims".into(), join(&self.local_dims));
        m.insert("k".into(), self.k.to_string());
        m.insert("resamples".into(), self.resamples.to_string());
        m.insert("queries".into(), self.queries.to_string());
        m.insert("degree_caps".into(), join(&self.degree_caps));
        m.insert("scree_m".into(), self.scree_m.to_string());
        m.insert("grid".into(), self.grid.to_string());
        m.insert("signed".into(), self.signed.to_string());
        m.insert("full_scale".into(), self.full_scale.to_string());
        if let Some(p) = &self.input {
            m.insert("input".into(), p.display().to_string());
        }
        m.insert("out_dir".into(), self.out_dir.display().to_string());
        m
    }

    fn example_rules(&self) -> Result<Vec<(ExampleId, ScaleRule, String)>> {
        self.examples
            .iter()
            .zip(&self.scales)
            .map(|(&e, s)| Ok((e, ScaleRule::parse(s)?, s.clone())))
            .collect()
    }
}

// ---------------------------------------------------------------- tables

/// An in-memory CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, header: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            header: strings(header),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_str()).collect())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(crate::io::csv_err)?;
        for r in &self.rows {
            w.write_record(r).map_err(crate::io::csv_err)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }
}

/// Shortest round-trip decimal form, so output is platform independent.
fn num(v: f64) -> String {
    format!("{v}")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Seed of a nested replicate: `derive_seed` applied along `path`.
fn nested_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(base, |s, &i| derive_seed(s, i))
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub rows: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub crate_name: String,
    pub crate_version: String,
    pub seed: u64,
    pub replicate_seeds: Vec<u64>,
    pub threads: usize,
    pub parameters: BTreeMap<String, String>,
    pub stages: Vec<Stage>,
    pub runtime_seconds: f64,
    pub artifacts: Vec<ArtifactRecord>,
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub tables: Vec<Table>,
    pub manifest: Manifest,
    pub manifest_path: PathBuf,
}

impl ExperimentRun {
    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }
}

struct Timer {
    stages: Vec<Stage>,
}

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f().map_err(|e| match e {
            Error::InvalidParameter(m) => Error::InvalidParameter(format!("{name}: {m}")),
            other => other,
        })?;
        self.stages.push(Stage {
            name: name.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        log::info!("{name} done in {:.2}s", t.elapsed().as_secs_f64());
        Ok(out)
    }
}

/// Runs an experiment and writes its CSV tables plus `manifest.json` into
/// `spec.out_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentRun> {
    spec.validate()?;
    let start = Instant::now();
    std::fs::create_dir_all(&spec.out_dir)?;
    let mut timer = Timer { stages: Vec::new() };
    let tables = match spec.name {
        ExperimentName::Fig1Manifold => timer.time("fig1_manifold", || fig1_tables(spec))?,
        ExperimentName::Fig2LocalVsGlobal => {
            let reps = timer.time("fig2_replicates", || fig2_local_vs_global(spec))?;
            fig2_tables(&reps)
        }
        ExperimentName::Fig3LowDegree => {
            let (g, source) = timer.time("fig3_input", || fig3_input(spec))?;
            let params = Fig3Params::from_spec(spec);
            let rows = timer.time("fig3_curves", || fig3_low_degree_recovery(&g, &params))?;
            fig3_tables(&rows, &source, &g)
        }
        ExperimentName::AppendixConstantRegime => {
            let res = timer.time("constant_regime", || constant_regime(spec))?;
            constant_regime_tables(&res)
        }
        ExperimentName::AppendixHistograms => {
            let rows = timer.time("histograms", || replicate_stats(spec))?;
            histogram_tables(&rows)
        }
        ExperimentName::GraphonCheck => {
            let rows = timer.time("graphon_check", || graphon_check(spec))?;
            graphon_tables(&rows)
        }
    };
    let mut artifacts = Vec::new();
    for t in &tables {
        let bytes = t.to_csv()?;
        std::fs::write(spec.out_dir.join(&t.file), &bytes)?;
        artifacts.push(ArtifactRecord {
            file: t.file.clone(),
            rows: t.rows.len(),
            sha256: hex(&Sha256::digest(&bytes)),
        });
    }
    let manifest = Manifest {
        experiment: spec.name.name().into(),
        crate_name: env!("CARGO_PKG_NAME").into(),
        crate_version: env!("CARGO_PKG_VERSION").into(),
        seed: spec.seed,
        replicate_seeds: (0..spec.replicates as u64).map(|r| derive_seed(spec.seed, r)).collect(),
        threads: rayon::current_num_threads(),
        parameters: spec.parameters(),
        stages: timer.stages,
        runtime_seconds: start.elapsed().as_secs_f64(),
        artifacts,
    };
    let manifest_path = spec.out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_vec_pretty(&manifest)?)?;
    Ok(ExperimentRun {
        tables,
        manifest,
        manifest_path,
    })
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

// ---------------------------------------------------------------- replicate statistics

/// Average degree and triangle density of one simulated graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateStats {
    pub example: ExampleId,
    pub scale_rule: String,
    pub n: usize,
    pub scale: f64,
    pub replicate: usize,
    pub seed: u64,
    pub avg_degree: f64,
    pub triangles: u64,
    pub triangle_density: f64,
}

/// Simulates `replicates` graphs for every example and node count.
pub fn replicate_stats(spec: &ExperimentSpec) -> Result<Vec<ReplicateStats>> {
    let rules = spec.example_rules()?;
    let mut jobs = Vec::new();
    for (ei, (ex, rule, src)) in rules.iter().enumerate() {
        for &n in &spec.n_values {
            for r in 0..spec.replicates {
                jobs.push((ei, *ex, rule, src, n, r));
            }
        }
    }
    jobs.par_iter()
        .map(|&(ei, ex, rule, src, n, r)| {
            let (latent, kernel) = make_model(ex, n, rule)?;
            let seed = nested_seed(spec.seed, &[ei as u64, n as u64, r as u64]);
            let x = sample_latents(&latent, n, derive_seed(seed, 0))?;
            let g = sample_graph(&x, &kernel, false, derive_seed(seed, 1))?;
            let st = graph_stats(&g);
            Ok(ReplicateStats {
                example: ex,
                scale_rule: src.clone(),
                n,
                scale: latent.scale,
                replicate: r,
                seed,
                avg_degree: st.avg_degree,
                triangles: st.triangle_count,
                triangle_density: st.triangle_density,
            })
        })
        .collect()
}

/// Per-(example, n) aggregate of the constant-regime simulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeSummary {
    pub example: ExampleId,
    pub n: usize,
    pub scale: f64,
    pub replicates: usize,
    pub mean_degree: f64,
    pub se_degree: f64,
    pub mean_delta: f64,
    pub se_delta: f64,
    /// `(n - 1) rho` from quadrature.
    pub oracle_degree: f64,
    /// `Delta_n` from the quadrature triple integral.
    pub oracle_delta: f64,
}

#[derive(Debug, Clone)]
pub struct ConstantRegime {
    pub raw: Vec<ReplicateStats>,
    pub summary: Vec<RegimeSummary>,
}

pub fn constant_regime(spec: &ExperimentSpec) -> Result<ConstantRegime> {
    let raw = replicate_stats(spec)?;
    let rules = spec.example_rules()?;
    let mut summary = Vec::new();
    for (ex, rule, _) in &rules {
        for &n in &spec.n_values {
            let reps: Vec<&ReplicateStats> = raw.iter().filter(|r| r.example == *ex && r.n == n).collect();
            let deg: Vec<f64> = reps.iter().map(|r| r.avg_degree).collect();
            let del: Vec<f64> = reps.iter().map(|r| r.triangle_density).collect();
            let (md, sd) = mean_and_se(&deg);
            let (mt, st) = mean_and_se(&del);
            let (latent, kernel) = make_model(*ex, n, rule)?;
            let (rho, tri) = rho_delta_quadrature(&latent, &kernel, spec.grid)?;
            summary.push(RegimeSummary {
                example: *ex,
                n,
                scale: latent.scale,
                replicates: reps.len(),
                mean_degree: md,
                se_degree: sd,
                mean_delta: mt,
                se_delta: st,
                oracle_degree: expected_degree(n, rho.value, false),
                oracle_delta: delta_n(n, tri.value),
            });
        }
    }
    Ok(ConstantRegime { raw, summary })
}

const RAW_HEADER: [&str; 8] = ["example", "scale_rule", "n", "scale", "replicate", "avg_degree", "triangles", "triangle_density"];

fn raw_row(r: &ReplicateStats) -> Vec<String> {
    vec![
        r.example.to_string(),
        r.scale_rule.clone(),
        r.n.to_string(),
        num(r.scale),
        r.replicate.to_string(),
        num(r.avg_degree),
        r.triangles.to_string(),
        num(r.triangle_density),
    ]
}

fn constant_regime_tables(res: &ConstantRegime) -> Vec<Table> {
    let mut raw = Table::new("constant_regime_raw.csv", &RAW_HEADER);
    res.raw.iter().for_each(|r| raw.push(raw_row(r)));
    let mut sum = Table::new(
        "constant_regime_summary.csv",
        &[
            "example", "n", "scale", "replicates", "mean_degree", "se_degree", "mean_delta", "se_delta", "oracle_degree", "oracle_delta",
        ],
    );
    for s in &res.summary {
        sum.push(vec![
            s.example.to_string(),
            s.n.to_string(),
            num(s.scale),
            s.replicates.to_string(),
            num(s.mean_degree),
            num(s.se_degree),
            num(s.mean_delta),
            num(s.se_delta),
            num(s.oracle_degree),
            num(s.oracle_delta),
        ]);
    }
    vec![raw, sum]
}

fn histogram_tables(rows: &[ReplicateStats]) -> Vec<Table> {
    let mut raw = Table::new("histogram_samples.csv", &RAW_HEADER);
    rows.iter().for_each(|r| raw.push(raw_row(r)));
    let mut means = Table::new("histogram_means.csv", &["example", "n", "samples", "mean_degree", "mean_delta"]);
    let mut keys: Vec<(ExampleId, usize)> = Vec::new();
    for r in rows {
        if !keys.contains(&(r.example, r.n)) {
            keys.push((r.example, r.n));
        }
    }
    for (ex, n) in keys {
        let sel: Vec<&ReplicateStats> = rows.iter().filter(|r| r.example == ex && r.n == n).collect();
        let m = sel.len() as f64;
        means.push(vec![
            ex.to_string(),
            n.to_string(),
            sel.len().to_string(),
            num(sel.iter().map(|r| r.avg_degree).sum::<f64>() / m),
            num(sel.iter().map(|r| r.triangle_density).sum::<f64>() / m),
        ]);
    }
    vec![raw, means]
}

// ---------------------------------------------------------------- graphon

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphonRun {
    pub rule: String,
    pub rho: f64,
    pub n: usize,
    pub replicate: usize,
    pub triangles: u64,
    pub delta_hat: f64,
    /// `((n-1)(n-2)/6) rho^3`.
    pub delta_expected: f64,
    /// Standard deviation of the triangle count divided by its mean.
    pub rel_stderr: f64,
    pub bound: f64,
    pub within: bool,
}

/// Relative standard deviation of the triangle count of `G(n, p)`.
///
/// Distinct triangles are independent unless they share an edge, so
/// `Var T = C(n,3) (p^3 - p^6) + C(n,3) 3 (n-3) (p^5 - p^6)`.
pub fn erdos_renyi_triangle_rel_sd(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let c3 = nf * (nf - 1.0) * (nf - 2.0) / 6.0;
    let var = c3 * (p.powi(3) - p.powi(6)) + c3 * 3.0 * (nf - 3.0) * (p.powi(5) - p.powi(6));
    var.sqrt() / (c3 * p.powi(3))
}

pub fn graphon_check(spec: &ExperimentSpec) -> Result<Vec<GraphonRun>> {
    let mut jobs = Vec::new();
    for (ri, src) in spec.scales.iter().enumerate() {
        let rule = ScaleRule::parse(src)?;
        for &n in &spec.n_values {
            for r in 0..spec.replicates {
                jobs.push((ri, src.clone(), rule.clone(), n, r));
            }
        }
    }
    jobs.par_iter()
        .map(|(ri, src, rule, n, r)| {
            let (latent, kernel) = make_model(ExampleId::Graphon, *n, rule)?;
            let rho = latent_rho(&kernel);
            let seed = nested_seed(spec.seed, &[*ri as u64, *n as u64, *r as u64]);
            let x = sample_latents(&latent, *n, derive_seed(seed, 0))?;
            let g = sample_graph(&x, &kernel, false, derive_seed(seed, 1))?;
            let t = count_triangles(&g);
            let delta_expected = crate::oracles::graphon_delta_bound(rho, *n, 1.0)?;
            let rel = erdos_renyi_triangle_rel_sd(*n, rho);
            let bound = delta_expected * (1.0 + 3.0 * rel);
            let delta_hat = t as f64 / *n as f64;
            Ok(GraphonRun {
                rule: src.clone(),
                rho,
                n: *n,
                replicate: *r,
                triangles: t,
                delta_hat,
                delta_expected,
                rel_stderr: rel,
                bound,
                within: delta_hat <= bound,
            })
        })
        .collect()
}

fn latent_rho(kernel: &KernelModel) -> f64 {
    match kernel.kind {
        KernelKind::GraphonConstant { rho } => rho,
        _ => unreachable!("graphon example"),
    }
}

fn graphon_tables(rows: &[GraphonRun]) -> Vec<Table> {
    let mut t = Table::new(
        "graphon_check.csv",
        &["rule", "rho", "n", "replicate", "triangles", "delta_hat", "delta_expected", "rel_stderr", "bound", "within"],
    );
    for r in rows {
        t.push(vec![
            r.rule.clone(),
            num(r.rho),
            r.n.to_string(),
            r.replicate.to_string(),
            r.triangles.to_string(),
            num(r.delta_hat),
            num(r.delta_expected),
            num(r.rel_stderr),
            num(r.bound),
            r.within.to_string(),
        ]);
    }
    vec![t]
}

// ---------------------------------------------------------------- fig1

/// Exact Fourier–Bessel map on the circle, Nyström otherwise.
fn feature_map_for(latent: &LatentModel, kernel: &KernelModel, k: usize, grid: usize) -> Result<FeatureMap> {
    match latent.domain {
        Domain::Circle { radius } if k % 2 == 1 && k >= 3 => circle_feature_map(radius, k),
        _ => nystrom_features(latent, kernel, grid, k),
    }
}

fn intrinsic_range(x: &LatentSample) -> (f64, f64) {
    match x.model.domain {
        Domain::Interval { lo, hi } => (lo, hi),
        Domain::Circle { radius } => (-std::f64::consts::PI * radius, std::f64::consts::PI * radius),
        _ => {
            let v: Vec<f64> = (0..x.len()).map(|i| x.intrinsic_coordinate(i)).collect();
            (v.iter().cloned().fold(f64::INFINITY, f64::min), v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        }
    }
}

const FIG1_CURVE_POINTS: usize = 200;
const FIG1_BINS: usize = 30;

fn fig1_tables(spec: &ExperimentSpec) -> Result<Vec<Table>> {
    let d = spec.dims.first().copied().unwrap_or(3);
    let n = spec.n_values[0];
    let coord_names: Vec<String> = (1..=d).map(|i| format!("x{i}")).collect();
    let mut head = vec!["example", "index", "t"];
    head.extend(coord_names.iter().map(String::as_str));
    let mut curve = Table::new("fig1_curve.csv", &head);
    let mut head = vec!["example", "node", "t"];
    head.extend(coord_names.iter().map(String::as_str));
    let mut points = Table::new("fig1_points.csv", &head);
    let mut hist = Table::new("fig1_histogram.csv", &["example", "bin", "lo", "hi", "count", "density"]);
    let mut summary = Table::new("fig1_summary.csv", &["example", "n", "scale", "dim", "procrustes_rmse", "feature_residual"]);
    for (ei, (ex, rule, _)) in spec.example_rules()?.into_iter().enumerate() {
        let (latent, kernel) = make_model(ex, n, &rule)?;
        let fmap = feature_map_for(&latent, &kernel, d, spec.grid)?;
        for i in 0..FIG1_CURVE_POINTS {
            let t = latent.quantile(i as f64 / (FIG1_CURVE_POINTS - 1) as f64)?;
            let c = fmap.coordinates(&latent.point_at(t));
            let mut row = vec![ex.to_string(), i.to_string(), num(t)];
            row.extend(c.iter().map(|&v| num(v)));
            curve.push(row);
        }
        let seed = nested_seed(spec.seed, &[ei as u64]);
        let x = sample_latents(&latent, n, derive_seed(seed, 0))?;
        let g = sample_graph(&x, &kernel, false, derive_seed(seed, 1))?;
        let emb = ase(&g, d)?;
        let target = nalgebra::DMatrix::from_fn(n, d, |i, j| fmap.coordinates(x.row(i))[j]);
        let fit = procrustes_align(&emb, &target)?;
        for i in 0..n {
            let mut row = vec![ex.to_string(), i.to_string(), num(x.intrinsic_coordinate(i))];
            row.extend(fit.aligned.rows.row(i).iter().map(|&v| num(v)));
            points.push(row);
        }
        let (lo, hi) = intrinsic_range(&x);
        let width = (hi - lo) / FIG1_BINS as f64;
        let mut counts = [0usize; FIG1_BINS];
        for i in 0..n {
            let b = (((x.intrinsic_coordinate(i) - lo) / width).floor().max(0.0) as usize).min(FIG1_BINS - 1);
            counts[b] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            hist.push(vec![
                ex.to_string(),
                b.to_string(),
                num(lo + b as f64 * width),
                num(lo + (b + 1) as f64 * width),
                c.to_string(),
                num(c as f64 / (n as f64 * width)),
            ]);
        }
        summary.push(vec![
            ex.to_string(),
            n.to_string(),
            num(latent.scale),
            d.to_string(),
            num(fit.residual / (n as f64).sqrt()),
            opt(fmap.residual.map(num)),
        ]);
    }
    Ok(vec![curve, points, hist, summary])
}

// ---------------------------------------------------------------- fig2

/// One replicate of the local-versus-global comparison.
#[derive(Debug, Clone)]
pub struct Fig2Replicate {
    pub replicate: usize,
    pub seed: u64,
    pub query: usize,
    pub core_size: usize,
    pub full_scree: Scree,
    pub core_scree: Scree,
    pub slice_scree: Scree,
    pub full_recovery: Vec<RecoveryPoint>,
    pub core_recovery: Vec<RecoveryPoint>,
    pub slice_recovery: Vec<RecoveryPoint>,
}

impl Fig2Replicate {
    pub fn recovery_at(curve: &[RecoveryPoint], d: usize) -> Option<f64> {
        curve.iter().find(|p| p.dim == d).map(|p| p.mean_percent)
    }
}

/// Node with latent position closest to the domain centre, among nodes
/// with at least one neighbour.
pub fn central_query(x: &LatentSample, g: &SparseGraph) -> Result<usize> {
    let centre = vec![0.0; x.dim];
    (0..x.len())
        .filter(|&i| g.simple_degree(i) > 0)
        .min_by(|&a, &b| {
            let da = x.model.domain.distance(x.row(a), &centre);
            let db = x.model.domain.distance(x.row(b), &centre);
            da.total_cmp(&db).then(a.cmp(&b))
        })
        .ok_or_else(|| Error::Empty("graph has no edges".into()))
}

/// Triangle recovery of the core block from a core-periphery slice: the
/// slice is factorized as `U S V^T`, and core graphs are resampled with
/// probabilities `<(U S^1/2)_i, (V S^1/2)_j>` over core columns `j`.
pub fn slice_recovery_curve(slice: &CorePeripherySlice, core: &SparseGraph, dims: &[usize], resamples: usize, seed: u64) -> Result<Vec<RecoveryPoint>> {
    let source = count_triangles(core);
    if source == 0 {
        return Err(Error::NoTriangles);
    }
    if resamples == 0 {
        return Err(Error::InvalidParameter("resamples must be positive".into()));
    }
    dims.iter()
        .map(|&d| {
            let (left, right) = slice_svd(&slice.matrix, d)?;
            let mut right_core = right.clone();
            right_core.rows = right.rows.select_rows(slice.row_map.iter());
            right_core.node_map = Some(slice.row_map.clone());
            let counts = (0..resamples)
                .map(|r| {
                    let h = sample_graph_from_embedding(&left, Pairing::LeftRight(&right_core), derive_seed(seed, (d * 1_000_003 + r) as u64))?;
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

fn fig2_replicate(spec: &ExperimentSpec, ex: ExampleId, rule: &ScaleRule, n: usize, r: usize) -> Result<Fig2Replicate> {
    let (latent, kernel) = make_model(ex, n, rule)?;
    let seed = derive_seed(spec.seed, r as u64);
    let x = sample_latents(&latent, n, derive_seed(seed, 0))?;
    let g = sample_graph(&x, &kernel, false, derive_seed(seed, 1))?;
    let query = central_query(&x, &g)?;
    let nb = common_neighbor_neighborhood(&g, query, spec.k)?;
    let core = extract_core(&g, &nb.core_ids)?;
    let slice = extract_cp_slice(&g, &nb.core_ids)?;
    let m_local = spec.scree_m.min(spec.k);
    let full_scree = symmetric_scree(&g, spec.scree_m.min(n))?;
    let core_scree = symmetric_scree(&core.graph, m_local)?;
    let slice_scree = scree(&slice.matrix, m_local)?;
    let local_dims: Vec<usize> = spec.local_dims.iter().copied().filter(|&d| d <= spec.k).collect();
    let full_recovery = triangle_recovery_curve(&g, &spec.dims, spec.resamples, derive_seed(seed, 2))?;
    let core_recovery = triangle_recovery_curve(&core.graph, &local_dims, spec.resamples, derive_seed(seed, 3))?;
    let slice_recovery = slice_recovery_curve(&slice, &core.graph, &local_dims, spec.resamples, derive_seed(seed, 4))?;
    Ok(Fig2Replicate {
        replicate: r,
        seed,
        query,
        core_size: nb.k(),
        full_scree,
        core_scree,
        slice_scree,
        full_recovery,
        core_recovery,
        slice_recovery,
    })
}

/// Scree plots and triangle-recovery curves of the full graph, a
/// common-neighbour core and its core-periphery slice, per replicate.
pub fn fig2_local_vs_global(spec: &ExperimentSpec) -> Result<Vec<Fig2Replicate>> {
    spec.validate()?;
    let (ex, rule, _) = spec
        .example_rules()?
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidParameter("fig2 needs one example".into()))?;
    let n = spec.n_values[0];
    (0..spec.replicates)
        .into_par_iter()
        .map(|r| fig2_replicate(spec, ex, &rule, n, r))
        .collect()
}

fn fig2_tables(reps: &[Fig2Replicate]) -> Vec<Table> {
    let mut sc = Table::new("fig2_scree.csv", &["replicate", "view", "index", "value"]);
    let mut rec = Table::new("fig2_recovery.csv", &["replicate", "view", "dim", "mean_percent", "std_error"]);
    let mut sum = Table::new(
        "fig2_summary.csv",
        &["replicate", "seed", "query", "core_size", "full_s3_over_s4", "core_s3_over_s4", "slice_s3_over_s4", "full_recovery_d3", "core_recovery_d3", "slice_recovery_d3"],
    );
    let ratio = |s: &Scree| if s.m() >= 4 { num(s.ratio(3)) } else { String::new() };
    for r in reps {
        for (view, s) in [("full", &r.full_scree), ("core", &r.core_scree), ("slice", &r.slice_scree)] {
            for (i, v) in s.values.iter().enumerate() {
                sc.push(vec![r.replicate.to_string(), view.into(), (i + 1).to_string(), num(*v)]);
            }
        }
        for (view, c) in [("full", &r.full_recovery), ("core", &r.core_recovery), ("slice", &r.slice_recovery)] {
            for p in c {
                rec.push(vec![r.replicate.to_string(), view.into(), p.dim.to_string(), num(p.mean_percent), num(p.std_error)]);
            }
        }
        sum.push(vec![
            r.replicate.to_string(),
            r.seed.to_string(),
            r.query.to_string(),
            r.core_size.to_string(),
            ratio(&r.full_scree),
            ratio(&r.core_scree),
            ratio(&r.slice_scree),
            opt(Fig2Replicate::recovery_at(&r.full_recovery, 3).map(num)),
            opt(Fig2Replicate::recovery_at(&r.core_recovery, 3).map(num)),
            opt(Fig2Replicate::recovery_at(&r.slice_recovery, 3).map(num)),
        ]);
    }
    vec![sc, rec, sum]
}

// ---------------------------------------------------------------- fig3

#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Params {
    /// Neighbourhood size.
    pub k: usize,
    /// Number of sampled query nodes.
    pub queries: usize,
    pub global_dims: Vec<usize>,
    pub local_dims: Vec<usize>,
    pub resamples: usize,
    pub caps: Vec<usize>,
    pub seed: u64,
    /// Resample local embeddings with the eigenvalue-signed product.
    pub signed: bool,
}

impl Fig3Params {
    pub fn from_spec(spec: &ExperimentSpec) -> Self {
        Fig3Params {
            k: spec.k,
            queries: spec.queries,
            global_dims: spec.dims.clone(),
            local_dims: spec.local_dims.clone(),
            resamples: spec.resamples,
            caps: spec.degree_caps.clone(),
            seed: spec.seed,
            signed: spec.signed,
        }
    }
}

/// One point of a low-degree triangle curve.
///
/// `dim = 0` marks the observed graph. `stat` is `sample` (one resampled
/// graph), `mean` (over resamples), `truth`, or `p25`/`p50`/`p75` across
/// sampled neighbourhoods.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub scope: &'static str,
    pub query: Option<usize>,
    pub dim: usize,
    pub stat: &'static str,
    pub sample: Option<usize>,
    pub cap: usize,
    pub triangles: f64,
    pub nodes: f64,
    /// Triangles divided by the node count of the embedded graph.
    pub density: f64,
    /// Triangles divided by the node count of the capped subgraph.
    pub density_capped: f64,
}

fn profile_rows(scope: &'static str, query: Option<usize>, dim: usize, stat: &'static str, sample: Option<usize>, caps: &[usize], tri: &[f64], nodes: &[f64], total: usize) -> Vec<Fig3Row> {
    caps.iter()
        .enumerate()
        .map(|(i, &c)| Fig3Row {
            scope,
            query,
            dim,
            stat,
            sample,
            cap: c,
            triangles: tri[i],
            nodes: nodes[i],
            density: tri[i] / total as f64,
            density_capped: if nodes[i] > 0.0 { tri[i] / nodes[i] } else { 0.0 },
        })
        .collect()
}

/// Mean triangle and node profiles over `resamples` graphs drawn from an
/// embedding, plus the per-sample rows.
fn resampled_profiles(emb: &crate::spectral::Embedding, pairing: Pairing<'_>, p: &Fig3Params, seed: u64) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    (0..p.resamples)
        .map(|r| {
            let h = sample_graph_from_embedding(emb, pairing, derive_seed(seed, r as u64))?;
            let prof = low_degree_profile(&h, &p.caps);
            Ok((prof.triangles.iter().map(|&t| t as f64).collect(), prof.nodes.iter().map(|&v| v as f64).collect()))
        })
        .collect()
}

fn mean_profile(samples: &[(Vec<f64>, Vec<f64>)]) -> (Vec<f64>, Vec<f64>) {
    let m = samples.len() as f64;
    let len = samples[0].0.len();
    let t = (0..len).map(|i| samples.iter().map(|s| s.0[i]).sum::<f64>() / m).collect();
    let v = (0..len).map(|i| samples.iter().map(|s| s.1[i]).sum::<f64>() / m).collect();
    (t, v)
}

/// Linear-interpolation percentile of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Triangle counts of degree-capped subgraphs, observed and recovered
/// from global and local embeddings.
///
/// Global: the whole graph is embedded by ASE at each dimension and
/// `resamples` graphs are drawn. Local: for each sampled query node the
/// `k`-node common-neighbour core is embedded and resampled likewise;
/// per-query mean curves are summarized by 25/50/75 percentiles.
pub fn fig3_low_degree_recovery(g: &SparseGraph, p: &Fig3Params) -> Result<Vec<Fig3Row>> {
    if count_triangles(g) == 0 {
        return Err(Error::NoTriangles);
    }
    if p.resamples == 0 || p.queries == 0 || p.caps.is_empty() {
        return Err(Error::InvalidParameter("resamples, queries and caps must be non-empty".into()));
    }
    let n = g.n();
    let mut rows = Vec::new();

    let truth = low_degree_profile(g, &p.caps);
    let tf = |v: &[u64]| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    let nf = |v: &[usize]| v.iter().map(|&x| x as f64).collect::<Vec<f64>>();
    rows.extend(profile_rows("global", None, 0, "truth", None, &p.caps, &tf(&truth.triangles), &nf(&truth.nodes), n));
    let global: Vec<(usize, Vec<(Vec<f64>, Vec<f64>)>)> = p
        .global_dims
        .par_iter()
        .map(|&d| {
            let emb = ase(g, d)?;
            Ok((d, resampled_profiles(&emb, Pairing::Symmetric, p, nested_seed(p.seed, &[0, d as u64]))?))
        })
        .collect::<Result<_>>()?;
    for (d, samples) in &global {
        for (r, (t, v)) in samples.iter().enumerate() {
            rows.extend(profile_rows("global", None, *d, "sample", Some(r), &p.caps, t, v, n));
        }
        let (t, v) = mean_profile(samples);
        rows.extend(profile_rows("global", None, *d, "mean", None, &p.caps, &t, &v, n));
    }

    let candidates: Vec<usize> = (0..n).filter(|&i| g.simple_degree(i) > 0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(nested_seed(p.seed, &[1]));
    let picks = sample_indices(&mut rng, candidates.len(), p.queries.min(candidates.len()));
    let queries: Vec<usize> = picks.iter().map(|i| candidates[i]).collect();
    let k = p.k.min(n);
    let local_dims: Vec<usize> = p.local_dims.iter().copied().filter(|&d| d >= 1 && d <= k).collect();
    let pairing = if p.signed { Pairing::Indefinite } else { Pairing::Symmetric };

    // Per query: truth profile, then per dim the resampled profiles.
    type QueryResult = (usize, (Vec<f64>, Vec<f64>), Vec<(usize, Vec<(Vec<f64>, Vec<f64>)>)>);
    let local: Vec<QueryResult> = queries
        .par_iter()
        .enumerate()
        .map(|(qi, &q)| {
            let nb = common_neighbor_neighborhood(g, q, k)?;
            let core = extract_core(g, &nb.core_ids)?;
            let tp = low_degree_profile(&core.graph, &p.caps);
            let per_dim = local_dims
                .iter()
                .map(|&d| {
                    let emb = ase(&core.graph, d)?;
                    Ok((d, resampled_profiles(&emb, pairing, p, nested_seed(p.seed, &[2, qi as u64, d as u64]))?))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((q, (tf(&tp.triangles), nf(&tp.nodes)), per_dim))
        })
        .collect::<Result<_>>()?;

    let mut truth_means = Vec::new();
    let mut dim_means: BTreeMap<usize, Vec<(Vec<f64>, Vec<f64>)>> = BTreeMap::new();
    for (q, (tt, tv), per_dim) in &local {
        rows.extend(profile_rows("local", Some(*q), 0, "truth", None, &p.caps, tt, tv, k));
        truth_means.push((tt.clone(), tv.clone()));
        for (d, samples) in per_dim {
            for (r, (t, v)) in samples.iter().enumerate() {
                rows.extend(profile_rows("local", Some(*q), *d, "sample", Some(r), &p.caps, t, v, k));
            }
            let mp = mean_profile(samples);
            rows.extend(profile_rows("local", Some(*q), *d, "mean", None, &p.caps, &mp.0, &mp.1, k));
            dim_means.entry(*d).or_default().push(mp);
        }
    }
    let mut bands = |dim: usize, curves: &[(Vec<f64>, Vec<f64>)]| {
        for (stat, qv) in [("p25", 0.25), ("p50", 0.5), ("p75", 0.75)] {
            let t: Vec<f64> = (0..p.caps.len()).map(|i| percentile(&curves.iter().map(|c| c.0[i]).collect::<Vec<_>>(), qv)).collect();
            let v: Vec<f64> = (0..p.caps.len()).map(|i| percentile(&curves.iter().map(|c| c.1[i]).collect::<Vec<_>>(), qv)).collect();
            rows.extend(profile_rows("local", None, dim, stat, None, &p.caps, &t, &v, k));
        }
    };
    bands(0, &truth_means);
    for (d, curves) in &dim_means {
        bands(*d, curves);
    }
    Ok(rows)
}

/// Graph for fig3: the configured edge list, or a planted graph.
fn fig3_input(spec: &ExperimentSpec) -> Result<(SparseGraph, String)> {
    match &spec.input {
        Some(path) => {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some("csv") => EdgeFormat::Csv,
                _ => EdgeFormat::SnapTsv,
            };
            let ing = ingest_edge_list(path, format)?;
            Ok((ing.graph, path.display().to_string()))
        }
        None => {
            let (ex, rule, src) = spec
                .example_rules()?
                .into_iter()
                .next()
                .ok_or_else(|| Error::InvalidParameter("fig3 needs an input file or an example".into()))?;
            let n = spec.n_values[0];
            let (latent, kernel) = make_model(ex, n, &rule)?;
            let x = sample_latents(&latent, n, nested_seed(spec.seed, &[3, 0]))?;
            let g = sample_graph(&x, &kernel, false, nested_seed(spec.seed, &[3, 1]))?;
            Ok((g, format!("{ex}(scale={src}, n={n})")))
        }
    }
}

fn fig3_tables(rows: &[Fig3Row], source: &str, g: &SparseGraph) -> Vec<Table> {
    let mut t = Table::new(
        "fig3_curves.csv",
        &["scope", "query", "dim", "stat", "sample", "cap", "triangles", "nodes", "density", "density_capped"],
    );
    for r in rows {
        t.push(vec![
            r.scope.into(),
            opt(r.query),
            r.dim.to_string(),
            r.stat.into(),
            opt(r.sample),
            r.cap.to_string(),
            num(r.triangles),
            num(r.nodes),
            num(r.density),
            num(r.density_capped),
        ]);
    }
    let st = graph_stats(g);
    let mut s = Table::new("fig3_source.csv", &["source", "n", "edges", "triangles", "fingerprint"]);
    s.push(vec![source.into(), st.n.to_string(), st.edge_count.to_string(), st.triangle_count.to_string(), g.fingerprint()]);
    vec![t, s]
}

/// Path of an artifact listed in a manifest.
pub fn artifact_path(out_dir: &Path, record: &ArtifactRecord) -> PathBuf {
    out_dir.join(&record.file)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in ExperimentName::ALL {
            assert_eq!(e.name().parse::<ExperimentName>().unwrap(), e);
        }
        assert!("fig9".parse::<ExperimentName>().is_err());
    }

    #[test]
    fn config_overrides_defaults() {
        let cfg = Config::parse("seed = 9\nn = 100, 200\nfull_scale = true\nscales = n/10, n/25\n").unwrap();
        let s = ExperimentSpec::from_config(ExperimentName::AppendixConstantRegime, &cfg).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.n_values, vec![100, 200]);
        assert!(s.full_scale);
        assert_eq!(s.scales, vec!["n/10", "n/25"]);
        let round = Config::parse(
            &s.parameters().iter().map(|(k, v)| format!("{k} = {v}\n")).collect::<String>(),
        )
        .unwrap();
        assert_eq!(ExperimentSpec::from_config(s.name, &round).unwrap(), s);
    }

    #[test]
    fn triangle_variance_formula_against_simulation() {
        let (n, p) = (40usize, 0.3);
        let mut ts = Vec::new();
        for r in 0..2000u64 {
            let g = crate::graphgen::bernoulli_graph(n, |_, _| p, false, r, false).unwrap();
            ts.push(count_triangles(&g) as f64);
        }
        let mean = ts.iter().sum::<f64>() / ts.len() as f64;
        let sd = (ts.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (ts.len() - 1) as f64).sqrt();
        let et = (n * (n - 1) * (n - 2)) as f64 / 6.0 * p.powi(3);
        let want = erdos_renyi_triangle_rel_sd(n, p) * et;
        // The sample SD of 2000 draws is within ~5% of the truth.
        assert!((sd - want).abs() < 0.06 * want, "{sd} vs {want}");
    }

    #[test]
    fn percentiles() {
        assert_eq!(percentile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(percentile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(percentile(&[5.0], 0.75), 5.0);
    }

    #[test]
    fn fig3_rejects_triangle_free_graphs() {
        let g = SparseGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)], false).unwrap();
        let p = Fig3Params {
            k: 3,
            queries: 1,
            global_dims: vec![1],
            local_dims: vec![1],
            resamples: 1,
            caps: vec![2],
            seed: 0,
            signed: false,
        };
        assert!(matches!(fig3_low_degree_recovery(&g, &p), Err(Error::NoTriangles)));
    }
}
