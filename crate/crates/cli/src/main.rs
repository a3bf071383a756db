use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use irdpg::experiment::{run_experiment, ExperimentName, ExperimentSpec};
use irdpg::expr::ScaleRule;
use irdpg::graphgen::{derive_seed, sample_graph, sample_latents};
use irdpg::io::{self, Config, EdgeFormat};
use irdpg::kernels::{make_model, ExampleId};
use irdpg::local::{common_neighbor_neighborhood, extract_core, extract_cp_slice};
use irdpg::oracles::{self, SumMethod};
use irdpg::stats::{component_sizes, graph_stats, low_degree_subgraph, GraphStats};
use irdpg::{spectral, SparseGraph};

#[derive(Parser)]
#[command(name = "irdpg", version, about = "Sparse triangle-dense random graphs, spectral embedding and reference values")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Base random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Flat `key = value` config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph from a built-in model.
    Generate(GenerateArgs),
    /// Degree, triangle and clustering statistics of an edge list.
    Stats(StatsArgs),
    /// Spectral embedding of an edge list.
    Embed(EmbedArgs),
    /// Common-neighbour core and core-periphery slice around a node.
    Local(LocalArgs),
    /// Reference values of rho, Delta and the sum of cubed eigenvalues.
    Oracle(OracleArgs),
    /// Run a named experiment, writing CSV tables and a manifest.
    Experiment(ExperimentArgs),
    /// Clean an edge list into a simple graph with a node map.
    Ingest(IngestArgs),
}

#[derive(Args)]
struct ModelArgs {
    /// ex1, ex2, ex3, ex4, logistic, square2d or graphon.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// Scale rule in `n`, e.g. `n/2000` or `sqrt(n)/10`.
    #[arg(long)]
    scale: Option<String>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Draw self-loops with probability f(x, x).
    #[arg(long)]
    self_loops: bool,
}

#[derive(Args)]
struct InputArgs {
    /// Edge list path.
    input: PathBuf,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Snap,
    Csv,
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Also report the subgraph of nodes with degree at most these caps.
    #[arg(long, value_delimiter = ',')]
    caps: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedMethod {
    Ase,
    Lse,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum, default_value = "ase")]
    method: EmbedMethod,
    #[arg(long)]
    dim: Option<usize>,
    /// Also write the top `m` singular values.
    #[arg(long)]
    scree: Option<usize>,
}

#[derive(Args)]
struct LocalArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    query: usize,
    #[arg(long)]
    k: Option<usize>,
    /// Embed the core and the slice at this dimension.
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum QuantityArg {
    Rho,
    Delta,
    Cubes,
    All,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_enum, default_value = "all")]
    quantity: QuantityArg,
    /// Quadrature nodes per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Nyström grid size for the sum of cubes.
    #[arg(long, default_value_t = 600)]
    nystrom_grid: usize,
    /// Monte Carlo sample count for cross-checks.
    #[arg(long, default_value_t = 1_000_000)]
    samples: usize,
    /// Fit a log-log rate of the quantity over these scale values instead.
    #[arg(long, value_delimiter = ',')]
    rate_over: Vec<f64>,
    /// Slope the rate fit is checked against.
    #[arg(long, allow_hyphen_values = true)]
    claimed_slope: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    tolerance: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// fig1_manifold, fig2_local_vs_global, fig3_low_degree,
    /// appendix_constant_regime, appendix_histograms or graphon_check.
    name: String,
    /// Use the original problem sizes instead of desk-scale defaults.
    #[arg(long)]
    full_scale: bool,
    /// Edge list for fig3_low_degree.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    input: InputArgs,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(p) => Config::load(p).with_context(|| format!("reading config {}", p.display()))?,
        None => Config::default(),
    };
    if let Some(s) = cli.common.seed {
        cfg.set("seed", s.to_string());
    }
    if let Some(p) = &cli.common.out_dir {
        cfg.set("out_dir", p.display().to_string());
    }
    if let Some(t) = cli.common.threads.or(cfg.get_parsed("threads")?) {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global()?;
    }
    match cli.command {
        Command::Generate(a) => generate(&cfg, a),
        Command::Stats(a) => stats(a),
        Command::Embed(a) => embed(&cfg, a),
        Command::Local(a) => local(&cfg, a),
        Command::Oracle(a) => oracle(&cfg, a),
        Command::Experiment(a) => experiment(cfg, a),
        Command::Ingest(a) => ingest(&cfg, a),
    }
}

fn out_dir(cfg: &Config) -> Result<PathBuf> {
    let p = PathBuf::from(cfg.get("out_dir").unwrap_or("."));
    std::fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
    Ok(p)
}

fn seed(cfg: &Config) -> Result<u64> {
    Ok(cfg.get_parsed("seed")?.unwrap_or(1))
}

fn print_json<T: serde::Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn print_csv<T: serde::Serialize>(rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(std::io::stdout().lock());
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// `GraphStats` as one CSV row; `cap` is empty for the whole graph.
#[derive(serde::Serialize)]
struct StatsRow {
    cap: Option<usize>,
    n: usize,
    edge_count: usize,
    avg_degree: f64,
    triangle_count: u64,
    triangle_density: f64,
    connected_triples: u64,
    clustering_coefficient: f64,
}

impl StatsRow {
    fn new(cap: Option<usize>, s: GraphStats) -> Self {
        Self {
            cap,
            n: s.n,
            edge_count: s.edge_count,
            avg_degree: s.avg_degree,
            triangle_count: s.triangle_count,
            triangle_density: s.triangle_density,
            connected_triples: s.connected_triples,
            clustering_coefficient: s.clustering_coefficient,
        }
    }
}

/// Flag, else config key, else the example's default.
fn resolve_model(cfg: &Config, m: &ModelArgs) -> Result<(ExampleId, usize, String)> {
    let example: ExampleId = match m.example.as_deref().or(cfg.get("example")) {
        Some(s) => s.parse()?,
        None => bail!("--example is required (or `example` in the config)"),
    };
    let n = match m.n.or(cfg.get_parsed("n")?) {
        Some(n) => n,
        None => bail!("--n is required (or `n` in the config)"),
    };
    let scale = m
        .scale
        .clone()
        .or_else(|| cfg.get("scale").map(String::from))
        .unwrap_or_else(|| example.default_scale().to_string());
    Ok((example, n, scale))
}

fn load_graph(input: &InputArgs) -> Result<SparseGraph> {
    let format = match input.format {
        Some(FormatArg::Csv) => EdgeFormat::Csv,
        Some(FormatArg::Snap) => EdgeFormat::SnapTsv,
        None if input.input.extension().is_some_and(|e| e == "csv") => EdgeFormat::Csv,
        None => EdgeFormat::SnapTsv,
    };
    let ing = io::ingest_edge_list(&input.input, format).with_context(|| format!("reading {}", input.input.display()))?;
    if ing.duplicate_edges > 0 || ing.self_loops_dropped > 0 {
        log::warn!("{} duplicate edges merged, {} self-loops dropped", ing.duplicate_edges, ing.self_loops_dropped);
    }
    Ok(ing.graph)
}

fn stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "graph".into())
}

fn generate(cfg: &Config, a: GenerateArgs) -> Result<()> {
    let (example, n, scale) = resolve_model(cfg, &a.model)?;
    let seed = seed(cfg)?;
    let (latent, kernel) = make_model(example, n, &ScaleRule::parse(&scale)?)?;
    let x = sample_latents(&latent, n, derive_seed(seed, 0))?;
    let g = sample_graph(&x, &kernel, a.self_loops, derive_seed(seed, 1))?;
    let dir = out_dir(cfg)?;
    let base = format!("{example}_n{n}_seed{seed}");
    let header = [
        ("model", oracles::describe(&latent, &kernel)),
        ("example", example.to_string()),
        ("scale_rule", scale),
        ("scale", latent.scale.to_string()),
        ("seed", seed.to_string()),
    ];
    let gp = dir.join(format!("{base}.txt"));
    io::write_edge_list_file(&g, &header, &gp)?;
    io::write_latents(&x, File::create(dir.join(format!("{base}_latents.csv")))?)?;
    log::info!("wrote {}", gp.display());
    print_csv(&[StatsRow::new(None, graph_stats(&g))])
}

fn stats(a: StatsArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let mut rows = vec![StatsRow::new(None, graph_stats(&g))];
    for &c in &a.caps {
        rows.push(StatsRow::new(Some(c), graph_stats(&low_degree_subgraph(&g, c).graph)));
    }
    print_csv(&rows)
}

fn embed(cfg: &Config, a: EmbedArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let d = match a.dim.or(cfg.get_parsed("dim")?) {
        Some(d) => d,
        None => bail!("--dim is required (or `dim` in the config)"),
    };
    let emb = match a.method {
        EmbedMethod::Ase => spectral::ase(&g, d)?,
        EmbedMethod::Lse => spectral::lse(&g, d)?,
    };
    let dir = out_dir(cfg)?;
    let p = dir.join(format!("{}_{}_d{d}.csv", stem(&a.input.input), emb.kind.name()));
    io::write_embedding(&emb, &p, None)?;
    log::info!("wrote {}", p.display());
    if let Some(m) = a.scree {
        let s = spectral::symmetric_scree(&g, m.min(g.n()))?;
        print_json(&serde_json::json!({ "embedding": p, "values": emb.values, "scree": s.values }))
    } else {
        print_json(&serde_json::json!({ "embedding": p, "values": emb.values }))
    }
}

fn local(cfg: &Config, a: LocalArgs) -> Result<()> {
    let g = load_graph(&a.input)?;
    let k = a.k.or(cfg.get_parsed("k")?).unwrap_or(100);
    let nb = common_neighbor_neighborhood(&g, a.query, k)?;
    let core = extract_core(&g, &nb.core_ids)?;
    let slice = extract_cp_slice(&g, &nb.core_ids)?;
    let dir = out_dir(cfg)?;
    let base = format!("{}_q{}_k{}", stem(&a.input.input), a.query, k);
    io::write_edge_list_file(
        &core.graph,
        &[("query", a.query.to_string()), ("core_ids", join(&nb.core_ids))],
        &dir.join(format!("{base}_core.txt")),
    )?;
    io::write_coo(&slice.matrix, Some(&slice.row_map), File::create(dir.join(format!("{base}_slice.coo")))?)?;
    let mut report = serde_json::json!({
        "query": a.query,
        "core_ids": nb.core_ids,
        "scores": nb.scores,
        "core": graph_stats(&core.graph),
        "slice_nnz": slice.matrix.nnz(),
    });
    if let Some(d) = a.dim.or(cfg.get_parsed("dim")?) {
        let ce = spectral::ase(&core.graph, d)?;
        io::write_embedding(&ce, &dir.join(format!("{base}_core_ase_d{d}.csv")), None)?;
        let (left, right) = spectral::slice_svd(&slice.matrix, d)?;
        io::write_embedding(&left, &dir.join(format!("{base}_slice_left_d{d}.csv")), None)?;
        io::write_embedding(&right, &dir.join(format!("{base}_slice_right_d{d}.csv")), None)?;
        report["core_values"] = serde_json::json!(ce.values);
        report["slice_singular_values"] = serde_json::json!(left.values);
    }
    print_json(&report)
}

fn join(v: &[usize]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

#[derive(serde::Serialize)]
struct RateRow {
    x: f64,
    y: f64,
    log_residual: f64,
    slope: f64,
    intercept: f64,
    r_squared: f64,
    claimed_slope: f64,
    tolerance: f64,
    pass: bool,
}

fn rate(cfg: &Config, a: &OracleArgs) -> Result<()> {
    let example: ExampleId = match a.model.example.as_deref().or(cfg.get("example")) {
        Some(s) => s.parse()?,
        None => bail!("--example is required (or `example` in the config)"),
    };
    let grid = a.grid.or(cfg.get_parsed("grid")?).unwrap_or(oracles::DEFAULT_GRID);
    let (quantity, default_slope) = match a.quantity {
        QuantityArg::Rho => (oracles::Quantity::Rho, -1.0),
        QuantityArg::Delta => (oracles::Quantity::DeltaPerN2, -2.0),
        QuantityArg::Cubes => (oracles::Quantity::SumLambdaCubed, -2.0),
        QuantityArg::All => bail!("--rate-over needs a single --quantity"),
    };
    let claimed = a.claimed_slope.unwrap_or(default_slope);
    let fit = oracles::rate_fit_over(&a.rate_over, claimed, a.tolerance, |s| {
        let (latent, kernel) = irdpg::kernels::make_model_with_scale(example, s)?;
        match quantity {
            oracles::Quantity::Rho => Ok(oracles::rho_quadrature(&latent, &kernel, grid)?.value),
            oracles::Quantity::DeltaPerN2 => Ok(oracles::rho_delta_quadrature(&latent, &kernel, grid)?.1.value),
            _ => match oracles::sum_lambda_cubed(&latent, &kernel, SumMethod::ClosedForm) {
                Ok(r) => Ok(r.value),
                Err(irdpg::Error::Unsupported(_)) => {
                    Ok(oracles::sum_lambda_cubed(&latent, &kernel, SumMethod::Nystrom { grid: a.nystrom_grid })?.value)
                }
                Err(e) => Err(e),
            },
        }
    })?;
    let rows: Vec<RateRow> = (0..fit.x_values.len())
        .map(|i| RateRow {
            x: fit.x_values[i],
            y: fit.y_values[i],
            log_residual: fit.residuals[i],
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            claimed_slope: fit.claimed_slope,
            tolerance: fit.tolerance,
            pass: fit.passes(),
        })
        .collect();
    print_csv(&rows)
}

fn oracle(cfg: &Config, a: OracleArgs) -> Result<()> {
    if !a.rate_over.is_empty() {
        return rate(cfg, &a);
    }
    let (example, n, scale) = resolve_model(cfg, &a.model)?;
    let seed = seed(cfg)?;
    let (latent, kernel) = make_model(example, n, &ScaleRule::parse(&scale)?)?;
    let grid = a.grid.or(cfg.get_parsed("grid")?).unwrap_or(oracles::DEFAULT_GRID);
    let mut reports = Vec::new();
    if matches!(a.quantity, QuantityArg::Rho | QuantityArg::All) {
        match oracles::rho_closed_form_with(&latent, &kernel, a.samples, derive_seed(seed, 10)) {
            Ok(r) => reports.extend(r),
            Err(irdpg::Error::Unsupported(m)) => log::info!("{m}"),
            Err(e) => return Err(e.into()),
        }
    }
    if a.quantity != QuantityArg::Cubes {
        let (rho, tri) = oracles::rho_delta_quadrature(&latent, &kernel, grid)?;
        if a.quantity != QuantityArg::Delta {
            reports.push(rho);
        }
        if a.quantity != QuantityArg::Rho {
            reports.push(tri);
        }
    }
    if matches!(a.quantity, QuantityArg::Cubes | QuantityArg::All) {
        reports.push(oracles::sum_lambda_cubed(&latent, &kernel, SumMethod::Nystrom { grid: a.nystrom_grid })?);
        reports.push(oracles::sum_lambda_cubed(
            &latent,
            &kernel,
            SumMethod::MonteCarlo {
                triples: a.samples,
                seed: derive_seed(seed, 11),
            },
        )?);
    }
    let rho = reports
        .iter()
        .find(|r| r.quantity == oracles::Quantity::Rho && r.method == oracles::Method::Quadrature)
        .map(|r| r.value);
    let tri = reports
        .iter()
        .find(|r| r.quantity == oracles::Quantity::DeltaPerN2 && r.method == oracles::Method::Quadrature)
        .map(|r| r.value);
    if let Some(r) = rho {
        log::info!("n = {n}: expected degree {}", oracles::expected_degree(n, r, false));
    }
    if let Some(t) = tri {
        log::info!("n = {n}: Delta_n {}", oracles::delta_n(n, t));
    }
    print_csv(&reports)
}

fn experiment(mut cfg: Config, a: ExperimentArgs) -> Result<()> {
    let name: ExperimentName = a.name.parse()?;
    if a.full_scale {
        cfg.set("full_scale", "true");
    }
    if let Some(p) = &a.input {
        cfg.set("input", p.display().to_string());
    }
    for kv in &a.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("override {kv:?} is not KEY=VALUE");
        };
        cfg.set(k.trim(), v.trim());
    }
    let spec = ExperimentSpec::from_config(name, &cfg)?;
    let run = run_experiment(&spec).with_context(|| format!("experiment {name}"))?;
    log::info!("wrote {} artifacts to {}", run.manifest.artifacts.len(), spec.out_dir.display());
    print_json(&run.manifest)
}

fn ingest(cfg: &Config, a: IngestArgs) -> Result<()> {
    let format = match a.input.format {
        Some(FormatArg::Csv) => EdgeFormat::Csv,
        Some(FormatArg::Snap) => EdgeFormat::SnapTsv,
        None if a.input.input.extension().is_some_and(|e| e == "csv") => EdgeFormat::Csv,
        None => EdgeFormat::SnapTsv,
    };
    let ing = io::ingest_edge_list(&a.input.input, format).with_context(|| format!("reading {}", a.input.input.display()))?;
    let dir = out_dir(cfg)?;
    let base = stem(&a.input.input);
    let gp = dir.join(format!("{base}_clean.txt"));
    io::write_edge_list_file(&ing.graph, &[("source", a.input.input.display().to_string())], &gp)?;
    let mp = dir.join(format!("{base}_node_map.csv"));
    io::write_node_map(&ing.node_ids, File::create(&mp)?)?;
    let comps = component_sizes(&ing.graph);
    print_json(&serde_json::json!({
        "nodes": ing.graph.n(),
        "edges": ing.graph.edge_count(),
        "duplicate_edges": ing.duplicate_edges,
        "self_loops_dropped": ing.self_loops_dropped,
        "largest_component": comps.first().copied().unwrap_or(0),
        "components": comps.len(),
        "graph": gp,
        "node_map": mp,
    }))
}
