use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use svgraph::data::{load_any, save_csv, save_fvecs, Dataset};
use svgraph::experiment::{
    sweep, sweep_csv, DataSource, EvalRow, GraphRecipe, KernelArg, Method, PoolArg, Preset, SweepOptions,
    Synthetic,
};
use svgraph::graph::{load_graph, save_graph, DegreeStats, DirectedGraph};
use svgraph::navigability::{audit, evaluate_recall, AuditOptions, EvalMode, Traversal};
use svgraph::search::{beam_search_kernel, greedy_search_euclidean, SearchParams};
use svgraph::{Error, Result};

#[derive(Parser)]
#[command(name = "svgraph", version, about = "Build, search and audit support vector graphs")]
struct Cli {
    /// Worker threads for parallel stages.
    #[arg(long, global = true, env = "SVG_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a graph index and write it in the graph text format.
    Build(BuildArgs),
    /// Answer queries by searching a graph.
    Search(SearchArgs),
    /// Measure recall@1 of a graph.
    Eval(EvalArgs),
    /// Certify navigability of the SVG and write JSON and CSV reports.
    Audit(AuditArgs),
    /// Run a figure preset and write its CSV.
    Sweep(SweepArgs),
    /// Convert a dataset between fvecs and CSV.
    Convert(ConvertArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset file (.fvecs or .csv).
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    data: Option<PathBuf>,
    /// Uniform data in [0, 1]^d: `n,d,seed`.
    #[arg(long)]
    synthetic: Option<Synthetic>,
    /// Keep the first k rows.
    #[arg(long, conflicts_with = "sample")]
    head: Option<usize>,
    /// Keep k rows drawn without replacement.
    #[arg(long)]
    sample: Option<usize>,
    /// Seed for `--sample`.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DataArgs {
    fn source(&self) -> DataSource {
        match (&self.data, self.synthetic) {
            (Some(p), _) => DataSource::File(p.clone()),
            (None, Some(s)) => DataSource::Synthetic(s),
            (None, None) => unreachable!("clap requires a data source"),
        }
    }

    fn load(&self) -> Result<Dataset> {
        let data = self.source().load()?;
        match (self.head, self.sample) {
            (Some(k), _) => data.head(k),
            (None, Some(k)) => data.sample(k, self.seed),
            (None, None) => Ok(data),
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// `svg`, `svg-l0`, `kernel-rule`, `mrng`, `vamana,<λ>`, `ssg,<θ>` or `complete`.
    #[arg(long, default_value = "svg")]
    method: Method,
    /// Out-degree bound; 0 is unbounded.
    #[arg(long = "M", visible_alias = "max-degree", default_value_t = 0)]
    m: usize,
    /// `full`, `knn,<r>` or `graph`.
    #[arg(long, default_value = "full")]
    pool: PoolArg,
}

impl GraphArgs {
    fn recipe(&self) -> GraphRecipe {
        GraphRecipe::new(self.method)
            .with_max_out_degree(self.m)
            .with_pool(self.pool)
    }
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    /// `<sim>,<sigma>`; sim is euc, dp, manhattan or hamming, sigma a number
    /// or `median` / `<f>*median`.
    #[arg(long, default_value = "euc,median")]
    kernel: KernelArg,
    #[command(flatten)]
    graph: GraphArgs,
    /// Graph file; stats go next to it with a `.stats.json` suffix.
    #[arg(long, short, default_value = "graph.txt")]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "euc,median")]
    kernel: KernelArg,
    #[arg(long)]
    graph: PathBuf,
    /// Query rows of the dataset.
    #[arg(long, value_delimiter = ',', required = true)]
    query: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    entry: usize,
    /// `greedy`, `beam,<L>` or `euclidean`.
    #[arg(long, default_value = "greedy")]
    search: Traversal,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "euc,median")]
    kernel: KernelArg,
    /// Graph file; without it the graph is built from `--method`.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[command(flatten)]
    build: GraphArgs,
    /// Repeatable: `greedy`, `beam,<L>` or `euclidean`.
    #[arg(long, default_value = "greedy")]
    search: Vec<Traversal>,
    /// `all-pairs`, `fixed` or `random,<seed>`.
    #[arg(long, default_value = "all-pairs")]
    mode: EvalMode,
    /// Append rows here instead of printing them.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "euc,1.0")]
    kernel: KernelArg,
    /// Also check SVG neighbors against the LP Delaunay oracle.
    #[arg(long)]
    delaunay_check: bool,
    /// Output prefix for `.json`, `.csv` and `_hist.csv`.
    #[arg(long, short, default_value = "audit")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// `fig6`, `fig8`, `fig9` or `fig11`.
    preset: Preset,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    #[arg(long)]
    mode: Option<EvalMode>,
    /// Dataset for fig11 (.fvecs or .csv) instead of synthetic data.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, requires = "data", conflicts_with = "sample")]
    head: Option<usize>,
    #[arg(long, requires = "data")]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output; defaults to `<preset>.csv`.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ConvertArgs {
    input: PathBuf,
    output: PathBuf,
}

#[derive(Serialize)]
struct BuildStats {
    method: String,
    n: usize,
    d: usize,
    similarity: String,
    sigma: f64,
    max_out_degree: usize,
    pool: String,
    edges: usize,
    degree: DegreeStats,
    build_seconds: f64,
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(suffix);
    PathBuf::from(p)
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn frozen(mut g: DirectedGraph) -> DirectedGraph {
    if !g.is_frozen() {
        g.freeze();
    }
    g
}

fn check_size(g: &DirectedGraph, data: &Dataset) -> Result<()> {
    if g.node_count() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: g.node_count(),
        });
    }
    Ok(())
}

fn cmd_build(args: &BuildArgs) -> Result<()> {
    let data = args.data.load()?;
    let kernel = args.kernel.resolve(&data)?;
    let start = Instant::now();
    let g = args.graph.recipe().build(&data, &kernel)?;
    let seconds = start.elapsed().as_secs_f64();
    save_graph(&g, &args.out)?;
    let stats = BuildStats {
        method: args.graph.method.to_string(),
        n: data.len(),
        d: data.dim(),
        similarity: kernel.similarity.name().to_string(),
        sigma: kernel.sigma(),
        max_out_degree: args.graph.m,
        pool: args.graph.pool.to_string(),
        edges: g.edge_count(),
        degree: g.degree_stats(),
        build_seconds: seconds,
    };
    let stats_path = with_suffix(&args.out, ".stats.json");
    write_file(&stats_path, &serde_json::to_string_pretty(&stats)?)?;
    println!(
        "built {} on n={} d={}: {} edges, mean out-degree {:.3}, max {}",
        stats.method, stats.n, stats.d, stats.edges, stats.degree.mean, stats.degree.max
    );
    println!("wrote {} and {}", args.out.display(), stats_path.display());
    println!("build time {seconds:.3} s");
    Ok(())
}

fn cmd_search(args: &SearchArgs) -> Result<()> {
    let data = args.data.load()?;
    let kernel = args.kernel.resolve(&data)?;
    let g = frozen(load_graph(&args.graph)?);
    check_size(&g, &data)?;
    println!("query,terminal,hops,kernel_evals");
    for &q in &args.query {
        if q >= data.len() {
            return Err(Error::NodeOutOfRange { node: q, n: data.len() });
        }
        let query = data.row(q);
        let r = match args.search {
            Traversal::Euclidean => greedy_search_euclidean(&g, &data, query, args.entry)?,
            Traversal::Kernel { queue_length } => beam_search_kernel(
                &g,
                &data,
                &kernel,
                query,
                SearchParams {
                    queue_length,
                    entry: args.entry,
                },
            )?,
        };
        println!("{q},{},{},{}", r.terminal, r.path.len() - 1, r.kernel_evals);
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let data = args.data.load()?;
    let kernel = args.kernel.resolve(&data)?;
    let (label, m, g) = match &args.graph {
        Some(path) => {
            let g = frozen(load_graph(path)?);
            check_size(&g, &data)?;
            let label = path
                .file_stem()
                .map_or_else(|| "graph".to_string(), |s| s.to_string_lossy().into_owned());
            let m = if args.build.m > 0 { args.build.m } else { g.degree_stats().max };
            (label, m, g)
        }
        None => (
            args.build.method.to_string(),
            args.build.m,
            args.build.recipe().build(&data, &kernel)?,
        ),
    };
    let mut lines = Vec::new();
    for &t in &args.search {
        let stats = evaluate_recall(&g, &data, &kernel, t, args.mode)?;
        lines.push(EvalRow::new(label.clone(), &data, &kernel, m, &stats).to_csv());
    }
    match &args.out {
        Some(path) => {
            let mut text = match fs::read_to_string(path) {
                Ok(existing) if !existing.is_empty() => existing,
                _ => format!("{}\n", EvalRow::HEADER),
            };
            for l in &lines {
                text.push_str(l);
                text.push('\n');
            }
            write_file(path, &text)?;
        }
        None => {
            println!("{}", EvalRow::HEADER);
            for l in &lines {
                println!("{l}");
            }
        }
    }
    Ok(())
}

fn cmd_audit(args: &AuditArgs) -> Result<()> {
    let data = args.data.load()?;
    let kernel = args.kernel.resolve(&data)?;
    let options = AuditOptions {
        delaunay_check: args.delaunay_check,
        ..AuditOptions::default()
    };
    let report = audit(&data, &kernel, &options)?;
    let written = report.write(&args.out)?;
    println!(
        "n={} d={} {} σ={}: mean ε {:.6}, max ε {:.6}, mean out-degree {:.3}",
        report.n,
        report.dim,
        report.similarity,
        report.sigma,
        report.general_summary.mean,
        report.epsilon,
        report.mean_out_degree
    );
    println!(
        "certified {}/{} nodes, {} violations",
        report.certified_nodes,
        report.n,
        report.violations.len()
    );
    for r in &report.recall {
        println!("recall@1 {} {}: {:.6}", r.traversal, r.mode, r.recall);
    }
    if let Some(check) = &report.delaunay {
        println!(
            "delaunay subset: {} ({} edges checked, {} degenerate, {} exceptions)",
            if check.passed() { "pass" } else { "fail" },
            check.checked_edges,
            check.degenerate_edges,
            check.exceptions.len()
        );
    }
    for p in written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let data = match &args.data {
        Some(path) => {
            let data = load_any(path)?;
            Some(match (args.head, args.sample) {
                (Some(k), _) => data.head(k)?,
                (None, Some(k)) => data.sample(k, args.seed)?,
                (None, None) => data,
            })
        }
        None => None,
    };
    if data.is_some() && args.preset != Preset::Fig11 {
        return Err(Error::InvalidParameter(format!(
            "--data only applies to fig11, not {}",
            args.preset
        )));
    }
    let options = SweepOptions {
        seeds: args.seeds,
        n: args.n,
        dims: args.dims.clone(),
        mode: args.mode,
        data,
    };
    let start = Instant::now();
    let rows = sweep(args.preset, &options)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", args.preset)));
    write_file(&out, &sweep_csv(&rows))?;
    println!(
        "{}: {} rows written to {} in {:.1} s",
        args.preset,
        rows.len(),
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn save_any(data: &Dataset, path: &Path) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("fvecs") => save_fvecs(data, path),
        Some("csv") | Some("txt") => save_csv(data, path),
        other => Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unsupported extension {other:?} (expected fvecs or csv)"),
        }),
    }
}

fn cmd_convert(args: &ConvertArgs) -> Result<()> {
    let data = load_any(&args.input)?;
    save_any(&data, &args.output)?;
    println!(
        "converted {} vectors of dimension {} to {}",
        data.len(),
        data.dim(),
        args.output.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(Error::InvalidParameter("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Search(a) => cmd_search(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Convert(a) => cmd_convert(a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
