//! Experiment plumbing behind the command-line tool: the flag grammar,
//! graph construction by method name, recall rows and the figure sweeps.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builder::{build_pruned, build_svg, build_svg_l0, BuildConfig, CandidatePool, PruneRule};
use crate::data::{generate_uniform, ground_truth, load_any, Dataset};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::{KernelSpec, SimilarityKind};
use crate::navigability::{delaunay_graph, evaluate_recall_with, EvalMode, RecallStats, Traversal};
use crate::solvers::NnlsSettings;

fn split_args(s: &str) -> Vec<&str> {
    s.split([',', ':']).map(str::trim).collect()
}

fn parse_num<T: FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::invalid(format!("cannot parse {what} from {s:?}")))
}

/// `n,d,seed` for uniform data in `[0, 1]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synthetic {
    pub n: usize,
    pub d: usize,
    pub seed: u64,
}

impl Synthetic {
    pub fn generate(&self) -> Result<Dataset> {
        generate_uniform(self.n, self.d, self.seed)
    }
}

impl FromStr for Synthetic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match split_args(s).as_slice() {
            [n, d, seed] => Ok(Self {
                n: parse_num(n, "n")?,
                d: parse_num(d, "d")?,
                seed: parse_num(seed, "seed")?,
            }),
            _ => Err(Error::invalid(format!("expected n,d,seed, got {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataSource {
    File(PathBuf),
    Synthetic(Synthetic),
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::File(p) => load_any(p),
            DataSource::Synthetic(s) => s.generate(),
        }
    }
}

/// Kernel width: absolute, or a multiple of the dataset's median pairwise
/// distance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Sigma {
    Fixed(f64),
    MedianTimes(f64),
}

impl Sigma {
    pub fn resolve(&self, data: &Dataset) -> f64 {
        match *self {
            Sigma::Fixed(s) => s,
            Sigma::MedianTimes(f) => f * data.median_pairwise_distance(),
        }
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sigma::Fixed(s) => write!(f, "{s}"),
            Sigma::MedianTimes(x) if *x == 1.0 => write!(f, "median"),
            Sigma::MedianTimes(x) => write!(f, "{x}*median"),
        }
    }
}

impl FromStr for Sigma {
    type Err = Error;

    /// `0.5`, `median` or `0.5*median`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "median" || s == "med" {
            return Ok(Sigma::MedianTimes(1.0));
        }
        if let Some(f) = s.strip_suffix("*median").or_else(|| s.strip_suffix("*med")) {
            return Ok(Sigma::MedianTimes(parse_num(f, "σ factor")?));
        }
        Ok(Sigma::Fixed(parse_num(s, "σ")?))
    }
}

/// `<similarity>,<σ>` with similarity `euc` (alias `rbf`), `dp`,
/// `manhattan` or `hamming`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelArg {
    pub similarity: SimilarityKind,
    pub sigma: Sigma,
}

impl KernelArg {
    pub fn resolve(&self, data: &Dataset) -> Result<KernelSpec> {
        KernelSpec::new(self.similarity.clone(), self.sigma.resolve(data))
    }
}

impl FromStr for KernelArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, sigma) = s
            .split_once([',', ':'])
            .ok_or_else(|| Error::invalid(format!("expected <sim>,<sigma>, got {s:?}")))?;
        let similarity = match name.trim() {
            "euc" | "rbf" | "euclidean" => SimilarityKind::EuclideanSq,
            "dp" | "dot" => SimilarityKind::DotProduct,
            "manhattan" => SimilarityKind::manhattan(),
            "hamming" => SimilarityKind::hamming(),
            other => {
                return Err(Error::invalid(format!(
                    "unknown similarity {other:?} (euc, dp, manhattan, hamming)"
                )))
            }
        };
        Ok(Self {
            similarity,
            sigma: sigma.trim().parse()?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Method {
    Svg,
    SvgL0,
    KernelRule,
    Mrng,
    Vamana(f64),
    Ssg(f64),
    Complete,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Svg => write!(f, "svg"),
            Method::SvgL0 => write!(f, "svg-l0"),
            Method::KernelRule => write!(f, "kernel-rule"),
            Method::Mrng => write!(f, "mrng"),
            Method::Vamana(l) => write!(f, "vamana:{l}"),
            Method::Ssg(t) => write!(f, "ssg:{t}"),
            Method::Complete => write!(f, "complete"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts = split_args(s);
        let param = |default: f64| -> Result<f64> {
            match parts.get(1) {
                Some(p) => parse_num(p, "method parameter"),
                None => Ok(default),
            }
        };
        let m = match parts[0] {
            "svg" => Method::Svg,
            "svg-l0" | "svgl0" => Method::SvgL0,
            "kernel-rule" | "kernel" => Method::KernelRule,
            "mrng" => Method::Mrng,
            "vamana" => Method::Vamana(param(1.2)?),
            "ssg" => Method::Ssg(param(60.0)?),
            "complete" => Method::Complete,
            other => {
                return Err(Error::invalid(format!(
                    "unknown method {other:?} (svg, svg-l0, kernel-rule, mrng, vamana,<λ>, ssg,<θ>, complete)"
                )))
            }
        };
        Ok(m)
    }
}

/// `full`, `knn,<r>` (pool of `⌈r·M⌉` exact neighbors) or `graph`
/// (incremental SVG-L0).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PoolArg {
    Full,
    Knn(f64),
    Graph,
}

impl PoolArg {
    pub fn resolve(&self, m: usize) -> Result<CandidatePool> {
        match *self {
            PoolArg::Full => Ok(CandidatePool::Full),
            PoolArg::Graph => Ok(CandidatePool::CurrentGraph),
            PoolArg::Knn(r) => {
                if m == 0 {
                    return Err(Error::invalid("a knn,<r> pool needs --M"));
                }
                if !(r.is_finite() && r > 0.0) {
                    return Err(Error::invalid(format!("pool ratio must be positive, got {r}")));
                }
                Ok(CandidatePool::ExactKnn(((r * m as f64).ceil() as usize).max(1)))
            }
        }
    }
}

impl fmt::Display for PoolArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoolArg::Full => write!(f, "full"),
            PoolArg::Knn(r) => write!(f, "knn:{r}"),
            PoolArg::Graph => write!(f, "graph"),
        }
    }
}

impl FromStr for PoolArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match split_args(s).as_slice() {
            ["full"] => Ok(PoolArg::Full),
            ["graph"] | ["incremental"] => Ok(PoolArg::Graph),
            ["knn", r] => Ok(PoolArg::Knn(parse_num(r, "pool ratio")?)),
            _ => Err(Error::invalid(format!("unknown pool {s:?} (full, knn,<r>, graph)"))),
        }
    }
}

/// Everything needed to build one graph.
#[derive(Clone, Debug)]
pub struct GraphRecipe {
    pub method: Method,
    /// `M`; 0 means unbounded.
    pub max_out_degree: usize,
    pub pool: PoolArg,
    pub nnls: NnlsSettings,
}

impl GraphRecipe {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            max_out_degree: 0,
            pool: PoolArg::Full,
            nnls: NnlsSettings::default(),
        }
    }

    pub fn with_max_out_degree(mut self, m: usize) -> Self {
        self.max_out_degree = m;
        self
    }

    pub fn with_pool(mut self, pool: PoolArg) -> Self {
        self.pool = pool;
        self
    }

    /// Builds a frozen graph.
    pub fn build(&self, data: &Dataset, kernel: &KernelSpec) -> Result<DirectedGraph> {
        let m = self.max_out_degree;
        let pool = self.pool.resolve(m)?;
        let config = BuildConfig::new(kernel.clone())
            .with_max_out_degree(m)
            .with_pool(pool);
        let rule = |rule| build_pruned(data, rule, &config);
        match self.method {
            Method::Svg => {
                if m != 0 || self.pool != PoolArg::Full {
                    return Err(Error::invalid(
                        "svg uses every candidate and no degree bound; use svg-l0 for --M or --pool",
                    ));
                }
                build_svg(data, kernel, &self.nnls)
            }
            Method::SvgL0 => {
                let mut config = config;
                config.pursuit.nnls = self.nnls;
                build_svg_l0(data, &config)
            }
            Method::KernelRule => rule(PruneRule::Kernel),
            Method::Mrng => rule(PruneRule::Mrng),
            Method::Vamana(l) => rule(PruneRule::Vamana(l)),
            Method::Ssg(t) => rule(PruneRule::Ssg(t)),
            Method::Complete => {
                let mut g = DirectedGraph::complete(data.len());
                g.freeze();
                Ok(g)
            }
        }
    }
}

/// One line of `eval` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub d: usize,
    pub n: usize,
    pub sigma: f64,
    pub m: usize,
    pub search: Traversal,
    pub mode: EvalMode,
    pub recall: f64,
    pub mean_kernel_evals: f64,
}

impl EvalRow {
    pub const HEADER: &'static str = "method,d,n,sigma,M,L,mode,recall,mean_kernel_evals";

    pub fn new(method: impl Into<String>, data: &Dataset, kernel: &KernelSpec, m: usize, stats: &RecallStats) -> Self {
        Self {
            method: method.into(),
            d: data.dim(),
            n: data.len(),
            sigma: kernel.sigma(),
            m,
            search: stats.traversal,
            mode: stats.mode,
            recall: stats.recall,
            mean_kernel_evals: stats.mean_kernel_evals,
        }
    }

    /// `L` is the queue length, or `euclidean` for Euclidean greedy search.
    pub fn to_csv(&self) -> String {
        let l = match self.search {
            Traversal::Kernel { queue_length } => queue_length.to_string(),
            Traversal::Euclidean => "euclidean".into(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method, self.d, self.n, self.sigma, self.m, l, self.mode, self.recall, self.mean_kernel_evals
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preset {
    Fig6,
    Fig8,
    Fig9,
    Fig11,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig6" => Ok(Preset::Fig6),
            "fig8" => Ok(Preset::Fig8),
            "fig9" => Ok(Preset::Fig9),
            "fig11" => Ok(Preset::Fig11),
            _ => Err(Error::invalid(format!("unknown preset {s:?} (fig6, fig8, fig9, fig11)"))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Fig6 => "fig6",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Fig11 => "fig11",
        })
    }
}

/// The descending σ grid of the recall sweeps, as multiples of the median
/// pairwise distance: two decades around the median.
pub const SIGMA_GRID: [f64; 4] = [10.0, 2.154_434_690_031_884, 0.464_158_883_361_277_9, 0.1];

/// Overrides for a sweep preset; `None` keeps the preset default.
#[derive(Clone, Debug, Default)]
pub struct SweepOptions {
    pub seeds: Option<usize>,
    pub n: Option<usize>,
    pub dims: Option<Vec<usize>>,
    pub mode: Option<EvalMode>,
    /// Fixed dataset for `fig11` instead of synthetic realizations.
    pub data: Option<Dataset>,
}

/// Mean and sample standard deviation of one quantity over realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub figure: String,
    pub method: String,
    pub d: usize,
    pub n: usize,
    pub sigma: String,
    pub m: usize,
    pub r: String,
    pub l: String,
    pub mode: String,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub runs: usize,
}

impl SweepRow {
    pub const HEADER: &'static str = "figure,method,d,n,sigma,M,r,L,mode,metric,mean,std,runs";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.figure,
            self.method,
            self.d,
            self.n,
            self.sigma,
            self.m,
            self.r,
            self.l,
            self.mode,
            self.metric,
            self.mean,
            self.std,
            self.runs
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SweepRow::HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

struct RowKey<'a> {
    figure: Preset,
    method: &'a str,
    d: usize,
    n: usize,
    sigma: String,
    m: usize,
    r: String,
    l: String,
    mode: String,
    metric: &'a str,
}

impl RowKey<'_> {
    fn row(self, values: &[f64]) -> SweepRow {
        let (mean, std) = mean_std(values);
        SweepRow {
            figure: self.figure.to_string(),
            method: self.method.to_string(),
            d: self.d,
            n: self.n,
            sigma: self.sigma,
            m: self.m,
            r: self.r,
            l: self.l,
            mode: self.mode,
            metric: self.metric.to_string(),
            mean,
            std,
            runs: values.len(),
        }
    }
}

fn realizations(n: usize, d: usize, seeds: usize) -> Result<Vec<Dataset>> {
    (0..seeds as u64).map(|s| generate_uniform(n, d, s)).collect()
}

fn recall_of(
    data: &Dataset,
    kernel: &KernelSpec,
    recipe: &GraphRecipe,
    searches: &[Traversal],
    mode: EvalMode,
) -> Result<Vec<RecallStats>> {
    let g = recipe.build(data, kernel)?;
    let truth = ground_truth(kernel, data);
    searches
        .iter()
        .map(|&t| evaluate_recall_with(&g, data, kernel, &truth, t, mode))
        .collect()
}

/// Runs a figure preset; rows are in a fixed order.
pub fn sweep(preset: Preset, options: &SweepOptions) -> Result<Vec<SweepRow>> {
    match preset {
        Preset::Fig6 => sweep_fig6(options),
        Preset::Fig8 => sweep_fig8(options),
        Preset::Fig9 => sweep_fig9(options),
        Preset::Fig11 => sweep_fig11(options),
    }
}

/// Mean SVG out-degree (σ = 1) against mean Delaunay degree per dimension.
pub fn sweep_fig6(options: &SweepOptions) -> Result<Vec<SweepRow>> {
    let seeds = options.seeds.unwrap_or(10);
    let n = options.n.unwrap_or(100);
    let dims = options.dims.clone().unwrap_or_else(|| (2..=6).collect());
    let kernel = KernelSpec::rbf(1.0)?;
    let cells: Vec<(usize, u64)> = dims
        .iter()
        .flat_map(|&d| (0..seeds as u64).map(move |s| (d, s)))
        .collect();
    let degrees = cells
        .par_iter()
        .map(|&(d, s)| {
            let data = generate_uniform(n, d, s)?;
            let svg = build_svg(&data, &kernel, &NnlsSettings::default())?.degree_stats().mean;
            let dl = delaunay_graph(&data)?;
            let del = dl.iter().map(|v| v.neighbors.len()).sum::<usize>() as f64 / n as f64;
            Ok((svg, del))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (k, &d) in dims.iter().enumerate() {
        let chunk = &degrees[k * seeds..(k + 1) * seeds];
        let svg: Vec<f64> = chunk.iter().map(|c| c.0).collect();
        let del: Vec<f64> = chunk.iter().map(|c| c.1).collect();
        let gap: Vec<f64> = chunk.iter().map(|c| c.1 - c.0).collect();
        for (method, values) in [("svg", &svg), ("delaunay", &del), ("delaunay-minus-svg", &gap)] {
            rows.push(
                RowKey {
                    figure: Preset::Fig6,
                    method,
                    d,
                    n,
                    sigma: "1".into(),
                    m: 0,
                    r: String::new(),
                    l: String::new(),
                    mode: String::new(),
                    metric: "mean_degree",
                }
                .row(values),
            );
        }
    }
    Ok(rows)
}

/// SVG recall over the σ grid, greedy and with a queue of 2.
pub fn sweep_fig8(options: &SweepOptions) -> Result<Vec<SweepRow>> {
    let seeds = options.seeds.unwrap_or(10);
    let n = options.n.unwrap_or(100);
    let dims = options.dims.clone().unwrap_or_else(|| vec![2, 4, 8, 16]);
    let mode = options.mode.unwrap_or(EvalMode::AllPairs);
    let searches = [Traversal::greedy(), Traversal::beam(2)];
    let cells: Vec<(usize, usize, u64)> = dims
        .iter()
        .flat_map(|&d| {
            (0..SIGMA_GRID.len()).flat_map(move |c| (0..seeds as u64).map(move |s| (d, c, s)))
        })
        .collect();
    let stats = cells
        .par_iter()
        .map(|&(d, c, s)| {
            let data = generate_uniform(n, d, s)?;
            let kernel = KernelSpec::rbf(Sigma::MedianTimes(SIGMA_GRID[c]).resolve(&data))?;
            let g = build_svg(&data, &kernel, &NnlsSettings::default())?;
            let truth = ground_truth(&kernel, &data);
            let recalls = searches
                .iter()
                .map(|&t| evaluate_recall_with(&g, &data, &kernel, &truth, t, mode))
                .collect::<Result<Vec<_>>>()?;
            Ok((g.degree_stats().mean, recalls))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (k, chunk) in stats.chunks(seeds).enumerate() {
        let d = dims[k / SIGMA_GRID.len()];
        let sigma = Sigma::MedianTimes(SIGMA_GRID[k % SIGMA_GRID.len()]).to_string();
        let key = |l: String, mode: String, metric| RowKey {
            figure: Preset::Fig8,
            method: "svg",
            d,
            n,
            sigma: sigma.clone(),
            m: 0,
            r: String::new(),
            l,
            mode,
            metric,
        };
        let deg: Vec<f64> = chunk.iter().map(|c| c.0).collect();
        rows.push(key(String::new(), String::new(), "mean_degree").row(&deg));
        for (q, t) in searches.iter().enumerate() {
            let l = t.queue_length().to_string();
            let rec: Vec<f64> = chunk.iter().map(|c| c.1[q].recall).collect();
            let ev: Vec<f64> = chunk.iter().map(|c| c.1[q].mean_kernel_evals).collect();
            rows.push(key(l.clone(), mode.to_string(), "recall").row(&rec));
            rows.push(key(l, mode.to_string(), "mean_kernel_evals").row(&ev));
        }
    }
    Ok(rows)
}

/// Mean recall over `datasets` of one recipe.
fn mean_recall(
    datasets: &[Dataset],
    sigma: Sigma,
    recipe: &GraphRecipe,
    search: Traversal,
    mode: EvalMode,
) -> Result<Vec<f64>> {
    datasets
        .par_iter()
        .map(|data| {
            let kernel = KernelSpec::rbf(sigma.resolve(data))?;
            Ok(recall_of(data, &kernel, recipe, &[search], mode)?[0].recall)
        })
        .collect()
}

/// Target recall for the degree-constrained MRNG when choosing `M`.
pub const FIG9_TARGET_RECALL: f64 = 0.85;

/// The degree bound whose degree-constrained MRNG mean greedy recall is
/// closest to [`FIG9_TARGET_RECALL`] (smaller `M` on ties), with that recall.
pub fn select_fig9_degree(datasets: &[Dataset], mode: EvalMode) -> Result<(usize, f64)> {
    let n = datasets.first().map_or(0, Dataset::len);
    let recall = |m: usize| -> Result<f64> {
        let r = mean_recall(
            datasets,
            Sigma::Fixed(1.0),
            &GraphRecipe::new(Method::Mrng).with_max_out_degree(m),
            Traversal::greedy(),
            mode,
        )?;
        Ok(mean_std(&r).0)
    };
    let mut prev = None;
    for m in 1..n.max(2) {
        let r = recall(m)?;
        if r >= FIG9_TARGET_RECALL {
            return Ok(match prev {
                Some((pm, pr)) if FIG9_TARGET_RECALL - pr <= r - FIG9_TARGET_RECALL => (pm, pr),
                _ => (m, r),
            });
        }
        prev = Some((m, r));
    }
    prev.ok_or_else(|| Error::invalid("need at least two points to select M"))
}

/// The `fig9` comparison at one dimension: methods in a fixed order, each
/// with greedy and queue-2 recalls per realization.
pub struct Fig9Cell {
    pub d: usize,
    pub m: usize,
    pub mrng_selection_recall: f64,
    /// `(method label, pool description, [greedy recalls, beam recalls])`.
    pub methods: Vec<(String, String, [Vec<f64>; 2])>,
}

pub fn fig9_cell(datasets: &[Dataset], mode: EvalMode) -> Result<Fig9Cell> {
    let d = datasets.first().map_or(0, Dataset::dim);
    let (m, sel) = select_fig9_degree(datasets, mode)?;
    let candidates = [
        ("mrng", Sigma::Fixed(1.0), GraphRecipe::new(Method::Mrng).with_max_out_degree(m)),
        (
            "mrng-truncated",
            Sigma::Fixed(1.0),
            GraphRecipe::new(Method::Mrng)
                .with_max_out_degree(m)
                .with_pool(PoolArg::Knn(2.0)),
        ),
        ("svg-l0", Sigma::MedianTimes(1.0), GraphRecipe::new(Method::SvgL0).with_max_out_degree(m)),
        (
            "svg-l0-incremental",
            Sigma::MedianTimes(1.0),
            GraphRecipe::new(Method::SvgL0)
                .with_max_out_degree(m)
                .with_pool(PoolArg::Graph),
        ),
    ];
    let mut methods = Vec::new();
    for (label, sigma, recipe) in candidates {
        let per = datasets
            .par_iter()
            .map(|data| {
                let kernel = KernelSpec::rbf(sigma.resolve(data))?;
                recall_of(data, &kernel, &recipe, &[Traversal::greedy(), Traversal::beam(2)], mode)
            })
            .collect::<Result<Vec<_>>>()?;
        let greedy = per.iter().map(|s| s[0].recall).collect();
        let beam = per.iter().map(|s| s[1].recall).collect();
        methods.push((label.to_string(), format!("{sigma}|{}", recipe.pool), [greedy, beam]));
    }
    Ok(Fig9Cell {
        d,
        m,
        mrng_selection_recall: sel,
        methods,
    })
}

/// SVG-L0 against degree-constrained and truncated (`r = 2`) MRNG, with
/// `M` chosen per dimension.
pub fn sweep_fig9(options: &SweepOptions) -> Result<Vec<SweepRow>> {
    let seeds = options.seeds.unwrap_or(10);
    let n = options.n.unwrap_or(100);
    let dims = options.dims.clone().unwrap_or_else(|| vec![2, 4, 8, 16]);
    let mode = options.mode.unwrap_or(EvalMode::AllPairs);
    let mut rows = Vec::new();
    for d in dims {
        let cell = fig9_cell(&realizations(n, d, seeds)?, mode)?;
        for (label, setup, recalls) in &cell.methods {
            let (sigma, pool) = setup.split_once('|').unwrap_or((setup, ""));
            let r = match pool {
                p if p.starts_with("knn:") => p.trim_start_matches("knn:").to_string(),
                _ => String::new(),
            };
            for (q, values) in recalls.iter().enumerate() {
                rows.push(
                    RowKey {
                        figure: Preset::Fig9,
                        method: label,
                        d,
                        n,
                        sigma: sigma.to_string(),
                        m: cell.m,
                        r: r.clone(),
                        l: (q + 1).to_string(),
                        mode: mode.to_string(),
                        metric: "recall",
                    }
                    .row(values),
                );
            }
        }
    }
    Ok(rows)
}

/// SVG-L0 over the σ grid against truncated MRNG with `r ∈ {2, 4, 8}` for
/// `M ∈ {8, 16, 32}`, on a supplied dataset or synthetic realizations.
pub fn sweep_fig11(options: &SweepOptions) -> Result<Vec<SweepRow>> {
    let mode = options.mode.unwrap_or(EvalMode::RandomEntry(0));
    let datasets = match &options.data {
        Some(d) => vec![d.clone()],
        None => {
            let dims = options.dims.clone().unwrap_or_else(|| vec![32]);
            let n = options.n.unwrap_or(1000);
            let seeds = options.seeds.unwrap_or(1);
            let mut all = Vec::new();
            for d in dims {
                all.push(realizations(n, d, seeds)?);
            }
            return fig11_groups(&all, mode);
        }
    };
    fig11_groups(&[datasets], mode)
}

fn fig11_groups(groups: &[Vec<Dataset>], mode: EvalMode) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for datasets in groups {
        let Some(first) = datasets.first() else { continue };
        let (n, d) = (first.len(), first.dim());
        for m in [8usize, 16, 32] {
            if m >= n {
                continue;
            }
            let mut setups: Vec<(String, Sigma, String, GraphRecipe)> = SIGMA_GRID
                .iter()
                .map(|&f| {
                    (
                        "svg-l0".to_string(),
                        Sigma::MedianTimes(f),
                        String::new(),
                        GraphRecipe::new(Method::SvgL0).with_max_out_degree(m),
                    )
                })
                .collect();
            for r in [2.0, 4.0, 8.0] {
                setups.push((
                    "mrng-truncated".into(),
                    Sigma::Fixed(1.0),
                    r.to_string(),
                    GraphRecipe::new(Method::Mrng)
                        .with_max_out_degree(m)
                        .with_pool(PoolArg::Knn(r)),
                ));
            }
            for (label, sigma, r, recipe) in setups {
                let per = datasets
                    .par_iter()
                    .map(|data| {
                        let kernel = KernelSpec::rbf(sigma.resolve(data))?;
                        recall_of(data, &kernel, &recipe, &[Traversal::greedy(), Traversal::beam(2)], mode)
                    })
                    .collect::<Result<Vec<_>>>()?;
                for q in 0..2 {
                    let values: Vec<f64> = per.iter().map(|s| s[q].recall).collect();
                    rows.push(
                        RowKey {
                            figure: Preset::Fig11,
                            method: &label,
                            d,
                            n,
                            sigma: sigma.to_string(),
                            m,
                            r: r.clone(),
                            l: (q + 1).to_string(),
                            mode: mode.to_string(),
                            metric: "recall",
                        }
                        .row(&values),
                    );
                }
            }
        }
    }
    Ok(rows)
}
