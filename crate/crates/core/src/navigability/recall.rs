use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ground_truth, squared_distance, Dataset, GroundTruth};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::KernelSpec;
use crate::search::{beam_search_by, greedy_search_by, SearchResult};

/// Which entry points a recall measurement starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EvalMode {
    /// Every entry `s ≠ k` for every query `k`.
    AllPairs,
    /// The kernel medoid for every query.
    FixedEntry,
    /// One uniformly drawn entry per query.
    RandomEntry(u64),
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::AllPairs => write!(f, "all-pairs"),
            EvalMode::FixedEntry => write!(f, "fixed"),
            EvalMode::RandomEntry(seed) => write!(f, "random:{seed}"),
        }
    }
}

impl FromStr for EvalMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all-pairs" | "all" => Ok(EvalMode::AllPairs),
            "fixed" | "medoid" => Ok(EvalMode::FixedEntry),
            _ => match s.strip_prefix("random") {
                Some("") => Ok(EvalMode::RandomEntry(0)),
                Some(rest) => rest
                    .trim_start_matches([':', ','])
                    .parse()
                    .map(EvalMode::RandomEntry)
                    .map_err(|_| Error::invalid(format!("bad random seed in {s:?}"))),
                None => Err(Error::invalid(format!(
                    "unknown eval mode {s:?} (all-pairs, fixed, random:<seed>)"
                ))),
            },
        }
    }
}

/// How each query walks the graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Traversal {
    /// Best-first kernel search with queue length `L` (1 is greedy).
    Kernel { queue_length: usize },
    /// Greedy search on Euclidean distance.
    Euclidean,
}

impl Traversal {
    pub fn greedy() -> Self {
        Traversal::Kernel { queue_length: 1 }
    }

    pub fn beam(queue_length: usize) -> Self {
        Traversal::Kernel { queue_length }
    }

    pub fn queue_length(&self) -> usize {
        match self {
            Traversal::Kernel { queue_length } => *queue_length,
            Traversal::Euclidean => 1,
        }
    }
}

impl fmt::Display for Traversal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Traversal::Kernel { queue_length: 1 } => write!(f, "greedy"),
            Traversal::Kernel { queue_length } => write!(f, "beam:{queue_length}"),
            Traversal::Euclidean => write!(f, "euclidean"),
        }
    }
}

impl FromStr for Traversal {
    type Err = Error;

    /// `greedy`, `beam,<L>` (or `beam:<L>`) or `euclidean`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Traversal::greedy()),
            "euclidean" | "euc" => Ok(Traversal::Euclidean),
            _ => {
                let l = s
                    .strip_prefix("beam")
                    .map(|rest| rest.trim_start_matches([',', ':']))
                    .ok_or_else(|| {
                        Error::invalid(format!("unknown search {s:?} (greedy, beam,<L>, euclidean)"))
                    })?;
                match l.parse::<usize>() {
                    Ok(l) if l >= 1 => Ok(Traversal::beam(l)),
                    _ => Err(Error::invalid(format!("bad queue length in {s:?}"))),
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecallStats {
    pub mode: EvalMode,
    pub traversal: Traversal,
    pub recall: f64,
    pub mean_kernel_evals: f64,
    pub searches: usize,
}

/// `argmax_i Σ_j K(x_i, x_j)`, smallest id on ties.
pub fn kernel_medoid(data: &Dataset, kernel: &KernelSpec) -> usize {
    let scores: Vec<f64> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let logs: Vec<f64> = data
                .rows()
                .map(|x| kernel.log_kernel_unchecked(data.row(i), x))
                .collect();
            let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            top + logs.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn run(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    traversal: Traversal,
    query: usize,
    entry: usize,
) -> SearchResult {
    let q = data.row(query);
    match traversal {
        Traversal::Kernel { queue_length: 1 } => {
            greedy_search_by(g, entry, |j| kernel.similarity_unchecked(data.row(j), q))
        }
        Traversal::Kernel { queue_length } => beam_search_by(g, entry, queue_length, |j| {
            kernel.similarity_unchecked(data.row(j), q)
        }),
        Traversal::Euclidean => {
            greedy_search_by(g, entry, |j| -squared_distance(data.row(j), q))
        }
    }
}

/// Recall@1 of every indexed vector used as a query, with the mean number
/// of kernel evaluations per search.
///
/// A search succeeds when its terminal node is in the kernel top-1 tie set
/// of the query.
pub fn evaluate_recall(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    traversal: Traversal,
    mode: EvalMode,
) -> Result<RecallStats> {
    let truth = ground_truth(kernel, data);
    evaluate_recall_with(g, data, kernel, &truth, traversal, mode)
}

/// [`evaluate_recall`] with precomputed ground truth.
pub fn evaluate_recall_with(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    truth: &GroundTruth,
    traversal: Traversal,
    mode: EvalMode,
) -> Result<RecallStats> {
    let n = data.len();
    if !g.is_frozen() {
        return Err(Error::invalid("recall evaluation requires a frozen graph"));
    }
    for got in [g.node_count(), truth.entries.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if traversal.queue_length() == 0 {
        return Err(Error::invalid("queue length must be at least 1"));
    }
    let entries: Vec<Vec<usize>> = match mode {
        EvalMode::AllPairs => (0..n)
            .map(|k| (0..n).filter(|&s| s != k).collect())
            .collect(),
        EvalMode::FixedEntry => vec![vec![kernel_medoid(data, kernel)]; n],
        EvalMode::RandomEntry(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| vec![rng.random_range(0..n)]).collect()
        }
    };
    let per_query: Vec<(usize, usize, usize)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut hits = 0;
            let mut evals = 0;
            for &s in &entries[k] {
                let r = run(g, data, kernel, traversal, k, s);
                hits += usize::from(truth.entries[k].contains(r.terminal));
                evals += r.kernel_evals;
            }
            (hits, evals, entries[k].len())
        })
        .collect();
    let (hits, evals, searches) = per_query
        .iter()
        .fold((0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let ratio = |x: usize| if searches == 0 { 0.0 } else { x as f64 / searches as f64 };
    Ok(RecallStats {
        mode,
        traversal,
        recall: ratio(hits),
        mean_kernel_evals: ratio(evals),
        searches,
    })
}

/// Fraction of queries answered exactly; see [`evaluate_recall`].
pub fn recall_at_1(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    traversal: Traversal,
    mode: EvalMode,
) -> Result<f64> {
    evaluate_recall(g, data, kernel, traversal, mode).map(|s| s.recall)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_pruned, build_svg, BuildConfig, PruneRule};
    use crate::data::generate_uniform;
    use crate::kernels::SimilarityKind;
    use crate::solvers::NnlsSettings;

    fn frozen(mut g: DirectedGraph) -> DirectedGraph {
        g.freeze();
        g
    }

    #[test]
    fn complete_graph_is_perfect_in_every_mode() {
        let data = generate_uniform(30, 3, 1).unwrap();
        let kernel = KernelSpec::rbf(0.5).unwrap();
        let g = frozen(DirectedGraph::complete(30));
        for mode in [EvalMode::AllPairs, EvalMode::FixedEntry, EvalMode::RandomEntry(9)] {
            for t in [Traversal::greedy(), Traversal::beam(3), Traversal::Euclidean] {
                assert_eq!(recall_at_1(&g, &data, &kernel, t, mode).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn edgeless_graph_only_answers_the_medoid() {
        let data = generate_uniform(25, 2, 4).unwrap();
        let kernel = KernelSpec::rbf(1.0).unwrap();
        let g = frozen(DirectedGraph::new(25));
        let r = recall_at_1(&g, &data, &kernel, Traversal::greedy(), EvalMode::FixedEntry).unwrap();
        assert!((r - 1.0 / 25.0).abs() < 1e-15);
        let all = recall_at_1(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs).unwrap();
        assert_eq!(all, 0.0);
    }

    #[test]
    fn medoid_of_symmetric_line_is_the_middle() {
        let data = Dataset::from_rows(&[vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(kernel_medoid(&data, &KernelSpec::rbf(1.0).unwrap()), 1);
    }

    #[test]
    fn kernel_rule_full_pool_is_navigable() {
        for seed in 0..3 {
            let data = generate_uniform(40, 3, seed).unwrap();
            let kernel = KernelSpec::rbf(1.0).unwrap();
            let g = build_pruned(&data, PruneRule::Kernel, &BuildConfig::new(kernel.clone())).unwrap();
            let r = recall_at_1(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs).unwrap();
            assert_eq!(r, 1.0);
        }
    }

    #[test]
    fn dot_product_terminal_can_differ_from_query() {
        let data = Dataset::from_rows(&[vec![1.0, 0.0], vec![2.0, 0.0]]).unwrap();
        let kernel = KernelSpec::new(SimilarityKind::DotProduct, 1.0).unwrap();
        let g = frozen(DirectedGraph::complete(2));
        let r = evaluate_recall(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs).unwrap();
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.searches, 2);
    }

    #[test]
    fn recall_is_invariant_under_relabeling() {
        let data = generate_uniform(40, 4, 3).unwrap();
        let kernel = KernelSpec::rbf(0.3).unwrap();
        let g = build_svg(&data, &kernel, &NnlsSettings::default()).unwrap();
        let perm: Vec<usize> = (0..40).map(|i| (i * 7 + 3) % 40).collect();
        let mut inverse = vec![0; 40];
        for (old, &new) in perm.iter().enumerate() {
            inverse[new] = old;
        }
        let shuffled = data.select(&inverse).unwrap();
        let mut pg = g.permuted(&perm).unwrap();
        pg.freeze();
        for mode in [EvalMode::AllPairs, EvalMode::FixedEntry] {
            for t in [Traversal::greedy(), Traversal::beam(2)] {
                let a = evaluate_recall(&g, &data, &kernel, t, mode).unwrap();
                let b = evaluate_recall(&pg, &shuffled, &kernel, t, mode).unwrap();
                assert_eq!(a.recall, b.recall);
                assert_eq!(a.mean_kernel_evals, b.mean_kernel_evals);
            }
        }
    }

    #[test]
    fn beam_never_loses_to_greedy_on_all_pairs() {
        let data = generate_uniform(60, 8, 5).unwrap();
        let kernel = KernelSpec::rbf(data.median_pairwise_distance()).unwrap();
        let g = build_svg(&data, &kernel, &NnlsSettings::default()).unwrap();
        let greedy = recall_at_1(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs).unwrap();
        let beam = recall_at_1(&g, &data, &kernel, Traversal::beam(2), EvalMode::AllPairs).unwrap();
        assert!(beam >= greedy);
    }

    #[test]
    fn modes_round_trip_through_text() {
        for m in [EvalMode::AllPairs, EvalMode::FixedEntry, EvalMode::RandomEntry(42)] {
            assert_eq!(m.to_string().parse::<EvalMode>().unwrap(), m);
        }
        assert!("sideways".parse::<EvalMode>().is_err());
        for t in [Traversal::greedy(), Traversal::beam(2), Traversal::Euclidean] {
            assert_eq!(t.to_string().parse::<Traversal>().unwrap(), t);
        }
        assert_eq!("beam,1".parse::<Traversal>().unwrap(), Traversal::greedy());
        assert!("beam,0".parse::<Traversal>().is_err());
    }

    #[test]
    fn unfrozen_graph_is_rejected() {
        let data = generate_uniform(5, 2, 0).unwrap();
        let kernel = KernelSpec::rbf(1.0).unwrap();
        let g = DirectedGraph::complete(5);
        assert!(!g.is_frozen());
        assert!(evaluate_recall(&g, &data, &kernel, Traversal::greedy(), EvalMode::AllPairs).is_err());
    }
}
