//! Graph constructions: full SVG, degree-bounded SVG-L0 and the pruning
//! meta-algorithm with classical connectivity rules.

mod prune;
mod svg;

pub use prune::{build_pruned, build_pruned_with, PruneRule};
pub use svg::{build_svg, build_svg_l0, graph_from_coefficients, solve_svg_nodes};

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::solvers::PursuitSettings;

/// Where a node's candidate neighbors come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CandidatePool {
    /// Every other node.
    Full,
    /// The given number of exact kernel nearest neighbors.
    ExactKnn(usize),
    /// Nodes inserted so far, reached by searching the graph under
    /// construction (SVG-L0 only).
    CurrentGraph,
}

/// Per-node kernel width for SVG-L0: `(node, data) -> σ_i`.
pub type NodeSigma = Arc<dyn Fn(usize, &Dataset) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct BuildConfig {
    pub kernel: KernelSpec,
    /// `M`; 0 means unbounded.
    pub max_out_degree: usize,
    pub candidate_pool: CandidatePool,
    pub pursuit: PursuitSettings,
    /// Beam width of the incremental SVG-L0 search; defaults to `max(4M, 16)`.
    pub queue_length: Option<usize>,
    /// Overrides the global σ per node in SVG-L0.
    pub node_sigma: Option<NodeSigma>,
}

impl fmt::Debug for BuildConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuildConfig")
            .field("kernel", &self.kernel)
            .field("max_out_degree", &self.max_out_degree)
            .field("candidate_pool", &self.candidate_pool)
            .field("pursuit", &self.pursuit)
            .field("queue_length", &self.queue_length)
            .field("node_sigma", &self.node_sigma.as_ref().map(|_| "<fn>"))
            .finish()
    }
}

impl BuildConfig {
    pub fn new(kernel: KernelSpec) -> Self {
        Self {
            kernel,
            max_out_degree: 0,
            candidate_pool: CandidatePool::Full,
            pursuit: PursuitSettings::default(),
            queue_length: None,
            node_sigma: None,
        }
    }

    pub fn with_max_out_degree(mut self, m: usize) -> Self {
        self.max_out_degree = m;
        self
    }

    pub fn with_pool(mut self, pool: CandidatePool) -> Self {
        self.candidate_pool = pool;
        self
    }

    pub fn with_pursuit(mut self, pursuit: PursuitSettings) -> Self {
        self.pursuit = pursuit;
        self
    }

    pub fn with_queue_length(mut self, l: usize) -> Self {
        self.queue_length = Some(l);
        self
    }

    pub fn with_node_sigma(mut self, f: NodeSigma) -> Self {
        self.node_sigma = Some(f);
        self
    }

    fn validate(&self) -> Result<()> {
        match self.candidate_pool {
            CandidatePool::ExactKnn(0) => Err(Error::invalid("candidate pool size must be at least 1")),
            _ if self.queue_length == Some(0) => Err(Error::invalid("queue length must be at least 1")),
            _ => Ok(()),
        }
    }
}

/// The `size` ids with the largest `K(x_i, ·)`, most similar first; ties go
/// to the smallest id.
pub fn exact_knn_pool(data: &Dataset, kernel: &KernelSpec, i: usize, size: usize) -> Result<Vec<usize>> {
    let n = data.len();
    if i >= n {
        return Err(Error::NodeOutOfRange { node: i, n });
    }
    if size > n - 1 {
        return Err(Error::invalid(format!(
            "pool size {size} exceeds the {} other nodes",
            n - 1
        )));
    }
    Ok(ranked_by_similarity(data, kernel, i, (0..n).filter(|&j| j != i))
        .into_iter()
        .take(size)
        .collect())
}

/// `ids` sorted by decreasing `sim(x_i, ·)`, smallest id first on ties.
pub(crate) fn ranked_by_similarity(
    data: &Dataset,
    kernel: &KernelSpec,
    i: usize,
    ids: impl Iterator<Item = usize>,
) -> Vec<usize> {
    let xi = data.row(i);
    let mut scored: Vec<(f64, usize)> = ids
        .map(|j| (kernel.similarity_unchecked(xi, data.row(j)), j))
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.into_iter().map(|(_, j)| j).collect()
}

/// Groups of identical rows, used to keep a single copy of an anchor's
/// duplicates among its candidates.
pub(crate) struct Duplicates {
    groups: Vec<Option<Arc<Vec<usize>>>>,
}

impl Duplicates {
    pub(crate) fn new(data: &Dataset) -> Self {
        let mut by_row: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
        for (i, row) in data.rows().enumerate() {
            let key = row.iter().map(|v| (v + 0.0).to_bits()).collect();
            by_row.entry(key).or_default().push(i);
        }
        let mut groups = vec![None; data.len()];
        for ids in by_row.into_values().filter(|g| g.len() > 1) {
            let shared = Arc::new(ids);
            for &i in shared.iter() {
                groups[i] = Some(Arc::clone(&shared));
            }
        }
        Self { groups }
    }

    /// True if `j` must not be a candidate of `i`: it duplicates `i` and is
    /// not the smallest such id.
    pub(crate) fn excluded(&self, i: usize, j: usize) -> bool {
        match &self.groups[i] {
            Some(g) => {
                let keep = g.iter().copied().find(|&k| k != i);
                j != i && g.binary_search(&j).is_ok() && Some(j) != keep
            }
            None => false,
        }
    }
}

/// Candidate ids for node `i` (ascending), excluding `i` and redundant
/// duplicates of it.
pub(crate) fn pool_for(
    data: &Dataset,
    kernel: &KernelSpec,
    dups: &Duplicates,
    pool: CandidatePool,
    i: usize,
) -> Result<Vec<usize>> {
    let n = data.len();
    let mut ids: Vec<usize> = match pool {
        CandidatePool::Full => (0..n).filter(|&j| j != i).collect(),
        CandidatePool::ExactKnn(size) => exact_knn_pool(data, kernel, i, size.min(n - 1))?,
        CandidatePool::CurrentGraph => (0..i).collect(),
    };
    ids.retain(|&j| !dups.excluded(i, j));
    ids.sort_unstable();
    Ok(ids)
}
