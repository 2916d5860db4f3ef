use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::certify::{certify_quasi_monotone, epsilon_exponential, epsilon_general};
use super::delaunay::{delaunay_graph, DelaunayNeighbors};
use super::recall::{evaluate_recall_with, EvalMode, RecallStats, Traversal};
use crate::builder::{graph_from_coefficients, solve_svg_nodes};
use crate::data::{ground_truth, Dataset};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::KernelSpec;
use crate::solvers::NnlsSettings;

pub const HISTOGRAM_BINS: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSummary {
    pub mean: f64,
    /// Nearest-rank 95th percentile.
    pub p95: f64,
    pub max: f64,
}

impl EpsilonSummary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: 0.0,
                p95: 0.0,
                max: 0.0,
            };
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let rank = ((0.95 * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            p95: sorted[rank - 1],
            max: sorted[sorted.len() - 1],
        }
    }
}

/// Out-edges of a graph checked against the Delaunay neighbor relation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DelaunayCheck {
    pub checked_edges: usize,
    /// Edges whose pair has an LP optimum within the degeneracy tolerance.
    pub degenerate_edges: usize,
    /// Edges that are not Delaunay edges.
    pub exceptions: Vec<(usize, usize)>,
    pub mean_delaunay_degree: f64,
}

impl DelaunayCheck {
    pub fn passed(&self) -> bool {
        self.exceptions.is_empty()
    }
}

/// Compares every edge `i → j` of `g` with the Delaunay neighbors of `i`.
pub fn delaunay_subset_check(g: &DirectedGraph, delaunay: &[DelaunayNeighbors]) -> Result<DelaunayCheck> {
    if g.node_count() != delaunay.len() {
        return Err(Error::DimensionMismatch {
            expected: delaunay.len(),
            got: g.node_count(),
        });
    }
    let mut check = DelaunayCheck {
        checked_edges: 0,
        degenerate_edges: 0,
        exceptions: Vec::new(),
        mean_delaunay_degree: 0.0,
    };
    for (i, dn) in delaunay.iter().enumerate() {
        for &j in g.out(i) {
            if dn.degenerate.binary_search(&j).is_ok() {
                check.degenerate_edges += 1;
            } else {
                check.checked_edges += 1;
                if dn.neighbors.binary_search(&j).is_err() {
                    check.exceptions.push((i, j));
                }
            }
        }
    }
    let total: usize = delaunay.iter().map(|d| d.neighbors.len()).sum();
    check.mean_delaunay_degree = total as f64 / delaunay.len().max(1) as f64;
    Ok(check)
}

#[derive(Clone, Debug)]
pub struct AuditOptions {
    pub nnls: NnlsSettings,
    /// Recall measurements to add to the report.
    pub recall: Vec<(Traversal, EvalMode)>,
    /// Run the LP Delaunay oracle; meant for small `d`.
    pub delaunay_check: bool,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self {
            nnls: NnlsSettings::default(),
            recall: vec![
                (Traversal::greedy(), EvalMode::AllPairs),
                (Traversal::beam(2), EvalMode::AllPairs),
                (Traversal::greedy(), EvalMode::FixedEntry),
                (Traversal::greedy(), EvalMode::RandomEntry(0)),
            ],
            delaunay_check: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NavigabilityReport {
    pub n: usize,
    pub dim: usize,
    pub similarity: String,
    pub sigma: f64,
    pub epsilon_general: Vec<f64>,
    pub epsilon_exponential: Vec<f64>,
    /// `max_i ε_i` of the general bound.
    pub epsilon: f64,
    pub general_summary: EpsilonSummary,
    pub exponential_summary: EpsilonSummary,
    pub certified_nodes: usize,
    pub violations: Vec<(usize, usize)>,
    pub mean_out_degree: f64,
    pub recall: Vec<RecallStats>,
    pub delaunay: Option<DelaunayCheck>,
}

/// Builds the SVG of `data` and audits it.
pub fn audit(data: &Dataset, kernel: &KernelSpec, options: &AuditOptions) -> Result<NavigabilityReport> {
    let coeffs = solve_svg_nodes(data, kernel, &options.nnls)?;
    let mut g = graph_from_coefficients(data.len(), &coeffs)?;
    g.freeze();
    let eps_g: Vec<f64> = coeffs.iter().map(epsilon_general).collect();
    let eps_e: Vec<f64> = coeffs.iter().map(epsilon_exponential).collect();
    let violations = certify_quasi_monotone(&g, data, kernel, &eps_g)?;
    let truth = ground_truth(kernel, data);
    let recall = options
        .recall
        .iter()
        .map(|&(t, m)| evaluate_recall_with(&g, data, kernel, &truth, t, m))
        .collect::<Result<Vec<_>>>()?;
    let delaunay = if options.delaunay_check {
        Some(delaunay_subset_check(&g, &delaunay_graph(data)?)?)
    } else {
        None
    };
    let mut bad = vec![false; data.len()];
    for &(i, _) in &violations {
        bad[i] = true;
    }
    Ok(NavigabilityReport {
        n: data.len(),
        dim: data.dim(),
        similarity: kernel.similarity.name().to_string(),
        sigma: kernel.sigma(),
        epsilon: eps_g.iter().copied().fold(0.0, f64::max),
        general_summary: EpsilonSummary::of(&eps_g),
        exponential_summary: EpsilonSummary::of(&eps_e),
        epsilon_general: eps_g,
        epsilon_exponential: eps_e,
        certified_nodes: bad.iter().filter(|b| !**b).count(),
        violations,
        mean_out_degree: g.degree_stats().mean,
        recall,
        delaunay,
    })
}

impl NavigabilityReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `key,value` lines.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(out, "{k},{v}");
        };
        row("n", self.n.to_string());
        row("d", self.dim.to_string());
        row("similarity", self.similarity.clone());
        row("sigma", self.sigma.to_string());
        row("epsilon", self.epsilon.to_string());
        row("epsilon_mean", self.general_summary.mean.to_string());
        row("epsilon_p95", self.general_summary.p95.to_string());
        row("epsilon_exp_max", self.exponential_summary.max.to_string());
        row("epsilon_exp_mean", self.exponential_summary.mean.to_string());
        row("epsilon_exp_p95", self.exponential_summary.p95.to_string());
        row("certified_nodes", self.certified_nodes.to_string());
        row("violations", self.violations.len().to_string());
        row("mean_out_degree", self.mean_out_degree.to_string());
        for r in &self.recall {
            row(&format!("recall[{} {}]", r.traversal, r.mode), r.recall.to_string());
            row(
                &format!("kernel_evals[{} {}]", r.traversal, r.mode),
                r.mean_kernel_evals.to_string(),
            );
        }
        if let Some(d) = &self.delaunay {
            row("delaunay_checked_edges", d.checked_edges.to_string());
            row("delaunay_degenerate_edges", d.degenerate_edges.to_string());
            row("delaunay_exceptions", d.exceptions.len().to_string());
            row("delaunay_mean_degree", d.mean_delaunay_degree.to_string());
        }
        out
    }

    /// Equal-width histogram of the general ε values over `[0, max]`.
    pub fn histogram_csv(&self) -> String {
        histogram_csv(&self.epsilon_general, HISTOGRAM_BINS)
    }

    /// Writes `<prefix>.json`, `<prefix>.csv` and `<prefix>_hist.csv`.
    pub fn write(&self, prefix: &Path) -> Result<Vec<PathBuf>> {
        let with = |suffix: &str| {
            let mut p = prefix.as_os_str().to_owned();
            p.push(suffix);
            PathBuf::from(p)
        };
        let files = [
            (with(".json"), self.to_json()?),
            (with(".csv"), self.summary_csv()),
            (with("_hist.csv"), self.histogram_csv()),
        ];
        for (path, body) in &files {
            std::fs::write(path, body).map_err(|source| Error::Io {
                path: path.clone(),
                source,
            })?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }
}

fn histogram_csv(values: &[f64], bins: usize) -> String {
    let top = values.iter().copied().fold(0.0, f64::max);
    let width = if top > 0.0 { top / bins as f64 } else { 1.0 / bins as f64 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    let mut out = String::from("bin,lower,upper,count\n");
    for (b, c) in counts.iter().enumerate() {
        let _ = writeln!(out, "{b},{},{},{c}", b as f64 * width, (b + 1) as f64 * width);
    }
    out
}
