use rayon::prelude::*;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::{GramOracle, KernelSpec, LogKernelTable};
use crate::search::beam_search_top;
use crate::solvers::{
    nonneg_subspace_pursuit, pursue, solve_svg_node, AttentionSource, ExhaustiveAttention,
    NnlsSettings, SparseCoefficients,
};

use super::{pool_for, BuildConfig, CandidatePool, Duplicates};

/// Per-node NNLS solutions over all other nodes, in node order.
pub fn solve_svg_nodes(
    data: &Dataset,
    kernel: &KernelSpec,
    settings: &NnlsSettings,
) -> Result<Vec<SparseCoefficients>> {
    let table = LogKernelTable::new(data, kernel);
    let dups = Duplicates::new(data);
    (0..data.len())
        .into_par_iter()
        .map(|i| {
            let cands = pool_for(data, kernel, &dups, CandidatePool::Full, i)?;
            solve_svg_node(&table.view(i, cands), settings)
        })
        .collect()
}

/// Weighted graph whose out-edges of node `c.anchor` are the support of `c`.
/// Weights that underflow `f64` are stored as the smallest positive normal.
pub fn graph_from_coefficients(n: usize, coeffs: &[SparseCoefficients]) -> Result<DirectedGraph> {
    let mut g = DirectedGraph::new_weighted(n);
    for c in coeffs {
        let edges: Vec<(usize, f64)> = c
            .weights()
            .map(|(j, w)| (j, w.max(f64::MIN_POSITIVE)))
            .collect();
        g.set_weighted_neighbors(c.anchor, &edges)?;
    }
    Ok(g)
}

/// Support Vector Graph: node `i` links to the support of its NNLS
/// minimizer over all other nodes. The result is frozen.
pub fn build_svg(data: &Dataset, kernel: &KernelSpec, settings: &NnlsSettings) -> Result<DirectedGraph> {
    let coeffs = solve_svg_nodes(data, kernel, settings)?;
    let mut g = graph_from_coefficients(data.len(), &coeffs)?;
    g.freeze();
    Ok(g)
}

/// Log-value multiplier turning the global width into node `i`'s width.
fn sigma_factor(config: &BuildConfig, data: &Dataset, i: usize) -> Result<f64> {
    match &config.node_sigma {
        None => Ok(1.0),
        Some(f) => {
            let s = f(i, data);
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::invalid(format!("node {i}: kernel width must be positive, got {s}")));
            }
            let g = config.kernel.sigma();
            Ok((g / s) * (g / s))
        }
    }
}

/// Degree-bounded SVG (`‖s‖₀ ≤ M` per node) via nonnegative subspace
/// pursuit. `Full` and `ExactKnn` pools score every pool member at each
/// pursuit step; `CurrentGraph` inserts nodes in dataset order and finds
/// candidates by searching the partial graph from node 0. The result is
/// frozen.
pub fn build_svg_l0(data: &Dataset, config: &BuildConfig) -> Result<DirectedGraph> {
    config.validate()?;
    let m = config.max_out_degree;
    if m == 0 {
        return Err(Error::invalid("SVG-L0 needs a maximum out-degree M ≥ 1"));
    }
    let table = LogKernelTable::new(data, &config.kernel);
    let dups = Duplicates::new(data);
    let mut g = match config.candidate_pool {
        CandidatePool::CurrentGraph => incremental(data, config, &table, &dups)?,
        pool => {
            let coeffs = (0..data.len())
                .into_par_iter()
                .map(|i| {
                    let cands = pool_for(data, &config.kernel, &dups, pool, i)?;
                    let view = table.view_scaled(i, cands, sigma_factor(config, data, i)?);
                    nonneg_subspace_pursuit(&view, m, &config.pursuit)
                })
                .collect::<Result<Vec<_>>>()?;
            graph_from_coefficients(data.len(), &coeffs)?
        }
    };
    g.freeze();
    Ok(g)
}

/// Attention search over the graph built so far. Candidate positions are
/// the indices into the sorted id list `ids`.
struct GraphAttention<'g> {
    graph: &'g DirectedGraph,
    ids: &'g [usize],
    queue_length: usize,
}

impl AttentionSource for GraphAttention<'_> {
    fn select(&self, score: &dyn Fn(usize) -> f64, count: usize) -> Vec<usize> {
        let by_id = |v: usize| match self.ids.binary_search(&v) {
            Ok(p) => score(p),
            Err(_) => f64::NEG_INFINITY,
        };
        beam_search_top(self.graph, 0, self.queue_length.max(count), by_id)
            .into_iter()
            .filter(|&(_, s)| s > f64::NEG_INFINITY)
            .filter_map(|(v, _)| self.ids.binary_search(&v).ok())
            .take(count)
            .collect()
    }
}

fn incremental(
    data: &Dataset,
    config: &BuildConfig,
    table: &LogKernelTable<'_>,
    dups: &Duplicates,
) -> Result<DirectedGraph> {
    let n = data.len();
    let m = config.max_out_degree;
    let queue_length = config.queue_length.unwrap_or((4 * m).max(16));
    let mut g = DirectedGraph::new_weighted(n);
    let set = |g: &mut DirectedGraph, c: &SparseCoefficients| {
        let edges: Vec<(usize, f64)> = c
            .weights()
            .map(|(j, w)| (j, w.max(f64::MIN_POSITIVE)))
            .collect();
        g.set_weighted_neighbors(c.anchor, &edges)
    };

    for i in 1..n {
        let ids = pool_for(data, &config.kernel, dups, CandidatePool::CurrentGraph, i)?;
        if ids.is_empty() {
            continue;
        }
        let source = GraphAttention {
            graph: &g,
            ids: &ids,
            queue_length,
        };
        let view = table.view_scaled(i, ids.clone(), sigma_factor(config, data, i)?);
        let coeffs = pursue(&view, m, &config.pursuit, &source)?.coefficients;
        set(&mut g, &coeffs)?;

        // let earlier nodes reach the new one
        for j in coeffs.support_ids() {
            if dups.excluded(j, i) {
                continue;
            }
            let mut pool = g.out(j).to_vec();
            pool.push(i);
            pool.retain(|&k| !dups.excluded(j, k));
            pool.sort_unstable();
            pool.dedup();
            let view = table.view_scaled(j, pool, sigma_factor(config, data, j)?);
            let src = ExhaustiveAttention {
                len: view.candidates().len(),
            };
            let cj = pursue(&view, m, &config.pursuit, &src)?.coefficients;
            set(&mut g, &cj)?;
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_pruned, exact_knn_pool, PruneRule};
    use crate::data::generate_uniform;
    use std::sync::Arc;

    fn rbf(s: f64) -> KernelSpec {
        KernelSpec::rbf(s).unwrap()
    }

    #[test]
    fn two_points_link_both_ways() {
        let data = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.5]]).unwrap();
        let g = build_svg(&data, &rbf(1.0), &NnlsSettings::default()).unwrap();
        assert_eq!(g.edges(), vec![(0, 1), (1, 0)]);
        assert!(g.is_frozen());
    }

    #[test]
    fn collinear_far_point_is_not_linked() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = build_svg(&data, &rbf(1.0), &NnlsSettings::default()).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
    }

    #[test]
    fn grid_interior_links_axis_neighbors() {
        let rows: Vec<Vec<f64>> = (0..5)
            .flat_map(|r| (0..5).map(move |c| vec![c as f64, r as f64]))
            .collect();
        let data = Dataset::from_rows(&rows).unwrap();
        let g = build_svg(&data, &rbf(0.6), &NnlsSettings::default()).unwrap();
        for r in 1..4 {
            for c in 1..4 {
                let i = r * 5 + c;
                assert_eq!(g.neighbors(i).unwrap(), &[i - 5, i - 1, i + 1, i + 5], "node {i}");
            }
        }
    }

    #[test]
    fn degree_stats_match_supports() {
        let data = generate_uniform(40, 3, 2).unwrap();
        let coeffs = solve_svg_nodes(&data, &rbf(0.5), &NnlsSettings::default()).unwrap();
        let g = graph_from_coefficients(40, &coeffs).unwrap();
        let mean = coeffs.iter().map(|c| c.support_size()).sum::<usize>() as f64 / 40.0;
        assert_eq!(g.degree_stats().mean, mean);
    }

    #[test]
    fn natural_sparsity() {
        let mut total = 0.0;
        for seed in 0..10 {
            let data = generate_uniform(50, 2, seed).unwrap();
            let g = build_svg(&data, &rbf(0.5), &NnlsSettings::default()).unwrap();
            total += g.degree_stats().mean;
        }
        assert!(total / 10.0 < 10.0);
    }

    #[test]
    fn duplicate_anchor_links_to_its_copy() {
        let data =
            Dataset::from_rows(&[vec![0.0, 0.0], vec![0.5, 0.5], vec![0.0, 0.0], vec![0.0, 0.0]])
                .unwrap();
        let g = build_svg(&data, &rbf(1.0), &NnlsSettings::default()).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[2]);
        assert_eq!(g.neighbors(3).unwrap(), &[0]);
    }

    #[test]
    fn full_budget_l0_equals_svg() {
        let data = generate_uniform(30, 2, 4).unwrap();
        let k = rbf(0.3);
        let coeffs = solve_svg_nodes(&data, &k, &NnlsSettings::default()).unwrap();
        let svg = graph_from_coefficients(30, &coeffs).unwrap();
        let l0 = build_svg_l0(&data, &BuildConfig::new(k).with_max_out_degree(29)).unwrap();
        assert_eq!(svg.edges(), l0.edges());
        for i in 0..30 {
            let a = svg.weights(i).unwrap().unwrap();
            let b = l0.weights(i).unwrap().unwrap();
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn degree_bound_holds_in_every_mode() {
        let data = generate_uniform(80, 3, 6).unwrap();
        for pool in [CandidatePool::Full, CandidatePool::ExactKnn(12), CandidatePool::CurrentGraph] {
            for m in [1, 3, 6] {
                let cfg = BuildConfig::new(rbf(0.4)).with_max_out_degree(m).with_pool(pool);
                let g = build_svg_l0(&data, &cfg).unwrap();
                assert!(g.degree_stats().max <= m, "{pool:?} M={m}");
            }
        }
    }

    #[test]
    fn incremental_graph_reaches_late_nodes() {
        let data = generate_uniform(60, 2, 12).unwrap();
        let cfg = BuildConfig::new(rbf(0.2))
            .with_max_out_degree(6)
            .with_pool(CandidatePool::CurrentGraph);
        let g = build_svg_l0(&data, &cfg).unwrap();
        let mut seen = [false; 60];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in g.out(v) {
                if !std::mem::replace(&mut seen[w], true) {
                    stack.push(w);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn node_sigma_hook_is_applied() {
        let data = generate_uniform(40, 2, 1).unwrap();
        let base = BuildConfig::new(rbf(0.5)).with_max_out_degree(4);
        let same = base.clone().with_node_sigma(Arc::new(|_, _| 0.5));
        assert_eq!(
            build_svg_l0(&data, &base).unwrap(),
            build_svg_l0(&data, &same).unwrap()
        );
        let narrow = BuildConfig::new(rbf(0.1)).with_max_out_degree(4);
        let hooked = base.clone().with_node_sigma(Arc::new(|_, _| 0.1));
        assert_eq!(
            build_svg_l0(&data, &narrow).unwrap().edges(),
            build_svg_l0(&data, &hooked).unwrap().edges()
        );
        let bad = base.with_node_sigma(Arc::new(|_, _| -1.0));
        assert!(build_svg_l0(&data, &bad).is_err());
    }

    /// Two clusters of 30 points in squares of half-width 1, centers 10 apart.
    fn two_clusters() -> Dataset {
        let a = generate_uniform(30, 2, 71).unwrap();
        let b = generate_uniform(30, 2, 72).unwrap();
        let mut rows = Vec::new();
        for r in a.rows() {
            rows.push(vec![2.0 * r[0] - 1.0, 2.0 * r[1] - 1.0]);
        }
        for r in b.rows() {
            rows.push(vec![2.0 * r[0] + 9.0, 2.0 * r[1] - 1.0]);
        }
        Dataset::from_rows(&rows).unwrap()
    }

    #[test]
    fn pursuit_crosses_between_clusters() {
        let data = two_clusters();
        let k = rbf(4.0);
        // node of cluster A closest to cluster B
        let edge = (0..30)
            .max_by(|&a, &b| data.row(a)[0].total_cmp(&data.row(b)[0]))
            .unwrap();
        let m = 3;
        let l0 = build_svg_l0(&data, &BuildConfig::new(k.clone()).with_max_out_degree(m)).unwrap();
        assert!(l0.out(edge).iter().any(|&j| j >= 30), "{:?}", l0.out(edge));

        let truncated = build_pruned(
            &data,
            PruneRule::Mrng,
            &BuildConfig::new(k.clone())
                .with_max_out_degree(m)
                .with_pool(CandidatePool::ExactKnn(2 * m)),
        )
        .unwrap();
        assert!(exact_knn_pool(&data, &k, edge, 2 * m).unwrap().iter().all(|&j| j < 30));
        assert!(truncated.out(edge).iter().all(|&j| j < 30));
    }
}
