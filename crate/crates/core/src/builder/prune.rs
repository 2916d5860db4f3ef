use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{squared_distance, Dataset};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;

use super::{pool_for, ranked_by_similarity, BuildConfig, CandidatePool, Duplicates};

/// Connectivity rule: after accepting `j` for anchor `i`, decides whether
/// a remaining candidate `k` stays in the pool.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PruneRule {
    /// Keep `k` if `sim(i,j) + sim(j,k) < sim(i,k)`, i.e.
    /// `K(i,j)·K(j,k) < K(i,k)` for an exponential kernel.
    Kernel,
    /// Keep `k` if `‖x_i − x_k‖ ≤ ‖x_j − x_k‖`.
    Mrng,
    /// Keep `k` if `‖x_i − x_k‖ ≤ λ‖x_j − x_k‖`, `λ ≥ 1`.
    Vamana(f64),
    /// Keep `k` if the angle between `x_j − x_i` and `x_k − x_i` is at least
    /// `θ` degrees or `‖x_j − x_i‖ ≥ ‖x_i − x_k‖`, `θ ∈ [0, 60]`.
    Ssg(f64),
}

impl PruneRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            PruneRule::Vamana(l) if !(l >= 1.0 && l.is_finite()) => {
                Err(Error::invalid(format!("Vamana λ must be ≥ 1, got {l}")))
            }
            PruneRule::Ssg(t) if !(0.0..=60.0).contains(&t) => {
                Err(Error::invalid(format!("SSG θ must lie in [0°, 60°], got {t}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            PruneRule::Kernel => "kernel-rule".into(),
            PruneRule::Mrng => "mrng".into(),
            PruneRule::Vamana(l) => format!("vamana({l})"),
            PruneRule::Ssg(t) => format!("ssg({t})"),
        }
    }
}

fn angle(xi: &[f64], xj: &[f64], xk: &[f64]) -> f64 {
    let (mut dot, mut nj, mut nk) = (0.0, 0.0, 0.0);
    for ((a, b), c) in xi.iter().zip(xj).zip(xk) {
        let (u, v) = (b - a, c - a);
        dot += u * v;
        nj += u * u;
        nk += v * v;
    }
    (dot / (nj.sqrt() * nk.sqrt())).clamp(-1.0, 1.0).acos()
}

/// Pruning meta-algorithm with one of the built-in rules. The candidate
/// pool comes from `config.candidate_pool`; `config.max_out_degree` stops
/// the scan early when nonzero. The result is frozen.
pub fn build_pruned(data: &Dataset, rule: PruneRule, config: &BuildConfig) -> Result<DirectedGraph> {
    rule.validate()?;
    let kernel = &config.kernel;
    match rule {
        PruneRule::Kernel => build_pruned_with(data, config, |i, j, k| {
            let s = |a: usize, b: usize| kernel.similarity_unchecked(data.row(a), data.row(b));
            s(i, j) + s(j, k) < s(i, k)
        }),
        PruneRule::Mrng => build_pruned_with(data, config, |i, j, k| {
            squared_distance(data.row(i), data.row(k)) <= squared_distance(data.row(j), data.row(k))
        }),
        PruneRule::Vamana(l) => build_pruned_with(data, config, |i, j, k| {
            squared_distance(data.row(i), data.row(k)).sqrt()
                <= l * squared_distance(data.row(j), data.row(k)).sqrt()
        }),
        PruneRule::Ssg(theta) => {
            let theta = theta.to_radians();
            build_pruned_with(data, config, move |i, j, k| {
                angle(data.row(i), data.row(j), data.row(k)) >= theta
                    || squared_distance(data.row(j), data.row(i))
                        >= squared_distance(data.row(i), data.row(k))
            })
        }
    }
}

/// Pruning meta-algorithm with an arbitrary rule `keep(i, j, k)`:
/// candidates are scanned in decreasing `K(x_i, ·)` (smallest id on ties);
/// the best remaining one is accepted and the rest are filtered by `keep`.
pub fn build_pruned_with<F>(data: &Dataset, config: &BuildConfig, keep: F) -> Result<DirectedGraph>
where
    F: Fn(usize, usize, usize) -> bool + Sync,
{
    config.validate()?;
    if config.candidate_pool == CandidatePool::CurrentGraph {
        return Err(Error::invalid("pruning builders need a Full or ExactKnn pool"));
    }
    let dups = Duplicates::new(data);
    let m = config.max_out_degree;
    let lists = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let pool = pool_for(data, &config.kernel, &dups, config.candidate_pool, i)?;
            let mut rest = ranked_by_similarity(data, &config.kernel, i, pool.into_iter());
            let mut out = Vec::new();
            while !rest.is_empty() && (m == 0 || out.len() < m) {
                let j = rest.remove(0);
                out.push(j);
                rest.retain(|&k| keep(i, j, k));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = DirectedGraph::new(data.len());
    for (i, list) in lists.iter().enumerate() {
        g.set_neighbors(i, list)?;
    }
    g.freeze();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_uniform;
    use crate::kernels::{KernelSpec, SimilarityKind};

    fn cfg(s: f64) -> BuildConfig {
        BuildConfig::new(KernelSpec::rbf(s).unwrap())
    }

    fn collinear() -> Dataset {
        Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap()
    }

    #[test]
    fn kernel_rule_prunes_far_collinear_point() {
        let g = build_pruned(&collinear(), PruneRule::Kernel, &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
    }

    #[test]
    fn mrng_keeps_right_angle_candidate() {
        let data = Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = build_pruned(&data, PruneRule::Mrng, &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1, 2]);
    }

    #[test]
    fn vamana_boundary() {
        // ‖x0 − x2‖ = 2 and λ‖x1 − x2‖ = 2: kept on equality
        let g = build_pruned(&collinear(), PruneRule::Vamana(2.0), &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1, 2]);
        let g = build_pruned(&collinear(), PruneRule::Vamana(1.5), &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
        let g = build_pruned(&collinear(), PruneRule::Mrng, &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
    }

    #[test]
    fn ssg_angle_threshold() {
        // j at 0°, k at 45°, farther than j
        let data =
            Dataset::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 2.0]]).unwrap();
        let g = build_pruned(&data, PruneRule::Ssg(30.0), &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1, 2]);
        let g = build_pruned(&data, PruneRule::Ssg(60.0), &cfg(1.0)).unwrap();
        assert_eq!(g.neighbors(0).unwrap(), &[1]);
    }

    #[test]
    fn rejects_bad_rule_parameters() {
        let data = collinear();
        assert!(build_pruned(&data, PruneRule::Vamana(0.5), &cfg(1.0)).is_err());
        assert!(build_pruned(&data, PruneRule::Ssg(75.0), &cfg(1.0)).is_err());
        let inc = cfg(1.0).with_pool(CandidatePool::CurrentGraph);
        assert!(build_pruned(&data, PruneRule::Mrng, &inc).is_err());
    }

    #[test]
    fn kernel_rule_is_triangle_rule_for_rbf() {
        for seed in 0..5 {
            let data = generate_uniform(60, 4, seed).unwrap();
            let a = build_pruned(&data, PruneRule::Kernel, &cfg(0.7)).unwrap();
            let b = build_pruned_with(&data, &cfg(0.7), |i, j, k| {
                let d = |x: usize, y: usize| squared_distance(data.row(x), data.row(y));
                d(i, j) + d(j, k) > d(i, k)
            })
            .unwrap();
            assert_eq!(a.edges(), b.edges());
        }
    }

    #[test]
    fn kernel_rule_independent_of_width() {
        let data = generate_uniform(60, 3, 3).unwrap();
        for kind in [SimilarityKind::EuclideanSq, SimilarityKind::DotProduct] {
            let edges: Vec<_> = [0.1, 1.0, 10.0]
                .iter()
                .map(|&s| {
                    let c = BuildConfig::new(KernelSpec::new(kind.clone(), s).unwrap());
                    build_pruned(&data, PruneRule::Kernel, &c).unwrap().edges()
                })
                .collect();
            assert_eq!(edges[0], edges[1]);
            assert_eq!(edges[1], edges[2]);
        }
    }

    #[test]
    fn degree_cap_truncates_scan() {
        let data = generate_uniform(50, 8, 1).unwrap();
        let full = build_pruned(&data, PruneRule::Mrng, &cfg(1.0)).unwrap();
        let capped = build_pruned(&data, PruneRule::Mrng, &cfg(1.0).with_max_out_degree(3)).unwrap();
        assert!(capped.degree_stats().max <= 3);
        for i in 0..50 {
            let f = full.out(i);
            let c = capped.out(i);
            assert!(c.iter().all(|j| f.contains(j)));
        }
    }
}
