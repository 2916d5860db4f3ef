use rayon::prelude::*;

use crate::data::{ground_truth, Dataset};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::KernelSpec;
use crate::solvers::SparseCoefficients;

/// `max(1ᵀs, 1) − 1`.
pub fn epsilon_general(coeffs: &SparseCoefficients) -> f64 {
    (coeffs.sum_weights().max(1.0) - 1.0).max(0.0)
}

/// `max(‖s‖₀ · ‖s‖∞, 1) − 1`.
pub fn epsilon_exponential(coeffs: &SparseCoefficients) -> f64 {
    let bound = coeffs.support_size() as f64 * coeffs.max_weight();
    (bound.max(1.0) - 1.0).max(0.0)
}

/// Absolute slack allowed on a log-kernel comparison of magnitude `v`.
fn log_tolerance(v: f64) -> f64 {
    1e-9 * v.abs().max(1.0)
}

/// Ids that are the exact top-1 of at least one indexed query, ascending.
pub fn target_set(data: &Dataset, kernel: &KernelSpec) -> Vec<usize> {
    let mut is_target = vec![false; data.len()];
    for top in ground_truth(kernel, data).entries {
        for t in top.ties {
            is_target[t] = true;
        }
    }
    (0..data.len()).filter(|&t| is_target[t]).collect()
}

/// Every `(i, t)` with `t ≠ i` a target for which no out-neighbor `j` of `i`
/// satisfies `K(x_i, x_t) ≤ (1 + ε_i) K(x_j, x_t)`.
///
/// Targets are the ids returned by [`target_set`]. The comparison runs on
/// log-kernel values.
pub fn certify_quasi_monotone(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    eps_per_node: &[f64],
) -> Result<Vec<(usize, usize)>> {
    let n = data.len();
    for got in [g.node_count(), eps_per_node.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    if let Some(bad) = eps_per_node.iter().find(|e| e.is_nan() || **e < 0.0) {
        return Err(Error::invalid(format!("ε must be nonnegative, got {bad}")));
    }
    let targets = target_set(data, kernel);
    let per_node: Vec<Vec<(usize, usize)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = data.row(i);
            let slack = eps_per_node[i].ln_1p();
            let nbrs = g.out(i);
            targets
                .iter()
                .copied()
                .filter(|&t| t != i)
                .filter(|&t| {
                    let xt = data.row(t);
                    let lhs = kernel.log_kernel_unchecked(xi, xt);
                    let tol = log_tolerance(lhs);
                    !nbrs.iter().any(|&j| {
                        lhs <= slack + kernel.log_kernel_unchecked(data.row(j), xt) + tol
                    })
                })
                .map(|t| (i, t))
                .collect()
        })
        .collect();
    Ok(per_node.into_iter().flatten().collect())
}
