//! Kernelized nonnegative least squares and its sparsity-constrained variant.
//!
//! For an anchor `i` with candidate set `C`, both solvers minimize
//! `½‖φ(x_i) − Φ_C s‖²` over `s ≥ 0`; the pursuit solver additionally caps
//! `‖s‖₀ ≤ M`. All work happens on a rescaled system
//! `K̂ = exp(log K − g)`, `k̂ = exp(log k − m)` where `g` is the largest
//! Gram log value and `m` the oracle's anchor shift. The true minimizer is
//! `s = ŝ · exp(m − g)`.

mod decision;
mod nnls;
mod pursuit;

pub use decision::decision_function;
pub use nnls::{nnls_dense, solve_svg_node};
pub use pursuit::{
    attention_scores, nonneg_subspace_pursuit, pursue, AttentionSource, ExhaustiveAttention,
    PursuitSettings, PursuitTrace,
};

use serde::{Deserialize, Serialize};

use crate::kernels::GramOracle;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnlsSettings {
    /// KKT tolerance on the (rescaled) gradient, relative to the size of
    /// the terms each gradient entry is computed from (never looser than
    /// absolute).
    pub dual_tolerance: f64,
    /// Rescaled weights at or below this fraction of their one-column
    /// solution `k̂_j / K̂_jj` (capped at 1) are dropped from the support.
    pub zero_clip: f64,
    /// Cap on active-set iterations; `None` means ten per candidate.
    pub max_active_set_iterations: Option<usize>,
}

impl Default for NnlsSettings {
    fn default() -> Self {
        Self {
            dual_tolerance: 1e-10,
            zero_clip: 1e-12,
            max_active_set_iterations: None,
        }
    }
}

/// Nonzero entries of the per-node minimizer `s⁽ⁱ⁾`.
///
/// Weights are kept rescaled (`ŝ`) next to `log_scale`, so very narrow
/// kernels do not flush the support to zero; [`Self::weights`] returns true
/// values `ŝ · exp(log_scale)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseCoefficients {
    pub anchor: usize,
    /// `(candidate id, ŝ)`, ascending by id, all `ŝ > 0`.
    entries: Vec<(usize, f64)>,
    log_scale: f64,
    /// `‖φ(x_i) − Φ s‖²` in kernel units.
    pub residual_sq: f64,
}

impl SparseCoefficients {
    pub fn empty(anchor: usize, residual_sq: f64) -> Self {
        Self {
            anchor,
            entries: Vec::new(),
            log_scale: 0.0,
            residual_sq,
        }
    }

    /// Builds coefficients from rescaled entries, dropping non-positive
    /// weights. `entries` need not be sorted.
    pub fn from_scaled(
        anchor: usize,
        mut entries: Vec<(usize, f64)>,
        log_scale: f64,
        residual_sq: f64,
    ) -> Self {
        entries.retain(|&(id, w)| w > 0.0 && id != anchor);
        entries.sort_by_key(|&(id, _)| id);
        Self {
            anchor,
            entries,
            log_scale,
            residual_sq,
        }
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(id, _)| id)
    }

    pub fn support_ids(&self) -> Vec<usize> {
        self.support().collect()
    }

    pub fn scaled_entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// `(id, s_j)` in true scale.
    pub fn weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let f = self.log_scale.exp();
        self.entries.iter().map(move |&(id, w)| (id, w * f))
    }

    /// `ln s_j` for every support entry, exact even when `s_j` underflows.
    pub fn log_weights(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries
            .iter()
            .map(move |&(id, w)| (id, w.ln() + self.log_scale))
    }

    pub fn weight_of(&self, id: usize) -> Option<f64> {
        self.entries
            .binary_search_by_key(&id, |&(j, _)| j)
            .ok()
            .map(|p| self.entries[p].1 * self.log_scale.exp())
    }

    /// `1ᵀs`
    pub fn sum_weights(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).sum::<f64>() * self.log_scale.exp()
    }

    /// `‖s‖₀`
    pub fn support_size(&self) -> usize {
        self.entries.len()
    }

    /// `‖s‖∞`
    pub fn max_weight(&self) -> f64 {
        self.entries.iter().map(|&(_, w)| w).fold(0.0, f64::max) * self.log_scale.exp()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `(g, m)`: the largest Gram log value and the (finite) anchor shift.
pub(crate) fn frame<O: GramOracle + ?Sized>(oracle: &O) -> (f64, f64) {
    let g = (0..oracle.candidates().len())
        .map(|a| oracle.log_entry(a, a))
        .fold(f64::NEG_INFINITY, f64::max);
    let m = oracle.shift();
    (
        if g.is_finite() { g } else { 0.0 },
        if m.is_finite() { m } else { 0.0 },
    )
}

/// `‖φ(x_i) − Φ s‖²` for rescaled weights given as `(position, ŝ)` into an
/// oracle, returned in true kernel units.
pub(crate) fn residual_sq<O: GramOracle + ?Sized>(
    oracle: &O,
    entries: &[(usize, f64)],
    log_scale: f64,
) -> f64 {
    let self_term = oracle.anchor_self_log().exp();
    if entries.is_empty() {
        return self_term;
    }
    // Terms are summed in a common exponent frame `c` to stay finite.
    let mut logs = Vec::with_capacity(entries.len() * (entries.len() + 1));
    for &(a, wa) in entries {
        let la = wa.ln() + log_scale;
        logs.push((2.0f64.ln() + la + oracle.anchor_log(a), -1.0));
        for &(b, wb) in entries {
            let lb = wb.ln() + log_scale;
            logs.push((la + lb + oracle.log_entry(a, b), 1.0));
        }
    }
    let c = logs
        .iter()
        .map(|&(l, _)| l)
        .fold(oracle.anchor_self_log(), f64::max);
    let mut acc = (oracle.anchor_self_log() - c).exp();
    for (l, sign) in logs {
        acc += sign * (l - c).exp();
    }
    (acc * c.exp()).max(0.0)
}
