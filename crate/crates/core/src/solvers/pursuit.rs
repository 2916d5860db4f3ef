//! Nonnegative subspace pursuit for `min ‖φ(x_i) − Φ s‖²  s.t. s ≥ 0, ‖s‖₀ ≤ M`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramOracle;

use super::{frame, residual_sq, solve_svg_node, NnlsSettings, SparseCoefficients};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PursuitSettings {
    /// Maximum number of pursuit iterations `T`.
    pub max_iterations: usize,
    pub nnls: NnlsSettings,
}

impl Default for PursuitSettings {
    fn default() -> Self {
        Self {
            max_iterations: 16,
            nnls: NnlsSettings::default(),
        }
    }
}

/// Where the per-iteration candidate search gets its answers from.
pub trait AttentionSource {
    /// Up to `count` candidate positions with the largest `score`, ties to
    /// the smallest position.
    fn select(&self, score: &dyn Fn(usize) -> f64, count: usize) -> Vec<usize>;
}

/// Scans every candidate position `0..len`.
#[derive(Clone, Copy, Debug)]
pub struct ExhaustiveAttention {
    pub len: usize,
}

impl AttentionSource for ExhaustiveAttention {
    fn select(&self, score: &dyn Fn(usize) -> f64, count: usize) -> Vec<usize> {
        let mut scored: Vec<(f64, usize)> = (0..self.len).map(|k| (score(k), k)).collect();
        scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        scored.truncate(count);
        scored.into_iter().map(|(_, k)| k).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PursuitTrace {
    pub coefficients: SparseCoefficients,
    /// Residual of every accepted iterate, starting with the empty support.
    pub residuals: Vec<f64>,
    /// Iterations run, including a rejected final one.
    pub iterations: usize,
}

/// Restriction of an oracle to a subset of its candidate positions.
struct Subset<'o, O: ?Sized> {
    parent: &'o O,
    positions: Vec<usize>,
    ids: Vec<usize>,
}

impl<O: GramOracle + ?Sized> GramOracle for Subset<'_, O> {
    fn anchor(&self) -> usize {
        self.parent.anchor()
    }
    fn candidates(&self) -> &[usize] {
        &self.ids
    }
    fn anchor_log(&self, a: usize) -> f64 {
        self.parent.anchor_log(self.positions[a])
    }
    fn log_entry(&self, a: usize, b: usize) -> f64 {
        self.parent.log_entry(self.positions[a], self.positions[b])
    }
    fn anchor_self_log(&self) -> f64 {
        self.parent.anchor_self_log()
    }
    fn shift(&self) -> f64 {
        self.parent.shift()
    }
}

/// Degree-bounded solve over all candidates of `oracle`.
pub fn nonneg_subspace_pursuit<O: GramOracle + ?Sized>(
    oracle: &O,
    m: usize,
    settings: &PursuitSettings,
) -> Result<SparseCoefficients> {
    let source = ExhaustiveAttention {
        len: oracle.candidates().len(),
    };
    pursue(oracle, m, settings, &source).map(|t| t.coefficients)
}

/// Runs the pursuit loop, drawing each iteration's new candidates from
/// `source`:
/// select the `m` positions with largest attention `K(i,k) − Σ_j s_j K(j,k)`,
/// solve NNLS on their union with the current support, keep the `m` largest
/// positive weights and project onto them (NNLS restricted to the kept
/// support). Stops when the support repeats, when the residual
/// grows (the previous iterate is returned) or after `max_iterations`.
pub fn pursue<O: GramOracle + ?Sized>(
    oracle: &O,
    m: usize,
    settings: &PursuitSettings,
    source: &dyn AttentionSource,
) -> Result<PursuitTrace> {
    let c = oracle.candidates().len();
    if c == 0 {
        return Err(Error::EmptyCandidates);
    }
    if m == 0 {
        return Err(Error::invalid("sparsity level M must be at least 1"));
    }
    let (g, shift) = frame(oracle);
    let log_scale = shift - g;

    // current support as (position, ŝ) in this oracle's frame
    let mut support: Vec<(usize, f64)> = Vec::new();
    let mut residual = residual_sq(oracle, &support, log_scale);
    let mut residuals = vec![residual];
    let mut iterations = 0;

    while iterations < settings.max_iterations {
        iterations += 1;
        let score = |k: usize| {
            let mut v = (oracle.anchor_log(k) - shift).exp();
            for &(j, w) in &support {
                v -= w * (oracle.log_entry(j, k) - g).exp();
            }
            v
        };
        let mut union: Vec<usize> = source.select(&score, m);
        union.extend(support.iter().map(|&(j, _)| j));
        union.sort_unstable();
        union.dedup();

        let union: Vec<(usize, f64)> = union.into_iter().map(|p| (p, 0.0)).collect();
        let mut next = project(oracle, &union, log_scale, &settings.nnls)?;
        next.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let truncated = next.len() > m;
        next.truncate(m);
        next.sort_by_key(|&(p, _)| p);
        if truncated {
            next = project(oracle, &next, log_scale, &settings.nnls)?;
        }

        let next_residual = residual_sq(oracle, &next, log_scale);
        if next_residual > residual {
            break;
        }
        let unchanged = next.len() == support.len()
            && next.iter().zip(&support).all(|(a, b)| a.0 == b.0);
        support = next;
        residual = next_residual;
        residuals.push(residual);
        if unchanged {
            break;
        }
    }

    let entries = support
        .iter()
        .map(|&(p, w)| (oracle.candidates()[p], w))
        .collect();
    Ok(PursuitTrace {
        coefficients: SparseCoefficients::from_scaled(
            oracle.anchor(),
            entries,
            log_scale,
            residual,
        ),
        residuals,
        iterations,
    })
}

/// Re-solves NNLS restricted to the positions of `support`, returning
/// `(position, ŝ)` in the frame given by `log_scale`.
fn project<O: GramOracle + ?Sized>(
    oracle: &O,
    support: &[(usize, f64)],
    log_scale: f64,
    settings: &NnlsSettings,
) -> Result<Vec<(usize, f64)>> {
    let positions: Vec<usize> = support.iter().map(|&(p, _)| p).collect();
    let sub = Subset {
        parent: oracle,
        ids: positions.iter().map(|&p| oracle.candidates()[p]).collect(),
        positions,
    };
    let solved = solve_svg_node(&sub, settings)?;
    let rescale = (solved.log_scale() - log_scale).exp();
    let by_id: HashMap<usize, usize> = sub
        .ids
        .iter()
        .zip(&sub.positions)
        .map(|(&id, &p)| (id, p))
        .collect();
    let mut out: Vec<(usize, f64)> = solved
        .scaled_entries()
        .iter()
        .map(|&(id, w)| (by_id[&id], w * rescale))
        .collect();
    out.sort_by_key(|&(p, _)| p);
    Ok(out)
}

/// `K(x_i, x_k) − Σ_j s_j K(x_j, x_k)` for every candidate position `k`.
pub fn attention_scores<O: GramOracle + ?Sized>(
    oracle: &O,
    coefficients: &SparseCoefficients,
) -> Vec<f64> {
    let pos: HashMap<usize, usize> = oracle
        .candidates()
        .iter()
        .enumerate()
        .map(|(p, &id)| (id, p))
        .collect();
    let support: Vec<(usize, f64)> = coefficients
        .log_weights()
        .filter_map(|(id, lw)| pos.get(&id).map(|&p| (p, lw)))
        .collect();
    (0..oracle.candidates().len())
        .map(|k| {
            let mut v = oracle.anchor_log(k).exp();
            for &(j, lw) in &support {
                v -= (lw + oracle.log_entry(j, k)).exp();
            }
            v
        })
        .collect()
}
