//! Lawson–Hanson active-set NNLS in Gram (normal-equations) form:
//! minimize `½ sᵀ K s − kᵀ s` subject to `s ≥ 0`.

use crate::error::{Error, Result};
use crate::kernels::GramOracle;

use super::{frame, residual_sq, NnlsSettings, SparseCoefficients};

/// Relative pivot size below which a passive column is treated as linearly
/// dependent on the others.
const PIVOT_EPS: f64 = 1e-13;

/// Solves the per-node SVG problem
/// `min ½‖φ(x_i) − Φ s‖²  s.t.  s ≥ 0, s_i = 0` over the oracle's candidates.
///
/// On return the KKT certificate holds on the rescaled system: every
/// gradient entry is at least `-dual_tolerance` and complementary slackness
/// holds to the same tolerance.
pub fn solve_svg_node<O: GramOracle + ?Sized>(
    oracle: &O,
    settings: &NnlsSettings,
) -> Result<SparseCoefficients> {
    let cands = oracle.candidates();
    let c = cands.len();
    if c == 0 {
        return Err(Error::EmptyCandidates);
    }
    let (g, m) = frame(oracle);
    let rhs: Vec<f64> = (0..c).map(|a| (oracle.anchor_log(a) - m).exp()).collect();
    let entry = |a: usize, b: usize| (oracle.log_entry(a, b) - g).exp();
    let log_scale = m - g;

    let finish = |s: Vec<f64>| {
        let pos: Vec<(usize, f64)> = s
            .iter()
            .enumerate()
            .filter(|&(a, &w)| w > settings.zero_clip * own_scale(rhs[a], entry(a, a)))
            .map(|(a, &w)| (a, w))
            .collect();
        let res = residual_sq(oracle, &pos, log_scale);
        let entries = pos.into_iter().map(|(a, w)| (cands[a], w)).collect();
        SparseCoefficients::from_scaled(oracle.anchor(), entries, log_scale, res)
    };

    match active_set(c, &rhs, &entry, cands, settings) {
        Ok(s) => Ok(finish(s)),
        Err((s, iterations)) => Err(Error::NonConvergence {
            anchor: oracle.anchor(),
            iterations,
            best: Box::new(finish(s)),
        }),
    }
}

/// NNLS on an explicit dense Gram system (`gram` row-major `n × n`).
/// Entries below `zero_clip` are set to zero.
pub fn nnls_dense(gram: &[f64], rhs: &[f64], settings: &NnlsSettings) -> Result<Vec<f64>> {
    let n = rhs.len();
    if gram.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            got: gram.len(),
        });
    }
    let keys: Vec<usize> = (0..n).collect();
    let entry = |a: usize, b: usize| gram[a * n + b];
    let clip = |mut s: Vec<f64>| {
        for (a, v) in s.iter_mut().enumerate() {
            if *v <= settings.zero_clip * own_scale(rhs[a], entry(a, a)) {
                *v = 0.0;
            }
        }
        s
    };
    match active_set(n, rhs, &entry, &keys, settings) {
        Ok(s) => Ok(clip(s)),
        Err((s, iterations)) => Err(Error::NonConvergence {
            anchor: usize::MAX,
            iterations,
            best: Box::new(SparseCoefficients::from_scaled(
                usize::MAX,
                clip(s).into_iter().enumerate().collect(),
                0.0,
                f64::NAN,
            )),
        }),
    }
}

/// Magnitude of the one-column solution `rhs / diag`, capped at 1, against
/// which a weight is judged negligible.
fn own_scale(rhs: f64, diag: f64) -> f64 {
    if diag > 0.0 {
        (rhs.abs() / diag).min(1.0)
    } else {
        1.0
    }
}

/// Core active-set loop. A column enters only when its gradient exceeds
/// `dual_tolerance` times the magnitude of the terms it is computed from
/// (capped at 1), so tiny but genuine weights survive very narrow kernels. `keys` break ties between equal gradients (smallest
/// key wins). On hitting the iteration cap returns the current iterate.
fn active_set(
    n: usize,
    rhs: &[f64],
    entry: &dyn Fn(usize, usize) -> f64,
    keys: &[usize],
    settings: &NnlsSettings,
) -> std::result::Result<Vec<f64>, (Vec<f64>, usize)> {
    let cap = settings.max_active_set_iterations.unwrap_or(10 * n).max(1);
    let tol = settings.dual_tolerance;

    let mut cols: Vec<Option<Vec<f64>>> = vec![None; n];
    let column = |j: usize, cols: &mut Vec<Option<Vec<f64>>>| {
        if cols[j].is_none() {
            cols[j] = Some((0..n).map(|a| entry(a, j)).collect());
        }
    };

    let mut s = vec![0.0; n];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; n];
    let mut blocked = vec![false; n];
    let mut w = rhs.to_vec();
    let mut mag: Vec<f64> = rhs.iter().map(|v| v.abs()).collect();
    let mut iterations = 0;

    loop {
        let mut pick: Option<usize> = None;
        for j in 0..n {
            if in_passive[j] || blocked[j] || w[j] <= tol * mag[j].min(1.0) {
                continue;
            }
            pick = match pick {
                Some(b) if w[b] > w[j] || (w[b] == w[j] && keys[b] < keys[j]) => Some(b),
                _ => Some(j),
            };
        }
        let Some(j) = pick else { break };
        iterations += 1;
        if iterations > cap {
            return Err((s, iterations - 1));
        }
        column(j, &mut cols);
        passive.push(j);
        in_passive[j] = true;
        let before = s.clone();

        loop {
            let z = match solve_passive(&passive, &cols, rhs) {
                Ok(z) => z,
                Err(q) => {
                    // Dependent column: drop it and keep it out until the
                    // passive set changes.
                    let p = passive.remove(q);
                    in_passive[p] = false;
                    s[p] = 0.0;
                    blocked[p] = true;
                    if passive.is_empty() {
                        break;
                    }
                    continue;
                }
            };
            if z.iter().all(|&v| v > 0.0) {
                for (&p, &v) in passive.iter().zip(&z) {
                    s[p] = v;
                }
                break;
            }
            iterations += 1;
            if iterations > cap {
                return Err((s, iterations - 1));
            }
            let mut alpha = f64::INFINITY;
            let mut hit = 0;
            for (q, (&p, &v)) in passive.iter().zip(&z).enumerate() {
                if v <= 0.0 {
                    let a = s[p] / (s[p] - v);
                    if a < alpha {
                        alpha = a;
                        hit = q;
                    }
                }
            }
            for (&p, &v) in passive.iter().zip(&z) {
                s[p] += alpha * (v - s[p]);
            }
            s[passive[hit]] = 0.0;
            passive.retain(|&p| {
                let keep = s[p] > 0.0;
                if !keep {
                    in_passive[p] = false;
                    s[p] = 0.0;
                }
                keep
            });
            if passive.is_empty() {
                break;
            }
        }

        if s == before {
            blocked[j] = true;
        } else {
            blocked.iter_mut().for_each(|b| *b = false);
        }

        w.copy_from_slice(rhs);
        for (m, r) in mag.iter_mut().zip(rhs) {
            *m = r.abs();
        }
        for &p in &passive {
            let col = cols[p].as_ref().expect("passive column cached");
            let sp = s[p];
            for ((wa, ma), ca) in w.iter_mut().zip(mag.iter_mut()).zip(col) {
                *wa -= sp * ca;
                *ma += (sp * ca).abs();
            }
        }
    }
    Ok(s)
}

/// Solves `K_PP z = rhs_P` by Cholesky. On a vanishing pivot returns its
/// index into `passive`.
fn solve_passive(
    passive: &[usize],
    cols: &[Option<Vec<f64>>],
    rhs: &[f64],
) -> std::result::Result<Vec<f64>, usize> {
    let p = passive.len();
    let mut l = vec![0.0; p * p];
    for a in 0..p {
        let col_a = cols[passive[a]].as_ref().expect("passive column cached");
        for b in 0..=a {
            let mut v = col_a[passive[b]];
            for k in 0..b {
                v -= l[a * p + k] * l[b * p + k];
            }
            if a == b {
                let diag = col_a[passive[a]];
                if v <= PIVOT_EPS * diag.max(f64::MIN_POSITIVE) {
                    return Err(a);
                }
                l[a * p + a] = v.sqrt();
            } else {
                l[a * p + b] = v / l[b * p + b];
            }
        }
    }
    let mut y: Vec<f64> = passive.iter().map(|&q| rhs[q]).collect();
    for a in 0..p {
        for k in 0..a {
            y[a] -= l[a * p + k] * y[k];
        }
        y[a] /= l[a * p + a];
    }
    for a in (0..p).rev() {
        for k in a + 1..p {
            y[a] -= l[k * p + a] * y[k];
        }
        y[a] /= l[a * p + a];
    }
    Ok(y)
}
