//! The per-node SVM decision function implied by an NNLS solution.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

use super::SparseCoefficients;

/// `f_i(x) = (wᵀφ(x) + b) / (wᵀφ(x_i) + b)` with `w = φ(x_i) − Σ s_j φ(x_j)`
/// and `b = −½ wᵀ(φ(x_i) + φ(x_j'))`, `j'` the smallest support id.
///
/// Every inner product is expanded into kernel evaluations and summed in a
/// common exponent frame, so narrow kernels do not underflow.
pub fn decision_function(
    spec: &KernelSpec,
    data: &Dataset,
    coeffs: &SparseCoefficients,
    x: &[f64],
) -> Result<f64> {
    if x.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: x.len(),
        });
    }
    let anchor = coeffs.anchor;
    if anchor >= data.len() {
        return Err(Error::NodeOutOfRange {
            node: anchor,
            n: data.len(),
        });
    }
    let support: Vec<(usize, f64)> = coeffs.log_weights().collect();
    let Some(&(j_prime, _)) = support.first() else {
        return Err(Error::EmptySupport { anchor });
    };
    if let Some(&(bad, _)) = support.iter().find(|(j, _)| *j >= data.len()) {
        return Err(Error::NodeOutOfRange {
            node: bad,
            n: data.len(),
        });
    }

    // log terms of wᵀφ(y): (+ log K(x_i, y)) and (− log s_j + log K(x_j, y))
    let terms = |y: &[f64]| -> Vec<(f64, f64)> {
        let mut t = vec![(spec.log_kernel_unchecked(data.row(anchor), y), 1.0)];
        t.extend(
            support
                .iter()
                .map(|&(j, lw)| (lw + spec.log_kernel_unchecked(data.row(j), y), -1.0)),
        );
        t
    };
    let at_x = terms(x);
    let at_i = terms(data.row(anchor));
    let at_j = terms(data.row(j_prime));
    let frame = at_x
        .iter()
        .chain(&at_i)
        .chain(&at_j)
        .map(|&(l, _)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    let eval = |t: &[(f64, f64)]| t.iter().map(|&(l, sign)| sign * (l - frame).exp()).sum::<f64>();
    let (gx, gi, gj) = (eval(&at_x), eval(&at_i), eval(&at_j));
    Ok((gx - 0.5 * (gi + gj)) / (0.5 * (gi - gj)))
}
