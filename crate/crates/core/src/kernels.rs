//! Similarities and exponential kernels `K(x, y) = exp(sim(x, y) / σ²)`.
//!
//! Everything the solvers consume goes through log-kernel values
//! (`sim / σ²`). Exponentiation only happens after subtracting a shift, so
//! narrow kernels do not underflow.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::data::{squared_distance, Dataset};
use crate::error::{Error, Result};

/// User-supplied distance for [`SimilarityKind::NegSquaredDistance`].
pub type DistanceFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SimilarityKind {
    /// `-‖x - y‖²`
    EuclideanSq,
    /// `⟨x, y⟩`
    DotProduct,
    /// `-dist(x, y)²` for an arbitrary distance.
    NegSquaredDistance { name: String, distance: DistanceFn },
}

impl SimilarityKind {
    pub fn custom(
        name: impl Into<String>,
        distance: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        SimilarityKind::NegSquaredDistance {
            name: name.into(),
            distance: Arc::new(distance),
        }
    }

    pub fn manhattan() -> Self {
        Self::custom("manhattan", |a, b| {
            a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
        })
    }

    pub fn hamming() -> Self {
        Self::custom("hamming", |a, b| {
            a.iter().zip(b).filter(|(x, y)| x != y).count() as f64
        })
    }

    pub fn name(&self) -> &str {
        match self {
            SimilarityKind::EuclideanSq => "euc",
            SimilarityKind::DotProduct => "dp",
            SimilarityKind::NegSquaredDistance { name, .. } => name,
        }
    }

    /// Distance-based similarities give `K(x, x) = 1`.
    pub fn is_normalized(&self) -> bool {
        !matches!(self, SimilarityKind::DotProduct)
    }

    #[inline]
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            SimilarityKind::EuclideanSq => -squared_distance(x, y),
            SimilarityKind::DotProduct => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            SimilarityKind::NegSquaredDistance { distance, .. } => {
                let d = distance(x, y);
                -(d * d)
            }
        }
    }
}

impl fmt::Debug for SimilarityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for SimilarityKind {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (SimilarityKind::EuclideanSq, SimilarityKind::EuclideanSq)
            | (SimilarityKind::DotProduct, SimilarityKind::DotProduct) => true,
            (
                SimilarityKind::NegSquaredDistance { distance: a, .. },
                SimilarityKind::NegSquaredDistance { distance: b, .. },
            ) => Arc::ptr_eq(a, b),
            _ => false,
        }
    }
}

/// A similarity together with the kernel width σ.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSpec {
    pub similarity: SimilarityKind,
    sigma: f64,
    inv_sigma_sq: f64,
}

impl KernelSpec {
    pub fn new(similarity: SimilarityKind, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::invalid(format!(
                "kernel width must be positive and finite, got {sigma}"
            )));
        }
        Ok(Self {
            similarity,
            sigma,
            inv_sigma_sq: 1.0 / (sigma * sigma),
        })
    }

    pub fn rbf(sigma: f64) -> Result<Self> {
        Self::new(SimilarityKind::EuclideanSq, sigma)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Same similarity, different width.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.similarity.clone(), sigma)
    }

    pub fn similarity(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dims(x, y)?;
        Ok(self.similarity.eval(x, y))
    }

    pub fn log_kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.similarity(x, y)? * self.inv_sigma_sq)
    }

    pub fn kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        Ok(self.log_kernel(x, y)?.exp())
    }

    #[inline]
    pub(crate) fn similarity_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.similarity.eval(x, y)
    }

    #[inline]
    pub(crate) fn log_kernel_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        self.similarity.eval(x, y) * self.inv_sigma_sq
    }
}

fn check_dims(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(())
}

/// Read access to one anchor's kernel subproblem, indexed by candidate
/// position `0..candidates().len()`.
pub trait GramOracle {
    fn anchor(&self) -> usize;
    fn candidates(&self) -> &[usize];
    /// `log K(x_anchor, x_candidate[a])`
    fn anchor_log(&self, a: usize) -> f64;
    /// `log K(x_candidate[a], x_candidate[b])`
    fn log_entry(&self, a: usize, b: usize) -> f64;
    /// `log K(x_anchor, x_anchor)`
    fn anchor_self_log(&self) -> f64;
    /// Global exponent shift applied to the anchor column.
    fn shift(&self) -> f64;
}

/// Dense log-domain Gram system for one anchor.
#[derive(Clone, Debug, PartialEq)]
pub struct LogGram {
    anchor: usize,
    candidates: Vec<usize>,
    /// Row-major `c × c` log-kernel values among candidates.
    logs: Vec<f64>,
    anchor_logs: Vec<f64>,
    anchor_self: f64,
    shift: f64,
}

impl LogGram {
    /// Assembles a system from explicit log values: `logs` is the row-major
    /// `c × c` candidate block, `anchor_logs` the anchor column. The shift is
    /// the largest anchor log value.
    pub fn from_parts(
        anchor: usize,
        candidates: Vec<usize>,
        logs: Vec<f64>,
        anchor_logs: Vec<f64>,
        anchor_self: f64,
    ) -> Result<Self> {
        let c = candidates.len();
        if c == 0 {
            return Err(Error::EmptyCandidates);
        }
        if logs.len() != c * c {
            return Err(Error::DimensionMismatch {
                expected: c * c,
                got: logs.len(),
            });
        }
        if anchor_logs.len() != c {
            return Err(Error::DimensionMismatch {
                expected: c,
                got: anchor_logs.len(),
            });
        }
        let shift = anchor_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            anchor,
            candidates,
            logs,
            anchor_logs,
            anchor_self,
            shift,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn anchor_logs(&self) -> &[f64] {
        &self.anchor_logs
    }

    pub fn log_matrix(&self) -> &[f64] {
        &self.logs
    }

    /// Replaces the shift. Any finite value is valid; minimizers do not
    /// depend on it.
    pub fn with_shift(mut self, shift: f64) -> Self {
        self.shift = shift;
        self
    }

    /// `exp(log K - m)` among candidates, row-major.
    pub fn exp_gram(&self) -> Vec<f64> {
        self.logs.iter().map(|v| (v - self.shift).exp()).collect()
    }

    /// `exp(log K(anchor, ·) - m)`
    pub fn exp_anchor(&self) -> Vec<f64> {
        self.anchor_logs.iter().map(|v| (v - self.shift).exp()).collect()
    }
}

impl GramOracle for LogGram {
    fn anchor(&self) -> usize {
        self.anchor
    }
    fn candidates(&self) -> &[usize] {
        &self.candidates
    }
    fn anchor_log(&self, a: usize) -> f64 {
        self.anchor_logs[a]
    }
    fn log_entry(&self, a: usize, b: usize) -> f64 {
        self.logs[a * self.candidates.len() + b]
    }
    fn anchor_self_log(&self) -> f64 {
        self.anchor_self
    }
    fn shift(&self) -> f64 {
        self.shift
    }
}

/// All pairwise log-kernel values among `candidates ∪ {anchor}`. The shift is
/// the largest anchor-to-candidate log value, so the largest shifted anchor
/// entry is exactly 1.
pub fn build_log_gram(
    spec: &KernelSpec,
    data: &Dataset,
    anchor: usize,
    candidates: &[usize],
) -> Result<LogGram> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let n = data.len();
    for &id in candidates.iter().chain(std::iter::once(&anchor)) {
        if id >= n {
            return Err(Error::NodeOutOfRange { node: id, n });
        }
    }
    if candidates.contains(&anchor) {
        return Err(Error::invalid(format!(
            "anchor {anchor} must not be among its own candidates"
        )));
    }
    let c = candidates.len();
    let mut logs = vec![0.0; c * c];
    for a in 0..c {
        for b in a..c {
            let v = spec.log_kernel_unchecked(data.row(candidates[a]), data.row(candidates[b]));
            logs[a * c + b] = v;
            logs[b * c + a] = v;
        }
    }
    let xa = data.row(anchor);
    let anchor_logs: Vec<f64> = candidates
        .iter()
        .map(|&j| spec.log_kernel_unchecked(xa, data.row(j)))
        .collect();
    let shift = anchor_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(LogGram {
        anchor,
        candidates: candidates.to_vec(),
        logs,
        anchor_logs,
        anchor_self: spec.log_kernel_unchecked(xa, xa),
        shift,
    })
}

/// Log-kernel lookups over a whole dataset, either precomputed or evaluated
/// on demand.
pub struct LogKernelTable<'a> {
    data: &'a Dataset,
    spec: KernelSpec,
    dense: Option<Vec<f64>>,
}

/// Above this many points the table evaluates kernels on demand.
pub const DENSE_TABLE_LIMIT: usize = 2048;

impl<'a> LogKernelTable<'a> {
    pub fn new(data: &'a Dataset, spec: &KernelSpec) -> Self {
        if data.len() <= DENSE_TABLE_LIMIT {
            Self::dense(data, spec)
        } else {
            Self::on_the_fly(data, spec)
        }
    }

    pub fn dense(data: &'a Dataset, spec: &KernelSpec) -> Self {
        let n = data.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let xi = data.row(i);
                (0..n)
                    .map(|j| spec.log_kernel_unchecked(xi, data.row(j)))
                    .collect()
            })
            .collect();
        Self {
            data,
            spec: spec.clone(),
            dense: Some(rows.concat()),
        }
    }

    pub fn on_the_fly(data: &'a Dataset, spec: &KernelSpec) -> Self {
        Self {
            data,
            spec: spec.clone(),
            dense: None,
        }
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    #[inline]
    pub fn log_k(&self, a: usize, b: usize) -> f64 {
        match &self.dense {
            Some(t) => t[a * self.data.len() + b],
            None => self
                .spec
                .log_kernel_unchecked(self.data.row(a), self.data.row(b)),
        }
    }

    /// Lazy Gram view for `anchor` over `candidates`.
    pub fn view(&self, anchor: usize, candidates: Vec<usize>) -> GramView<'_, 'a> {
        self.view_scaled(anchor, candidates, 1.0)
    }

    /// View whose log values are multiplied by `factor`, i.e. the same
    /// similarity under width `σ / √factor`.
    pub fn view_scaled(
        &self,
        anchor: usize,
        candidates: Vec<usize>,
        factor: f64,
    ) -> GramView<'_, 'a> {
        let shift = candidates
            .iter()
            .map(|&j| factor * self.log_k(anchor, j))
            .fold(f64::NEG_INFINITY, f64::max);
        GramView {
            table: self,
            anchor,
            candidates,
            factor,
            shift,
        }
    }
}

/// [`GramOracle`] backed by a [`LogKernelTable`]; entries are looked up on demand.
pub struct GramView<'t, 'a> {
    table: &'t LogKernelTable<'a>,
    anchor: usize,
    candidates: Vec<usize>,
    factor: f64,
    shift: f64,
}

impl GramOracle for GramView<'_, '_> {
    fn anchor(&self) -> usize {
        self.anchor
    }
    fn candidates(&self) -> &[usize] {
        &self.candidates
    }
    fn anchor_log(&self, a: usize) -> f64 {
        self.factor * self.table.log_k(self.anchor, self.candidates[a])
    }
    fn log_entry(&self, a: usize, b: usize) -> f64 {
        self.factor * self.table.log_k(self.candidates[a], self.candidates[b])
    }
    fn anchor_self_log(&self) -> f64 {
        self.factor * self.table.log_k(self.anchor, self.anchor)
    }
    fn shift(&self) -> f64 {
        self.shift
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::generate_uniform;
    use proptest::prelude::*;

    fn euc(sigma: f64) -> KernelSpec {
        KernelSpec::new(SimilarityKind::EuclideanSq, sigma).unwrap()
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(euc(1.0).similarity(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), -25.0);
        let dp = KernelSpec::new(SimilarityKind::DotProduct, 1.0).unwrap();
        assert_eq!(dp.similarity(&[1.0, 2.0], &[3.0, -1.0]).unwrap(), 1.0);
        assert_eq!(euc(1.0).similarity(&[1.5, 2.5], &[1.5, 2.5]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            euc(1.0).similarity(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(euc(1.0).kernel(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(euc(1.0).kernel(&[0.3], &[0.3]).unwrap(), 1.0);
        // sim = -4 with σ = 2
        let v = euc(2.0).kernel(&[0.0], &[2.0]).unwrap();
        assert!((v - (-1.0f64).exp()).abs() < 1e-15);
        assert!((v - 0.367879).abs() < 1e-6);
        // σ = 0.1, sim = -25: only the log value is representable
        let lk = euc(0.1).log_kernel(&[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert!((lk + 2500.0).abs() < 1e-9);
        assert!(lk.is_finite());
    }

    #[test]
    fn rejects_bad_sigma() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(-1.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
    }

    #[test]
    fn pluggable_distances() {
        let m = KernelSpec::new(SimilarityKind::manhattan(), 1.0).unwrap();
        assert_eq!(m.similarity(&[0.0, 0.0], &[1.0, 2.0]).unwrap(), -9.0);
        assert_eq!(m.kernel(&[4.0], &[4.0]).unwrap(), 1.0);
        let h = KernelSpec::new(SimilarityKind::hamming(), 1.0).unwrap();
        assert_eq!(h.similarity(&[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]).unwrap(), -4.0);
        assert!(h.similarity.is_normalized());
    }

    #[test]
    fn log_gram_three_points() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = build_log_gram(&euc(1.0), &data, 0, &[1, 2]).unwrap();
        assert_eq!(g.anchor_logs(), &[-1.0, -4.0]);
        assert_eq!(g.shift(), -1.0);
        let col = g.exp_anchor();
        assert_eq!(col[0], 1.0);
        assert!((col[1] - (-3.0f64).exp()).abs() < 1e-15);
        // brute-force recomputation of every entry
        for a in 0..2 {
            for b in 0..2 {
                let direct = euc(1.0)
                    .kernel(data.row(g.candidates()[a]), data.row(g.candidates()[b]))
                    .unwrap();
                let shifted = g.exp_gram()[a * 2 + b] * g.shift().exp();
                assert!((direct - shifted).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn log_gram_duplicate_anchor() {
        let data = Dataset::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let g = build_log_gram(&euc(0.3), &data, 0, &[1]).unwrap();
        assert_eq!(g.exp_anchor(), vec![1.0]);
    }

    #[test]
    fn log_gram_errors() {
        let data = Dataset::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            build_log_gram(&euc(1.0), &data, 0, &[]),
            Err(Error::EmptyCandidates)
        ));
        assert!(build_log_gram(&euc(1.0), &data, 0, &[0, 1]).is_err());
        assert!(build_log_gram(&euc(1.0), &data, 0, &[7]).is_err());
    }

    #[test]
    fn table_matches_direct_evaluation() {
        let data = generate_uniform(12, 3, 4).unwrap();
        let spec = euc(0.4);
        let dense = LogKernelTable::dense(&data, &spec);
        let lazy = LogKernelTable::on_the_fly(&data, &spec);
        for a in 0..12 {
            for b in 0..12 {
                assert_eq!(dense.log_k(a, b), lazy.log_k(a, b));
            }
        }
        let view = dense.view(3, vec![0, 5, 7]);
        let gram = build_log_gram(&spec, &data, 3, &[0, 5, 7]).unwrap();
        assert_eq!(view.shift(), gram.shift());
        for a in 0..3 {
            assert_eq!(view.anchor_log(a), gram.anchor_log(a));
            for b in 0..3 {
                assert_eq!(view.log_entry(a, b), gram.log_entry(a, b));
            }
        }
        // factor 4 is σ halved
        let narrow = build_log_gram(&euc(0.2), &data, 3, &[0, 5, 7]).unwrap();
        let scaled = dense.view_scaled(3, vec![0, 5, 7], 4.0);
        assert!((scaled.shift() - narrow.shift()).abs() < 1e-12);
        for a in 0..3 {
            for b in 0..3 {
                assert!((scaled.log_entry(a, b) - narrow.log_entry(a, b)).abs() < 1e-12);
            }
        }
    }

    /// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.
    fn min_eigenvalue(mut a: Vec<f64>, n: usize) -> f64 {
        for _ in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    off += a[p * n + q] * a[p * n + q];
                }
            }
            if off < 1e-22 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[k * n + q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p * n + k];
                        let aqk = a[q * n + k];
                        a[p * n + k] = c * apk - s * aqk;
                        a[q * n + k] = s * apk + c * aqk;
                    }
                }
            }
        }
        (0..n).map(|i| a[i * n + i]).fold(f64::INFINITY, f64::min)
    }

    proptest! {
        #[test]
        fn symmetric_and_positive(
            x in proptest::collection::vec(-3.0f64..3.0, 4),
            y in proptest::collection::vec(-3.0f64..3.0, 4),
            sigma in 0.3f64..5.0,
        ) {
            for kind in [SimilarityKind::EuclideanSq, SimilarityKind::DotProduct, SimilarityKind::manhattan()] {
                let k = KernelSpec::new(kind, sigma).unwrap();
                prop_assert_eq!(k.kernel(&x, &y).unwrap(), k.kernel(&y, &x).unwrap());
                let lk = k.log_kernel(&x, &y).unwrap();
                prop_assert!(lk.is_finite());
                prop_assert_eq!(k.kernel(&x, &y).unwrap(), lk.exp());
            }
        }

        #[test]
        fn rbf_monotone_in_distance(
            x in proptest::collection::vec(-2.0f64..2.0, 3),
            y in proptest::collection::vec(-2.0f64..2.0, 3),
            z in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let k = euc(1.3);
            let (dy, dz) = (squared_distance(&x, &y), squared_distance(&x, &z));
            let (ly, lz) = (k.log_kernel(&x, &y).unwrap(), k.log_kernel(&x, &z).unwrap());
            if dy < dz {
                prop_assert!(ly > lz);
            } else if dz < dy {
                prop_assert!(lz > ly);
            }
        }

        #[test]
        fn gram_is_numerically_psd(seed in 0u64..1000, n in 2usize..20, sigma in 0.2f64..2.0) {
            let data = generate_uniform(n, 3, seed).unwrap();
            for kind in [SimilarityKind::EuclideanSq, SimilarityKind::DotProduct] {
                let k = KernelSpec::new(kind, sigma).unwrap();
                let mut m = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        m[i * n + j] = k.kernel(data.row(i), data.row(j)).unwrap();
                    }
                }
                prop_assert!(min_eigenvalue(m, n) >= -1e-8);
            }
        }

        #[test]
        fn shifted_gram_symmetric_nonnegative(seed in 0u64..500, shift in -50.0f64..50.0) {
            let data = generate_uniform(6, 2, seed).unwrap();
            let g = build_log_gram(&euc(0.5), &data, 0, &[1, 2, 3, 4, 5]).unwrap().with_shift(shift);
            let m = g.exp_gram();
            for a in 0..5 {
                for b in 0..5 {
                    prop_assert_eq!(m[a * 5 + b], m[b * 5 + a]);
                    prop_assert!(m[a * 5 + b] >= 0.0);
                }
            }
        }
    }
}
