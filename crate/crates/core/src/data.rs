//! Datasets, loaders, synthetic generation and brute-force ground truth.
//!
//! Vectors are stored row-major as `f64` regardless of the on-disk precision.
//! Node ids are the dense row indices `0..n`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;

/// Immutable matrix of `n` row vectors of dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major values. Requires `n >= 2`, `d >= 1` and
    /// finite entries.
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if n < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 vectors, got {n}"
            )));
        }
        if values.len() != n * d {
            return Err(Error::InvalidDataset(format!(
                "expected {} values for {n}x{d}, got {}",
                n * d,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite entry in row {} column {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self { n, d, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), d, rows.concat())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First `k` rows.
    pub fn head(&self, k: usize) -> Result<Self> {
        let k = k.min(self.n);
        Self::new(k, self.d, self.values[..k * self.d].to_vec())
    }

    /// `k` rows drawn without replacement, kept in their original order.
    pub fn sample(&self, k: usize, seed: u64) -> Result<Self> {
        let k = k.min(self.n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picked = sample_indices(&mut rng, self.n, k).into_vec();
        picked.sort_unstable();
        self.select(&picked)
    }

    /// Rows at the given ids, in the given order.
    pub fn select(&self, ids: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(ids.len() * self.d);
        for &i in ids {
            if i >= self.n {
                return Err(Error::NodeOutOfRange { node: i, n: self.n });
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(ids.len(), self.d, values)
    }

    /// Median of the pairwise Euclidean distances (all `n(n-1)/2` pairs).
    pub fn median_pairwise_distance(&self) -> f64 {
        let mut dists = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                dists.push(squared_distance(self.row(i), self.row(j)).sqrt());
            }
        }
        dists.sort_by(f64::total_cmp);
        let m = dists.len();
        if m % 2 == 1 {
            dists[m / 2]
        } else {
            0.5 * (dists[m / 2 - 1] + dists[m / 2])
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// I.i.d. uniform entries on `[0, 1)`, deterministic for a fixed seed.
pub fn generate_uniform(n: usize, d: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || d == 0 {
        return Err(Error::invalid(format!(
            "synthetic data needs n >= 2 and d >= 1, got n={n}, d={d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n * d).map(|_| rng.random::<f64>()).collect();
    Dataset::new(n, d, values)
}

/// Reads the `.fvecs` format: per record a little-endian `i32` dimension then
/// that many little-endian `f32` values.
pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    parse_fvecs(&bytes).map_err(|message| Error::Format {
        path: path.to_path_buf(),
        message,
    })
}

fn parse_fvecs(bytes: &[u8]) -> std::result::Result<Dataset, String> {
    if bytes.is_empty() {
        return Err("empty file".into());
    }
    let mut dim: Option<usize> = None;
    let mut values = Vec::new();
    let mut offset = 0;
    let mut record = 0;
    while offset < bytes.len() {
        let header = bytes
            .get(offset..offset + 4)
            .ok_or_else(|| format!("truncated header in record {record}"))?;
        let d = i32::from_le_bytes(header.try_into().unwrap());
        if d <= 0 {
            return Err(format!("record {record} has non-positive dimension {d}"));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(format!(
                    "inconsistent dimension in record {record}: expected {expected}, got {d}"
                ))
            }
            _ => {}
        }
        offset += 4;
        let body = bytes.get(offset..offset + 4 * d).ok_or_else(|| {
            format!(
                "truncated record {record}: expected {d} floats, found {} bytes",
                bytes.len() - offset
            )
        })?;
        values.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64),
        );
        offset += 4 * d;
        record += 1;
    }
    let d = dim.unwrap_or(0);
    Dataset::new(record, d, values).map_err(|e| e.to_string())
}

/// Writes the `.fvecs` format. Values are narrowed to `f32`.
pub fn save_fvecs(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for row in data.rows() {
            w.write_all(&(data.dim() as i32).to_le_bytes())?;
            for &v in row {
                w.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// One comma-separated row per vector.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut values = Vec::new();
    let mut d = None;
    let mut n = 0;
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut count = 0;
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(idx + 1, format!("non-numeric field {field:?}")))?;
            values.push(v);
            count += 1;
        }
        match d {
            None => d = Some(count),
            Some(expected) if expected != count => {
                return Err(parse_err(
                    idx + 1,
                    format!("ragged row: expected {expected} fields, got {count}"),
                ))
            }
            _ => {}
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "empty file".into(),
        });
    }
    Dataset::new(n, d.unwrap_or(0), values)
}

/// Values are written with the shortest representation that round-trips
/// exactly, so a reload is bitwise equal.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
        for row in data.rows() {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| Error::io(path, e))
}

/// Loads `.fvecs` or `.csv` by file extension.
pub fn load_any(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("fvecs") => load_fvecs(path),
        Some("csv") | Some("txt") => load_csv(path),
        other => Err(Error::Format {
            path: path.to_path_buf(),
            message: format!("unsupported extension {other:?} (expected fvecs or csv)"),
        }),
    }
}

/// Exact top-1 answer for one query under a kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopOne {
    /// Canonical maximizer: the smallest id among `ties`.
    pub best: usize,
    /// Every id attaining the maximal kernel value, ascending.
    pub ties: Vec<usize>,
}

impl TopOne {
    pub fn contains(&self, id: usize) -> bool {
        self.ties.binary_search(&id).is_ok()
    }
}

/// Ground truth for querying every indexed vector against the dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entries: Vec<TopOne>,
}

/// Linear scan for `argmax_j K(x_j, query)` in the log-kernel domain.
pub fn brute_force_top1(kernel: &KernelSpec, data: &Dataset, query: &[f64]) -> Result<TopOne> {
    if query.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: query.len(),
        });
    }
    let mut best_val = f64::NEG_INFINITY;
    let mut ties = Vec::new();
    for (j, row) in data.rows().enumerate() {
        let v = kernel.similarity_unchecked(row, query);
        if v > best_val {
            best_val = v;
            ties.clear();
            ties.push(j);
        } else if v == best_val {
            ties.push(j);
        }
    }
    Ok(TopOne { best: ties[0], ties })
}

/// Top-1 for every indexed vector used as a query.
pub fn ground_truth(kernel: &KernelSpec, data: &Dataset) -> GroundTruth {
    use rayon::prelude::*;
    let entries = (0..data.len())
        .into_par_iter()
        .map(|k| brute_force_top1(kernel, data, data.row(k)).expect("row has dataset dimension"))
        .collect();
    GroundTruth { entries }
}
