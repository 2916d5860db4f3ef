use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{squared_distance, Dataset};
use crate::error::{Error, Result};

/// Optimal slack at or below which a pair is reported as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// Delaunay neighbors of one node.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DelaunayNeighbors {
    /// Pairs whose shared Voronoi facet has nonempty relative interior.
    pub neighbors: Vec<usize>,
    /// Pairs with `|t*| ≤ DEGENERACY_TOLERANCE` (e.g. co-circular points).
    pub degenerate: Vec<usize>,
}

/// Largest slack `t ≤ 1` by which some point of the bisector of `x_i` and
/// `x_j` is strictly closer to both than to every other point.
///
/// Maximizes `t` subject to `2(x_j − x_i)ᵀx = ‖x_j‖² − ‖x_i‖²` and
/// `2(x_k − x_i)ᵀx + t ≤ ‖x_k‖² − ‖x_i‖²` for every other `k`.
pub fn delaunay_slack(data: &Dataset, i: usize, j: usize) -> Result<f64> {
    let n = data.len();
    for v in [i, j] {
        if v >= n {
            return Err(Error::NodeOutOfRange { node: v, n });
        }
    }
    if i == j {
        return Err(Error::invalid("Delaunay slack needs two distinct nodes"));
    }
    let d = data.dim();
    let (xi, xj) = (data.row(i), data.row(j));

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = (0..d)
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    let t = lp.add_var(1.0, (f64::NEG_INFINITY, 1.0));
    let row = |xk: &[f64]| -> Vec<(microlp::Variable, f64)> {
        x.iter()
            .zip(xk.iter().zip(xi))
            .map(|(&v, (a, b))| (v, 2.0 * (a - b)))
            .collect()
    };
    // with y = x − x_i: 2(x_k − x_i)ᵀy ≤ ‖x_k − x_i‖²
    lp.add_constraint(row(xj).as_slice(), ComparisonOp::Eq, squared_distance(xj, xi));
    for k in (0..n).filter(|&k| k != i && k != j) {
        let xk = data.row(k);
        let mut r = row(xk);
        r.push((t, 1.0));
        lp.add_constraint(r.as_slice(), ComparisonOp::Le, squared_distance(xk, xi));
    }
    let solution = lp.solve().map_err(|e| Error::Lp {
        i,
        j,
        message: e.to_string(),
    })?;
    let solution = solution.into_solution().map_err(|_| Error::Lp {
        i,
        j,
        message: "solve interrupted".into(),
    })?;
    Ok(solution.var_value(t))
}

/// Delaunay neighbors of node `i` by one linear program per other node.
pub fn delaunay_neighbors_lp(data: &Dataset, i: usize) -> Result<DelaunayNeighbors> {
    if i >= data.len() {
        return Err(Error::NodeOutOfRange {
            node: i,
            n: data.len(),
        });
    }
    let slacks = (0..data.len())
        .into_par_iter()
        .filter(|&j| j != i)
        .map(|j| delaunay_slack(data, i, j).map(|t| (j, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(classify(slacks))
}

fn classify(slacks: Vec<(usize, f64)>) -> DelaunayNeighbors {
    let mut out = DelaunayNeighbors::default();
    for (j, t) in slacks {
        if t > DEGENERACY_TOLERANCE {
            out.neighbors.push(j);
        } else if t.abs() <= DEGENERACY_TOLERANCE {
            out.degenerate.push(j);
        }
    }
    out
}

/// Neighbors of every node, solving each unordered pair once.
pub fn delaunay_graph(data: &Dataset) -> Result<Vec<DelaunayNeighbors>> {
    let n = data.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let slacks = pairs
        .par_iter()
        .map(|&(i, j)| delaunay_slack(data, i, j))
        .collect::<Result<Vec<_>>>()?;
    let mut per_node: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j), &t) in pairs.iter().zip(&slacks) {
        per_node[i].push((j, t));
        per_node[j].push((i, t));
    }
    Ok(per_node
        .into_iter()
        .map(|mut v| {
            v.sort_by_key(|&(j, _)| j);
            classify(v)
        })
        .collect())
}
