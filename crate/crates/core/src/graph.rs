//! Directed graph over dataset rows with optional edge weights.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Out-adjacency lists, kept sorted and free of duplicates and self-loops.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectedGraph {
    adjacency: Vec<Vec<usize>>,
    weights: Option<Vec<Vec<f64>>>,
    frozen: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
}

type ParsedEdge = (usize, Option<f64>);

impl DirectedGraph {
    /// Edgeless graph without weights.
    pub fn new(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            weights: None,
            frozen: false,
        }
    }

    /// Edgeless graph whose edges carry positive weights.
    pub fn new_weighted(n: usize) -> Self {
        Self {
            adjacency: vec![Vec::new(); n],
            weights: Some(vec![Vec::new(); n]),
            frozen: false,
        }
    }

    /// Every ordered pair `i ≠ j`.
    pub fn complete(n: usize) -> Self {
        Self {
            adjacency: (0..n)
                .map(|i| (0..n).filter(|&j| j != i).collect())
                .collect(),
            weights: None,
            frozen: false,
        }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    pub fn is_weighted(&self) -> bool {
        self.weights.is_some()
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    /// Forbids further mutation.
    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.node_count() {
            return Err(Error::NodeOutOfRange {
                node: i,
                n: self.node_count(),
            });
        }
        Ok(())
    }

    fn check_mutable(&self) -> Result<()> {
        if self.frozen {
            Err(Error::GraphFrozen)
        } else {
            Ok(())
        }
    }

    fn check_edge(&self, i: usize, j: usize) -> Result<()> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Err(Error::invalid(format!("self-loop on node {i}")));
        }
        Ok(())
    }

    /// Adds `i → j` to an unweighted graph; re-adding is a no-op.
    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_mutable()?;
        self.check_edge(i, j)?;
        if self.weights.is_some() {
            return Err(Error::invalid("weighted graph needs add_weighted_edge"));
        }
        let list = &mut self.adjacency[i];
        if let Err(p) = list.binary_search(&j) {
            list.insert(p, j);
        }
        Ok(())
    }

    /// Adds `i → j` with weight `w > 0`, replacing any previous weight.
    pub fn add_weighted_edge(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        self.check_mutable()?;
        self.check_edge(i, j)?;
        if !(w > 0.0 && w.is_finite()) {
            return Err(Error::invalid(format!("edge weight must be positive, got {w}")));
        }
        let Some(weights) = self.weights.as_mut() else {
            return Err(Error::invalid("unweighted graph needs add_edge"));
        };
        let list = &mut self.adjacency[i];
        match list.binary_search(&j) {
            Ok(p) => weights[i][p] = w,
            Err(p) => {
                list.insert(p, j);
                weights[i].insert(p, w);
            }
        }
        Ok(())
    }

    /// Replaces all out-edges of `i`.
    pub fn set_neighbors(&mut self, i: usize, ids: &[usize]) -> Result<()> {
        self.check_mutable()?;
        self.check_node(i)?;
        if self.weights.is_some() {
            return Err(Error::invalid("weighted graph needs set_weighted_neighbors"));
        }
        for &j in ids {
            self.check_edge(i, j)?;
        }
        let mut list = ids.to_vec();
        list.sort_unstable();
        list.dedup();
        self.adjacency[i] = list;
        Ok(())
    }

    /// Replaces all out-edges of `i` with weighted ones.
    pub fn set_weighted_neighbors(&mut self, i: usize, edges: &[(usize, f64)]) -> Result<()> {
        self.check_mutable()?;
        self.check_node(i)?;
        if self.weights.is_none() {
            return Err(Error::invalid("unweighted graph needs set_neighbors"));
        }
        let mut list = edges.to_vec();
        for &(j, w) in &list {
            self.check_edge(i, j)?;
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("edge weight must be positive, got {w}")));
            }
        }
        list.sort_by_key(|&(j, _)| j);
        list.dedup_by_key(|&mut (j, _)| j);
        self.adjacency[i] = list.iter().map(|&(j, _)| j).collect();
        if let Some(weights) = self.weights.as_mut() {
            weights[i] = list.iter().map(|&(_, w)| w).collect();
        }
        Ok(())
    }

    /// `N_i`, ascending.
    pub fn neighbors(&self, i: usize) -> Result<&[usize]> {
        self.check_node(i)?;
        Ok(&self.adjacency[i])
    }

    /// Like [`Self::neighbors`] but panics when `i` is out of range.
    pub fn out(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Weights parallel to `neighbors(i)`, if the graph is weighted.
    pub fn weights(&self, i: usize) -> Result<Option<&[f64]>> {
        self.check_node(i)?;
        Ok(self.weights.as_ref().map(|w| w[i].as_slice()))
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.node_count() && self.adjacency[i].binary_search(&j).is_ok()
    }

    /// All edges `(i, j)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, list)| list.iter().map(move |&j| (i, j)))
            .collect()
    }

    pub fn degree_stats(&self) -> DegreeStats {
        let n = self.node_count();
        if n == 0 {
            return DegreeStats {
                min: 0,
                max: 0,
                mean: 0.0,
            };
        }
        let degrees = self.adjacency.iter().map(Vec::len);
        DegreeStats {
            min: degrees.clone().min().unwrap_or(0),
            max: degrees.max().unwrap_or(0),
            mean: self.edge_count() as f64 / n as f64,
        }
    }

    /// Relabels node `v` as `perm[v]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: perm.len(),
            });
        }
        for &p in perm {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(Error::invalid("not a permutation"));
            }
        }
        let mut out = if self.is_weighted() {
            Self::new_weighted(n)
        } else {
            Self::new(n)
        };
        for i in 0..n {
            match &self.weights {
                Some(w) => {
                    let edges: Vec<(usize, f64)> = self.adjacency[i]
                        .iter()
                        .zip(&w[i])
                        .map(|(&j, &x)| (perm[j], x))
                        .collect();
                    out.set_weighted_neighbors(perm[i], &edges)?;
                }
                None => {
                    let ids: Vec<usize> = self.adjacency[i].iter().map(|&j| perm[j]).collect();
                    out.set_neighbors(perm[i], &ids)?;
                }
            }
        }
        Ok(out)
    }

    /// Text form: a line with `n`, then `id: j1,w1 j2,w2 …` per node
    /// (`id: j1 j2 …` when unweighted).
    pub fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.node_count());
        for (i, list) in self.adjacency.iter().enumerate() {
            let _ = write!(out, "{i}:");
            for (p, j) in list.iter().enumerate() {
                match &self.weights {
                    Some(w) => {
                        let _ = write!(out, " {j},{:?}", w[i][p]);
                    }
                    None => {
                        let _ = write!(out, " {j}");
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let Some((hl, header)) = lines.next() else {
            return Err(parse_err(1, "missing node-count header".into()));
        };
        let n: usize = header
            .parse()
            .map_err(|_| parse_err(hl, format!("bad node count {header:?}")))?;

        let mut rows: Vec<Option<Vec<ParsedEdge>>> = vec![None; n];
        let mut weighted: Option<bool> = None;
        for (ln, line) in lines {
            let (id, rest) = line
                .split_once(':')
                .ok_or_else(|| parse_err(ln, "expected `id: neighbors`".into()))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| parse_err(ln, format!("bad node id {id:?}")))?;
            if id >= n {
                return Err(parse_err(ln, format!("node {id} out of range for {n} nodes")));
            }
            if rows[id].is_some() {
                return Err(parse_err(ln, format!("node {id} listed twice")));
            }
            let mut edges = Vec::new();
            for tok in rest.split_whitespace() {
                let (j, w) = match tok.split_once(',') {
                    Some((j, w)) => {
                        let w: f64 = w
                            .parse()
                            .map_err(|_| parse_err(ln, format!("bad weight {w:?}")))?;
                        (j, Some(w))
                    }
                    None => (tok, None),
                };
                let j: usize = j
                    .parse()
                    .map_err(|_| parse_err(ln, format!("bad neighbor id {j:?}")))?;
                if j >= n {
                    return Err(parse_err(ln, format!("neighbor {j} out of range for {n} nodes")));
                }
                match weighted {
                    None => weighted = Some(w.is_some()),
                    Some(k) if k != w.is_some() => {
                        return Err(parse_err(ln, "mixed weighted and unweighted edges".into()))
                    }
                    _ => {}
                }
                edges.push((j, w));
            }
            rows[id] = Some(edges);
        }

        let mut g = if weighted == Some(true) {
            Self::new_weighted(n)
        } else {
            Self::new(n)
        };
        for (i, row) in rows.into_iter().enumerate() {
            let edges = row.unwrap_or_default();
            let res = if g.is_weighted() {
                let e: Vec<(usize, f64)> =
                    edges.iter().map(|&(j, w)| (j, w.unwrap_or(f64::NAN))).collect();
                g.set_weighted_neighbors(i, &e)
            } else {
                let e: Vec<usize> = edges.iter().map(|&(j, _)| j).collect();
                g.set_neighbors(i, &e)
            };
            res.map_err(|e| Error::Format {
                path: path.to_path_buf(),
                message: format!("node {i}: {e}"),
            })?;
        }
        Ok(g)
    }
}

pub fn save_graph(g: &DirectedGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, g.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<DirectedGraph> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    DirectedGraph::from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn neighbor_lists_are_sorted_and_unique() {
        let mut g = DirectedGraph::new(5);
        assert!(g.neighbors(2).unwrap().is_empty());
        g.add_edge(2, 3).unwrap();
        g.add_edge(2, 1).unwrap();
        g.add_edge(2, 3).unwrap();
        assert_eq!(g.neighbors(2).unwrap(), &[1, 3]);
        assert!(matches!(g.neighbors(5), Err(Error::NodeOutOfRange { node: 5, n: 5 })));
        assert!(g.add_edge(1, 1).is_err());
        assert!(g.add_edge(1, 7).is_err());
    }

    #[test]
    fn frozen_graph_rejects_mutation() {
        let mut g = DirectedGraph::new(3);
        g.freeze();
        assert!(matches!(g.add_edge(0, 1), Err(Error::GraphFrozen)));
        assert!(matches!(g.set_neighbors(0, &[1]), Err(Error::GraphFrozen)));
    }

    #[test]
    fn weights_must_be_positive() {
        let mut g = DirectedGraph::new_weighted(3);
        assert!(g.add_weighted_edge(0, 1, 0.0).is_err());
        assert!(g.add_weighted_edge(0, 1, f64::NAN).is_err());
        g.add_weighted_edge(0, 2, 0.5).unwrap();
        g.add_weighted_edge(0, 1, 0.25).unwrap();
        assert_eq!(g.weights(0).unwrap(), Some(&[0.25, 0.5][..]));
    }

    #[test]
    fn degree_statistics() {
        let g = DirectedGraph::complete(4);
        assert_eq!(g.degree_stats().mean, 3.0);
        let mut star = DirectedGraph::new(4);
        star.set_neighbors(0, &[3, 1, 2]).unwrap();
        let s = star.degree_stats();
        assert_eq!((s.min, s.max, s.mean), (0, 3, 0.75));
    }

    fn random_graph(n: usize, weighted: bool, seed: u64) -> DirectedGraph {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = if weighted {
            DirectedGraph::new_weighted(n)
        } else {
            DirectedGraph::new(n)
        };
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random::<f64>() < 0.2 {
                    if weighted {
                        g.add_weighted_edge(i, j, rng.random::<f64>() + 1e-300).unwrap();
                    } else {
                        g.add_edge(i, j).unwrap();
                    }
                }
            }
        }
        g
    }

    #[test]
    fn text_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for weighted in [true, false] {
            let g = random_graph(30, weighted, 4);
            let path = dir.path().join("g.txt");
            save_graph(&g, &path).unwrap();
            let back = load_graph(&path).unwrap();
            assert_eq!(back, g);
            assert_eq!(back.is_weighted(), weighted);
        }
    }

    #[test]
    fn rejects_out_of_range_ids() {
        let p = Path::new("g.txt");
        let err = DirectedGraph::from_text("5\n0: 9\n", p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = DirectedGraph::from_text("5\n9: 1\n", p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(DirectedGraph::from_text("5\n0 1 2\n", p).is_err());
        assert!(DirectedGraph::from_text("3\n0: 1,0.5 2\n", p).is_err());
        assert!(DirectedGraph::from_text("", p).is_err());
    }

    #[test]
    fn permutation_relabels_edges() {
        let g = random_graph(10, true, 1);
        let perm: Vec<usize> = (0..10).rev().collect();
        let p = g.permuted(&perm).unwrap();
        assert_eq!(p.edge_count(), g.edge_count());
        for (i, j) in g.edges() {
            assert!(p.has_edge(perm[i], perm[j]));
        }
        assert!(g.permuted(&[0; 10]).is_err());
    }
}
