//! Greedy and bounded best-first traversal of a graph index.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::{squared_distance, Dataset};
use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::kernels::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Queue length `L`; 1 is plain greedy search.
    pub queue_length: usize,
    pub entry: usize,
}

impl SearchParams {
    pub fn greedy(entry: usize) -> Self {
        Self {
            queue_length: 1,
            entry,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub terminal: usize,
    /// From the entry point to `terminal`; consecutive ids are graph edges.
    pub path: Vec<usize>,
    /// Number of distinct nodes scored against the query.
    pub kernel_evals: usize,
}

fn check_inputs(g: &DirectedGraph, data: &Dataset, query: &[f64], entry: usize) -> Result<()> {
    if !g.is_frozen() {
        return Err(Error::invalid("search requires a frozen graph"));
    }
    if g.node_count() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: data.len(),
            got: g.node_count(),
        });
    }
    if query.len() != data.dim() {
        return Err(Error::DimensionMismatch {
            expected: data.dim(),
            got: query.len(),
        });
    }
    if entry >= g.node_count() {
        return Err(Error::NodeOutOfRange {
            node: entry,
            n: g.node_count(),
        });
    }
    Ok(())
}

/// Moves to the closest out-neighbor while it is strictly closer than the
/// current node.
pub fn greedy_search_euclidean(
    g: &DirectedGraph,
    data: &Dataset,
    query: &[f64],
    entry: usize,
) -> Result<SearchResult> {
    check_inputs(g, data, query, entry)?;
    Ok(greedy_search_by(g, entry, |j| {
        -squared_distance(data.row(j), query)
    }))
}

/// Greedy ascent of `log K(x_j, query)`.
pub fn greedy_search_kernel(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    query: &[f64],
    entry: usize,
) -> Result<SearchResult> {
    check_inputs(g, data, query, entry)?;
    Ok(greedy_search_by(g, entry, |j| {
        kernel.similarity_unchecked(data.row(j), query)
    }))
}

/// Best-first search keeping the `L` best scored nodes; stops once the best
/// unexpanded candidate is worse than all of them.
pub fn beam_search_kernel(
    g: &DirectedGraph,
    data: &Dataset,
    kernel: &KernelSpec,
    query: &[f64],
    params: SearchParams,
) -> Result<SearchResult> {
    check_inputs(g, data, query, params.entry)?;
    if params.queue_length == 0 {
        return Err(Error::invalid("queue length must be at least 1"));
    }
    Ok(beam_search_by(g, params.entry, params.queue_length, |j| {
        kernel.similarity_unchecked(data.row(j), query)
    }))
}

/// Greedy ascent of an arbitrary score (higher is better, ties to the
/// smallest id). Works on unfrozen graphs.
pub fn greedy_search_by(
    g: &DirectedGraph,
    entry: usize,
    score: impl Fn(usize) -> f64,
) -> SearchResult {
    let mut current = entry;
    let mut best = score(entry);
    let mut path = vec![entry];
    let mut seen: HashSet<usize> = HashSet::from([entry]);
    loop {
        let mut next: Option<(usize, f64)> = None;
        for &j in g.out(current) {
            let s = score(j);
            seen.insert(j);
            if s > next.map_or(best, |(_, v)| v) {
                next = Some((j, s));
            }
        }
        match next {
            Some((j, s)) => {
                current = j;
                best = s;
                path.push(j);
            }
            None => break,
        }
    }
    SearchResult {
        terminal: current,
        path,
        kernel_evals: seen.len(),
    }
}

/// Inserts keeping `list` sorted by score descending then id ascending and
/// at most `cap` long.
fn insert_bounded(list: &mut Vec<(f64, usize)>, item: (f64, usize), cap: usize) {
    let pos = list
        .iter()
        .position(|&(s, id)| item.0 > s || (item.0 == s && item.1 < id))
        .unwrap_or(list.len());
    if pos < cap {
        list.insert(pos, item);
        list.truncate(cap);
    }
}

struct Beam {
    /// Best scored nodes, best first.
    results: Vec<(f64, usize)>,
    /// Node to the node it was reached from.
    parent: HashMap<usize, usize>,
    evals: usize,
}

fn beam(g: &DirectedGraph, entry: usize, cap: usize, score: impl Fn(usize) -> f64) -> Beam {
    let mut parent: HashMap<usize, usize> = HashMap::new();
    parent.insert(entry, entry);
    let start = (score(entry), entry);
    let mut results = vec![start];
    let mut queue = vec![start];
    let mut evals = 1;

    while !queue.is_empty() {
        let (cs, c) = queue.remove(0);
        if results.len() == cap && cs < results[cap - 1].0 {
            break;
        }
        for &v in g.out(c) {
            if parent.contains_key(&v) {
                continue;
            }
            parent.insert(v, c);
            let s = score(v);
            evals += 1;
            if results.len() < cap || s > results[results.len() - 1].0 {
                insert_bounded(&mut results, (s, v), cap);
                insert_bounded(&mut queue, (s, v), cap);
            }
        }
    }
    Beam {
        results,
        parent,
        evals,
    }
}

/// Bounded best-first search over an arbitrary score. Works on unfrozen
/// graphs.
pub fn beam_search_by(
    g: &DirectedGraph,
    entry: usize,
    queue_length: usize,
    score: impl Fn(usize) -> f64,
) -> SearchResult {
    let b = beam(g, entry, queue_length.max(1), score);
    let terminal = b.results[0].1;
    let mut path = vec![terminal];
    let mut v = terminal;
    while v != entry {
        v = b.parent[&v];
        path.push(v);
    }
    path.reverse();
    SearchResult {
        terminal,
        path,
        kernel_evals: b.evals,
    }
}

/// The `queue_length` best `(id, score)` pairs found by [`beam_search_by`],
/// best first.
pub fn beam_search_top(
    g: &DirectedGraph,
    entry: usize,
    queue_length: usize,
    score: impl Fn(usize) -> f64,
) -> Vec<(usize, f64)> {
    beam(g, entry, queue_length.max(1), score)
        .results
        .into_iter()
        .map(|(s, id)| (id, s))
        .collect()
}
