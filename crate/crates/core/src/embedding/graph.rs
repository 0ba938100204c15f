use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masked::Dissimilarity;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub weight: f64,
}

/// Undirected weighted graph, edges stored once with `i < j` in
/// lexicographic order. Coincident points are joined by weight-0 edges.
#[derive(Clone, Debug, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl NeighborGraph {
    /// Builds a graph from arbitrary `(i, j, weight)` triples. Duplicate pairs
    /// keep the smallest weight.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut unique = BTreeMap::new();
        for (a, b, weight) in edges {
            if a >= n || b >= n {
                return Err(Error::param(format!("edge ({a},{b}) outside a graph of {n} vertices")));
            }
            if a == b {
                return Err(Error::param(format!("self-loop at vertex {a}")));
            }
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(Error::param(format!("edge ({a},{b}) has weight {weight}")));
            }
            let key = (a.min(b), a.max(b));
            unique
                .entry(key)
                .and_modify(|w: &mut f64| *w = w.min(weight))
                .or_insert(weight);
        }
        let edges = unique
            .into_iter()
            .map(|((i, j), weight)| Edge { i, j, weight })
            .collect();
        Ok(Self { n, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.edges
            .binary_search_by(|e| (e.i, e.j).cmp(&key))
            .ok()
            .map(|idx| self.edges[idx].weight)
    }
}

/// Neighborhood rule for graph construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Knn(usize),
    Epsilon(f64),
}

impl Neighborhood {
    pub fn build(&self, d: &Dissimilarity) -> Result<NeighborGraph> {
        match *self {
            Neighborhood::Knn(k) => knn_graph(d, k),
            Neighborhood::Epsilon(eps) => epsilon_graph(d, eps),
        }
    }
}

impl Default for Neighborhood {
    fn default() -> Self {
        Neighborhood::Knn(10)
    }
}

/// Indices of the `k` nearest rows to `i` by `d`, ties broken by lower index.
pub(crate) fn nearest(row: &[f64], skip: usize, k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).filter(|&j| j != skip).collect();
    let by_distance = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
    if k < order.len() {
        order.select_nth_unstable_by(k, by_distance);
        order.truncate(k);
    }
    order.sort_unstable_by(by_distance);
    order
}

/// Symmetrized k-nearest-neighbor graph: `(i, j)` is an edge when either
/// endpoint is among the other's `k` nearest.
pub fn knn_graph(d: &Dissimilarity, k: usize) -> Result<NeighborGraph> {
    let n = d.n();
    if k < 1 || k >= n {
        return Err(Error::param(format!("k must satisfy 1 <= k < n = {n}, got {k}")));
    }
    let lists: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| nearest(d.matrix().row(i), i, k))
        .collect();
    let edges = lists
        .iter()
        .enumerate()
        .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i, j, d.get(i, j))));
    NeighborGraph::from_edges(n, edges)
}

/// Edge between every pair with `d[i][j] <= eps`.
pub fn epsilon_graph(d: &Dissimilarity, eps: f64) -> Result<NeighborGraph> {
    if !(eps > 0.0) {
        return Err(Error::param(format!("epsilon must be positive, got {eps}")));
    }
    let n = d.n();
    let edges = (0..n).flat_map(|i| {
        (i + 1..n)
            .filter(move |&j| d.get(i, j) <= eps)
            .map(move |j| (i, j, d.get(i, j)))
    });
    NeighborGraph::from_edges(n, edges)
}
