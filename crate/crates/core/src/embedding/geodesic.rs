use rayon::prelude::*;

use super::graph::NeighborGraph;
use crate::matrix::{row_pair_mut, SquareMatrix};

/// All-pairs shortest-path distances over a [`NeighborGraph`].
///
/// Vertices in different components are `f64::INFINITY` apart. Components are
/// numbered in order of their smallest vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicMatrix {
    pub g: SquareMatrix,
    pub component_ids: Vec<usize>,
}

impl GeodesicMatrix {
    pub fn n(&self) -> usize {
        self.g.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.g.get(i, j)
    }

    pub fn component_count(&self) -> usize {
        self.component_ids.iter().max().map_or(0, |&c| c + 1)
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.component_count()];
        for &c in &self.component_ids {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn components(graph: &NeighborGraph) -> Vec<usize> {
    let n = graph.n();
    let mut parent: Vec<usize> = (0..n).collect();
    for e in graph.edges() {
        let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
        if a != b {
            // Root at the smaller index so every root is its component's minimum.
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut ids = vec![0; n];
    let mut next = 0;
    for v in 0..n {
        let root = find(&mut parent, v);
        if label[root] == usize::MAX {
            label[root] = next;
            next += 1;
        }
        ids[v] = label[root];
    }
    ids
}

/// Pivot-block width for the Floyd-Warshall sweep.
const BLOCK: usize = 64;

#[inline]
fn relax(row: &mut [f64], through: f64, pivot: &[f64]) {
    for (r, &p) in row.iter_mut().zip(pivot) {
        let c = through + p;
        if c < *r {
            *r = c;
        }
    }
}

/// Floyd-Warshall in place, processed in blocks of pivots.
///
/// For each block of pivots the pivot rows are closed first (sequentially over
/// `k`), then every other row is relaxed against the finished pivot rows.
/// Relaxing against rows that are already further along than plain
/// Floyd-Warshall would have them only tightens intermediate values, which are
/// always lengths of real paths, so the fixpoint is the same.
pub fn floyd_warshall(dist: &mut SquareMatrix) {
    let n = dist.n();
    for kb in (0..n).step_by(BLOCK) {
        let pivots = kb..(kb + BLOCK).min(n);
        let data = dist.as_mut_slice();
        for k in pivots.clone() {
            for i in pivots.clone() {
                if i == k {
                    continue;
                }
                let (row_i, row_k) = row_pair_mut(data, n, i, k);
                let through = row_i[k];
                if through.is_finite() {
                    relax(row_i, through, row_k);
                }
            }
        }
        let (head, rest) = data.split_at_mut(pivots.start * n);
        let (pivot_rows, tail) = rest.split_at_mut(pivots.len() * n);
        let pivot_rows: &[f64] = pivot_rows;
        let update = |row: &mut [f64]| {
            for (offset, pivot) in pivot_rows.chunks_exact(n).enumerate() {
                let through = row[pivots.start + offset];
                if through.is_finite() {
                    relax(row, through, pivot);
                }
            }
        };
        head.par_chunks_mut(n).for_each(update);
        tail.par_chunks_mut(n).for_each(update);
    }
}

/// Geodesic distances: shortest paths along graph edges.
pub fn geodesic_distances(graph: &NeighborGraph) -> GeodesicMatrix {
    let n = graph.n();
    let mut g = SquareMatrix::filled(n, f64::INFINITY);
    for i in 0..n {
        g.set(i, i, 0.0);
    }
    for e in graph.edges() {
        if e.weight < g.get(e.i, e.j) {
            g.set(e.i, e.j, e.weight);
            g.set(e.j, e.i, e.weight);
        }
    }
    floyd_warshall(&mut g);
    // The two directions can sum the same path in a different order.
    for i in 0..n {
        for j in i + 1..n {
            let v = g.get(i, j).min(g.get(j, i));
            g.set(i, j, v);
            g.set(j, i, v);
        }
    }
    GeodesicMatrix {
        g,
        component_ids: components(graph),
    }
}

/// Restriction to the largest component (ties: the one holding the lowest
/// vertex), with the original indices of the kept vertices.
pub fn largest_component(g: &GeodesicMatrix) -> (GeodesicMatrix, Vec<usize>) {
    let sizes = g.component_sizes();
    let Some(best) = (0..sizes.len()).max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a))) else {
        return (g.clone(), Vec::new());
    };
    let kept: Vec<usize> = (0..g.n()).filter(|&i| g.component_ids[i] == best).collect();
    if kept.len() == g.n() {
        return (g.clone(), kept);
    }
    let restricted = GeodesicMatrix {
        g: g.g.submatrix(&kept),
        component_ids: vec![0; kept.len()],
    };
    (restricted, kept)
}
