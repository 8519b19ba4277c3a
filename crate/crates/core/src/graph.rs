//! Coates-graph view of a symmetric matrix with the node features consumed by
//! the learned preconditioner.
//!
//! Every stored lower-triangle entry `(r, c)` with `c <= r` owns one edge
//! slot. The lower partition visits slot `s` as edge `(r, c)`; the upper
//! partition visits the same slot as edge `(c, r)`. Diagonal slots appear in
//! both partitions, so neither neighborhood is ever empty.

use crate::sparse::SparseSpd;

pub const NODE_FEATURES: usize = 8;

/// Value used for `decay` when a row has no off-diagonal entries or the ratio
/// would exceed it.
pub const DECAY_CAP: f64 = 1e6;

pub type NodeFeatures = [f64; NODE_FEATURES];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub slot: usize,
}

#[derive(Debug, Clone)]
pub struct MatrixGraph {
    pub n: usize,
    /// Per node, in order: degree, max/min/mean/variance of neighbor degrees,
    /// dominance, decay, position.
    pub node_features: Vec<NodeFeatures>,
    /// Lower-triangle entries `(row, col)`, `col <= row`, in row-major order.
    /// The slot of the k-th lower edge is k.
    pub lower_edges: Vec<Edge>,
    /// Upper-triangle entries `(row, col)`, `col >= row`, in row-major order.
    pub upper_edges: Vec<Edge>,
    /// Matrix entry of each slot.
    pub edge_values: Vec<f64>,
    /// Slots of the lower neighborhood of node i: `lower_ptr[i]..lower_ptr[i+1]`
    /// indexes `lower_edges` (row i of the lower triangle).
    pub lower_ptr: Vec<usize>,
    /// `upper_ptr[i]..upper_ptr[i+1]` indexes `upper_edges` (row i of the upper
    /// triangle, i.e. column i of the lower one).
    pub upper_ptr: Vec<usize>,
}

impl MatrixGraph {
    pub fn num_slots(&self) -> usize {
        self.edge_values.len()
    }

    pub fn is_diagonal_slot(&self, slot: usize) -> bool {
        let e = self.lower_edges[slot];
        e.row == e.col
    }

    pub fn lower_neighborhood(&self, i: usize) -> &[Edge] {
        &self.lower_edges[self.lower_ptr[i]..self.lower_ptr[i + 1]]
    }

    pub fn upper_neighborhood(&self, i: usize) -> &[Edge] {
        &self.upper_edges[self.upper_ptr[i]..self.upper_ptr[i + 1]]
    }
}

pub fn build_graph(a: &SparseSpd) -> MatrixGraph {
    let n = a.n();
    let lower = a.lower_triangle();

    let mut lower_edges = Vec::with_capacity(lower.nnz());
    for (slot, (row, col, _)) in lower.iter().enumerate() {
        lower_edges.push(Edge { row, col, slot });
    }
    let edge_values = lower.values().to_vec();
    let lower_ptr = lower.row_ptr().to_vec();

    // Upper edges grouped by their row, which is the lower column.
    let mut upper_ptr = vec![0usize; n + 1];
    for e in &lower_edges {
        upper_ptr[e.col + 1] += 1;
    }
    for i in 0..n {
        upper_ptr[i + 1] += upper_ptr[i];
    }
    let mut next = upper_ptr.clone();
    let mut upper_edges = vec![Edge { row: 0, col: 0, slot: 0 }; lower_edges.len()];
    // lower edges are visited by increasing row, so each upper row fills in
    // increasing column order
    for e in &lower_edges {
        upper_edges[next[e.col]] = Edge {
            row: e.col,
            col: e.row,
            slot: e.slot,
        };
        next[e.col] += 1;
    }

    MatrixGraph {
        n,
        node_features: compute_node_features(a),
        lower_edges,
        upper_edges,
        edge_values,
        lower_ptr,
        upper_ptr,
    }
}

/// Local degree profile plus diagonal dominance, decay and position.
///
/// Degrees count off-diagonal stored entries. Nodes without neighbors get zero
/// neighbor-degree statistics, dominance 1 and decay [`DECAY_CAP`].
pub fn compute_node_features(a: &SparseSpd) -> Vec<NodeFeatures> {
    let n = a.n();
    let csr = a.csr();
    let degree: Vec<usize> = (0..n)
        .map(|i| csr.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();

    (0..n)
        .map(|v| {
            let (cols, vals) = csr.row(v);
            let mut diag = 0.0;
            let mut abs_sum = 0.0;
            let mut max_off: f64 = 0.0;
            let (mut dmax, mut dmin, mut dsum, mut dsq) = (0usize, usize::MAX, 0.0, 0.0);
            for (&j, &x) in cols.iter().zip(vals) {
                abs_sum += x.abs();
                if j == v {
                    diag = x.abs();
                    continue;
                }
                max_off = max_off.max(x.abs());
                let d = degree[j];
                dmax = dmax.max(d);
                dmin = dmin.min(d);
                dsum += d as f64;
                dsq += (d * d) as f64;
            }
            let deg = degree[v];
            let (max_d, min_d, mean_d, var_d) = if deg == 0 {
                (0.0, 0.0, 0.0, 0.0)
            } else {
                let k = deg as f64;
                let mean = dsum / k;
                let var = (dsq / k - mean * mean).max(0.0);
                (dmax as f64, dmin as f64, mean, var)
            };
            let dominance = if deg == 0 || abs_sum == 0.0 {
                1.0
            } else {
                diag / abs_sum
            };
            let decay = if max_off > 0.0 {
                (diag / max_off).min(DECAY_CAP)
            } else {
                DECAY_CAP
            };
            let pos = (v + 1) as f64 / n as f64;
            [deg as f64, max_d, min_d, mean_d, var_d, dominance, decay, pos]
        })
        .collect()
}
