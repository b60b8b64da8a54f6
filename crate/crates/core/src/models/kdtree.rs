//! Exact k-nearest-neighbor search over a kd-tree.
//!
//! Results are ordered by `(squared distance, row)`, so equidistant points
//! come back in ascending row order and a query returns exactly what a
//! brute-force sort would. Pruning only skips a subtree when its splitting
//! plane is strictly farther than the current k-th candidate, which keeps
//! tied candidates reachable.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::sq_dist;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        dim: usize,
        value: f32,
        left: usize,
        right: usize,
    },
}

/// Neighbor returned by a search: a row and its squared distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub dist2: f64,
    pub row: usize,
}

impl Hit {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist2
            .total_cmp(&other.dist2)
            .then(self.row.cmp(&other.row))
    }
}

impl Eq for Hit {}

impl PartialOrd for Hit {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Hit {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key_cmp(other)
    }
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dims: usize,
    /// Point coordinates, permuted into tree order.
    points: Vec<f32>,
    /// Row id of each point in tree order.
    rows: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds a tree over `points` (row-major, `dims` columns) tagged with `rows`.
    pub fn build(points: &[f32], dims: usize, rows: &[usize]) -> Self {
        let n = rows.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        if n > 0 {
            build_node(points, dims, rows, &mut order, 0, n, &mut nodes);
        }
        let mut tree_points = Vec::with_capacity(n * dims);
        let mut tree_rows = Vec::with_capacity(n);
        for &i in &order {
            tree_points.extend_from_slice(&points[i * dims..(i + 1) * dims]);
            tree_rows.push(rows[i]);
        }
        Self {
            dims,
            points: tree_points,
            rows: tree_rows,
            nodes,
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The `k` nearest points to `query`, ascending by `(distance, row)`.
    pub fn knn(&self, query: &[f32], k: usize) -> Vec<Hit> {
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, query, k, &mut heap);
        heap.into_sorted_vec()
    }

    fn search(&self, node: usize, query: &[f32], k: usize, heap: &mut BinaryHeap<Hit>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for i in start..end {
                    let p = &self.points[i * self.dims..(i + 1) * self.dims];
                    let hit = Hit {
                        dist2: sq_dist(query, p),
                        row: self.rows[i],
                    };
                    if heap.len() < k {
                        heap.push(hit);
                    } else if hit < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(hit);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = f64::from(query[dim]) - f64::from(value);
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                let plane = diff * diff;
                if heap.len() < k || plane <= heap.peek().unwrap().dist2 {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}

fn build_node(
    points: &[f32],
    dims: usize,
    rows: &[usize],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let id = nodes.len();
    let slice = &mut order[start..end];
    if end - start <= LEAF_SIZE || dims == 0 {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    let coord = |i: usize, d: usize| points[i * dims + d];
    let mut best_dim = 0;
    let mut best_spread = f32::NEG_INFINITY;
    for d in 0..dims {
        let (lo, hi) = slice.iter().fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(coord(i, d)), hi.max(coord(i, d)))
        });
        if hi - lo > best_spread {
            best_spread = hi - lo;
            best_dim = d;
        }
    }
    if best_spread <= 0.0 {
        nodes.push(Node::Leaf { start, end });
        return id;
    }
    slice.sort_unstable_by(|&a, &b| {
        coord(a, best_dim)
            .total_cmp(&coord(b, best_dim))
            .then(rows[a].cmp(&rows[b]))
    });
    let mid = slice.len() / 2;
    let value = coord(slice[mid], best_dim);
    nodes.push(Node::Leaf { start, end });
    let left = build_node(points, dims, rows, order, start, start + mid, nodes);
    let right = build_node(points, dims, rows, order, start + mid, end, nodes);
    nodes[id] = Node::Split {
        dim: best_dim,
        value,
        left,
        right,
    };
    id
}
