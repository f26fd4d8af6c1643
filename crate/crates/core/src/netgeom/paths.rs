//! Shortest-path distances between on-network points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{LinearNetwork, NetworkPoint};
use crate::error::{Error, Result};

#[derive(Clone, Copy)]
struct QueueEntry {
    dist: f64,
    node: usize,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueueEntry {}

impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QueueEntry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

/// Dijkstra from a set of zero-distance sources.
fn dijkstra(net: &LinearNetwork, sources: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.nodes.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(QueueEntry { dist: 0.0, node: s });
    }
    while let Some(QueueEntry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for inc in &net.adjacency[node] {
            let nd = d + inc.length;
            if nd < dist[inc.far_node] {
                dist[inc.far_node] = nd;
                heap.push(QueueEntry { dist: nd, node: inc.far_node });
            }
        }
    }
    dist
}

/// Dense symmetric matrix of pairwise network distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = f(i, j);
                data[i * n + j] = d;
                data[j * n + i] = d;
            }
        }
        Self { n, data }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest finite off-diagonal entry (0 if there is none).
    pub fn max_finite(&self) -> f64 {
        self.data.iter().copied().filter(|d| d.is_finite()).fold(0.0, f64::max)
    }

    /// Order-sensitive digest of the raw bit patterns, used to check that
    /// distances never change during a permutation run.
    pub fn checksum(&self) -> u64 {
        self.data.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, d| (h ^ d.to_bits()).wrapping_mul(0x0000_0100_0000_01b3))
    }

    /// `count[i] = #{j != i : d(i, j) <= radius}`.
    pub fn neighbor_counts(&self, radius: f64) -> Vec<usize> {
        (0..self.n).map(|i| self.row(i).iter().enumerate().filter(|&(j, &d)| j != i && d <= radius).count()).collect()
    }
}

impl LinearNetwork {
    /// Shortest-path distances from `node` to every node; cached.
    pub fn node_row(&self, node: usize) -> Arc<[f64]> {
        self.node_rows[node].get_or_init(|| dijkstra(self, &[node]).into()).clone()
    }

    /// Node-to-node distance read from the row of the lower-indexed node so
    /// that the result is bitwise symmetric.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        if a == b {
            return 0.0;
        }
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if self.component[lo] != self.component[hi] {
            return f64::INFINITY;
        }
        self.node_row(lo)[hi]
    }

    /// Shortest-path distance between two network points.
    pub fn point_distance(&self, x: &NetworkPoint, y: &NetworkPoint) -> Result<f64> {
        self.validate_point(x)?;
        self.validate_point(y)?;
        Ok(self.point_distance_unchecked(x, y))
    }

    fn point_distance_unchecked(&self, x: &NetworkPoint, y: &NetworkPoint) -> f64 {
        // canonical argument order keeps d(x, y) and d(y, x) bitwise equal
        let (p, q) = if (x.segment, x.offset.to_bits()) <= (y.segment, y.offset.to_bits()) { (x, y) } else { (y, x) };
        let sp = &self.segments[p.segment];
        let sq = &self.segments[q.segment];
        let mut best = if p.segment == q.segment { (q.offset - p.offset).abs() } else { f64::INFINITY };
        let p_ends = [(sp.from, p.offset), (sp.to, sp.length - p.offset)];
        let q_ends = [(sq.from, q.offset), (sq.to, sq.length - q.offset)];
        for &(a, da) in &p_ends {
            for &(b, db) in &q_ends {
                let d = da + self.node_distance(a, b) + db;
                if d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Pairwise distance matrix; entry `(i, j)` equals `point_distance(pts[i], pts[j])` exactly.
    pub fn distance_matrix(&self, pts: &[NetworkPoint]) -> Result<DistanceMatrix> {
        for p in pts {
            self.validate_point(p)?;
        }
        let mut touched: Vec<usize> = pts
            .iter()
            .flat_map(|p| {
                let s = &self.segments[p.segment];
                [s.from, s.to]
            })
            .collect();
        touched.sort_unstable();
        touched.dedup();
        touched.par_iter().for_each(|&n| {
            self.node_row(n);
        });

        let n = pts.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| self.point_distance_unchecked(&pts[i], &pts[j])).collect())
            .collect();
        Ok(DistanceMatrix::from_fn(n, |i, j| rows[i][j - i - 1]))
    }

    /// Distance from `x` to the nearest degree-1 node.
    pub fn distance_to_border(&self, x: &NetworkPoint) -> Result<f64> {
        self.validate_point(x)?;
        let border = self
            .border
            .get_or_init(|| {
                let leaves = self.border_nodes();
                (!leaves.is_empty()).then(|| dijkstra(self, &leaves))
            })
            .as_ref()
            .ok_or(Error::NoBorder)?;
        let s = &self.segments[x.segment];
        Ok((x.offset + border[s.from]).min(s.length - x.offset + border[s.to]))
    }

    /// Number of other points within `radius` (inclusive) of each point.
    pub fn neighbor_counts(&self, pts: &[NetworkPoint], radius: f64) -> Result<Vec<usize>> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {radius}")));
        }
        Ok(self.distance_matrix(pts)?.neighbor_counts(radius))
    }
}
