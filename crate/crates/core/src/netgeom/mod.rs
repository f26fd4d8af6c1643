//! Linear networks: a finite union of straight segments that meet only at
//! shared nodes, equipped with the shortest-path metric.
//!
//! A [`LinearNetwork`] is immutable once built. Node-to-node shortest-path
//! rows are computed lazily (one Dijkstra pass per source node) and cached
//! behind [`OnceLock`]s, so a network can be shared freely across threads.

mod geometry;
mod paths;
pub mod synthetic;

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use geometry::{dist, project, Coord};
pub use paths::DistanceMatrix;

/// Default distance under which segment endpoints are merged into one node.
pub const DEFAULT_SNAP_TOL: f64 = 1e-6;

/// A segment as read from an input file, before node deduplication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSegment {
    pub id: u64,
    pub start: Coord,
    pub end: Coord,
}

impl RawSegment {
    pub fn new(id: u64, start: Coord, end: Coord) -> Self {
        Self { id, start, end }
    }
}

/// A validated network segment `[u, v]` between two nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    /// Identifier carried over from the input.
    pub id: u64,
    pub u: Coord,
    pub v: Coord,
    /// Node index of `u`.
    pub from: usize,
    /// Node index of `v`.
    pub to: usize,
    pub length: f64,
}

/// One entry of a node's adjacency list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incidence {
    pub segment: usize,
    pub far_node: usize,
    pub length: f64,
}

/// A location on the network: a segment index and the arc-length offset
/// measured from the segment's `u` end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkPoint {
    pub segment: usize,
    pub offset: f64,
}

impl NetworkPoint {
    pub fn new(segment: usize, offset: f64) -> Self {
        Self { segment, offset }
    }
}

pub struct LinearNetwork {
    segments: Vec<Segment>,
    nodes: Vec<Coord>,
    adjacency: Vec<Vec<Incidence>>,
    total_length: f64,
    component: Vec<usize>,
    n_components: usize,
    by_id: HashMap<u64, usize>,
    node_rows: Vec<OnceLock<Arc<[f64]>>>,
    border: OnceLock<Option<Vec<f64>>>,
}

impl std::fmt::Debug for LinearNetwork {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearNetwork")
            .field("segments", &self.segments.len())
            .field("nodes", &self.nodes.len())
            .field("components", &self.n_components)
            .field("total_length", &self.total_length)
            .finish()
    }
}

impl Clone for LinearNetwork {
    fn clone(&self) -> Self {
        Self {
            segments: self.segments.clone(),
            nodes: self.nodes.clone(),
            adjacency: self.adjacency.clone(),
            total_length: self.total_length,
            component: self.component.clone(),
            n_components: self.n_components,
            by_id: self.by_id.clone(),
            node_rows: (0..self.nodes.len()).map(|_| OnceLock::new()).collect(),
            border: OnceLock::new(),
        }
    }
}

/// Greedy endpoint deduplication on a hash grid of cell size `tol`.
struct NodeSnapper {
    tol: f64,
    cells: HashMap<(i64, i64), Vec<usize>>,
    nodes: Vec<Coord>,
}

impl NodeSnapper {
    fn new(tol: f64) -> Self {
        Self { tol, cells: HashMap::new(), nodes: Vec::new() }
    }

    fn cell(&self, p: Coord) -> (i64, i64) {
        if self.tol > 0.0 {
            ((p[0] / self.tol).floor() as i64, (p[1] / self.tol).floor() as i64)
        } else {
            (p[0].to_bits() as i64, p[1].to_bits() as i64)
        }
    }

    fn insert(&mut self, p: Coord) -> usize {
        let (cx, cy) = self.cell(p);
        if self.tol > 0.0 {
            for dx in -1..=1 {
                for dy in -1..=1 {
                    if let Some(ids) = self.cells.get(&(cx + dx, cy + dy)) {
                        if let Some(&id) = ids.iter().find(|&&id| dist(self.nodes[id], p) <= self.tol) {
                            return id;
                        }
                    }
                }
            }
        } else if let Some(ids) = self.cells.get(&(cx, cy)) {
            if let Some(&id) = ids.first() {
                return id;
            }
        }
        let id = self.nodes.len();
        self.nodes.push(p);
        self.cells.entry((cx, cy)).or_default().push(id);
        id
    }
}

/// Build and validate a linear network from raw segments.
///
/// Endpoints closer than `snap_tol` are merged. Segments that collapse to a
/// point, or that touch each other anywhere other than at a shared node,
/// abort the build. Disconnected inputs are accepted with a warning.
pub fn build_network(raw: &[RawSegment], snap_tol: f64) -> Result<LinearNetwork> {
    if raw.is_empty() {
        return Err(Error::EmptyNetwork);
    }
    if !(snap_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("snap tolerance must be >= 0, got {snap_tol}")));
    }

    let mut snapper = NodeSnapper::new(snap_tol);
    let mut segments = Vec::with_capacity(raw.len());
    let mut by_id = HashMap::with_capacity(raw.len());
    for r in raw {
        if !(r.start.iter().chain(r.end.iter()).all(|c| c.is_finite())) {
            return Err(Error::InvalidArgument(format!("segment {} has non-finite coordinates", r.id)));
        }
        if by_id.insert(r.id, segments.len()).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate segment id {}", r.id)));
        }
        let from = snapper.insert(r.start);
        let to = snapper.insert(r.end);
        if from == to {
            return Err(Error::DegenerateSegment { id: r.id });
        }
        let (u, v) = (snapper.nodes[from], snapper.nodes[to]);
        let length = dist(u, v);
        if !(length > 0.0) {
            return Err(Error::DegenerateSegment { id: r.id });
        }
        segments.push(Segment { id: r.id, u, v, from, to, length });
    }
    let nodes = snapper.nodes;

    check_intersections(&segments, snap_tol)?;

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for (k, s) in segments.iter().enumerate() {
        adjacency[s.from].push(Incidence { segment: k, far_node: s.to, length: s.length });
        adjacency[s.to].push(Incidence { segment: k, far_node: s.from, length: s.length });
    }

    let (component, n_components) = components(&adjacency);
    if n_components > 1 {
        warn!("network has {n_components} connected components; cross-component distances are infinite");
    }

    let total_length = segments.iter().map(|s| s.length).sum();
    let node_rows = (0..nodes.len()).map(|_| OnceLock::new()).collect();
    Ok(LinearNetwork {
        segments,
        nodes,
        adjacency,
        total_length,
        component,
        n_components,
        by_id,
        node_rows,
        border: OnceLock::new(),
    })
}

fn check_intersections(segments: &[Segment], tol: f64) -> Result<()> {
    // sweep over segments sorted by the left edge of their bounding box
    let xmin = |s: &Segment| s.u[0].min(s.v[0]);
    let xmax = |s: &Segment| s.u[0].max(s.v[0]);
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by(|&a, &b| xmin(&segments[a]).total_cmp(&xmin(&segments[b])));

    for (pos, &a) in order.iter().enumerate() {
        let sa = &segments[a];
        let reach = xmax(sa) + tol;
        for &b in &order[pos + 1..] {
            let sb = &segments[b];
            if xmin(sb) > reach {
                break;
            }
            if sa.u[1].max(sa.v[1]) + tol < sb.u[1].min(sb.v[1]) || sb.u[1].max(sb.v[1]) + tol < sa.u[1].min(sa.v[1]) {
                continue;
            }
            if segments_conflict(sa, sb, tol) {
                let (first, second) = if sa.id <= sb.id { (sa.id, sb.id) } else { (sb.id, sa.id) };
                return Err(Error::CrossingSegments { first, second });
            }
        }
    }
    Ok(())
}

fn segments_conflict(a: &Segment, b: &Segment, tol: f64) -> bool {
    let shared = [a.from == b.from, a.from == b.to, a.to == b.from, a.to == b.to].iter().filter(|&&x| x).count();
    match shared {
        0 => geometry::segment_distance(a.u, a.v, b.u, b.v) <= tol,
        1 => {
            // only the shared node may touch; the free ends must stay clear
            let a_free = if a.from == b.from || a.from == b.to { a.v } else { a.u };
            let b_free = if b.from == a.from || b.from == a.to { b.v } else { b.u };
            geometry::point_segment_distance(a_free, b.u, b.v) <= tol
                || geometry::point_segment_distance(b_free, a.u, a.v) <= tol
        }
        _ => true,
    }
}

fn components(adjacency: &[Vec<Incidence>]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; adjacency.len()];
    let mut next = 0;
    let mut stack = Vec::new();
    for start in 0..adjacency.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        comp[start] = next;
        stack.push(start);
        while let Some(n) = stack.pop() {
            for inc in &adjacency[n] {
                if comp[inc.far_node] == usize::MAX {
                    comp[inc.far_node] = next;
                    stack.push(inc.far_node);
                }
            }
        }
        next += 1;
    }
    (comp, next)
}

impl LinearNetwork {
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, index: usize) -> Option<&Segment> {
        self.segments.get(index)
    }

    /// Segment index for an input segment id.
    pub fn segment_index(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn nodes(&self) -> &[Coord] {
        &self.nodes
    }

    pub fn adjacency(&self, node: usize) -> &[Incidence] {
        &self.adjacency[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.adjacency[node].len()
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn component_of_node(&self, node: usize) -> usize {
        self.component[node]
    }

    /// Degree-1 nodes.
    pub fn border_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| self.degree(n) == 1).collect()
    }

    pub fn validate_point(&self, p: &NetworkPoint) -> Result<()> {
        let seg = self
            .segments
            .get(p.segment)
            .ok_or_else(|| Error::InvalidPoint(format!("segment index {} not in network", p.segment)))?;
        if !(p.offset >= 0.0 && p.offset <= seg.length) {
            return Err(Error::InvalidPoint(format!(
                "offset {} outside [0, {}] on segment {}",
                p.offset, seg.length, seg.id
            )));
        }
        Ok(())
    }

    /// The point at network node `node`, expressed on its first incident segment.
    pub fn node_point(&self, node: usize) -> NetworkPoint {
        let inc = self.adjacency[node][0];
        let seg = &self.segments[inc.segment];
        let offset = if seg.from == node { 0.0 } else { seg.length };
        NetworkPoint::new(inc.segment, offset)
    }

    /// Planar coordinates of a network point.
    pub fn coord(&self, p: &NetworkPoint) -> Coord {
        let s = &self.segments[p.segment];
        let t = p.offset / s.length;
        [s.u[0] + t * (s.v[0] - s.u[0]), s.u[1] + t * (s.v[1] - s.u[1])]
    }

    /// Nearest on-network location to a planar coordinate, with the snap distance.
    pub fn snap(&self, p: Coord) -> (NetworkPoint, f64) {
        let mut best = (NetworkPoint::new(0, 0.0), f64::INFINITY);
        for (k, s) in self.segments.iter().enumerate() {
            let (along, d) = project(p, s.u, s.v);
            if d < best.1 {
                best = (NetworkPoint::new(k, along), d);
            }
        }
        best
    }
}
