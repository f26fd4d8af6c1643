//! Synthetic street networks for simulation studies and tests.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{build_network, LinearNetwork, RawSegment, DEFAULT_SNAP_TOL};
use crate::error::Result;
use crate::rng::{substream, tag};

/// Rectangular street grid with `cols x rows` blocks of side `spacing`.
pub fn grid(cols: usize, rows: usize, spacing: f64) -> Vec<RawSegment> {
    let mut out = Vec::new();
    let mut push = |a: [f64; 2], b: [f64; 2]| {
        let id = out.len() as u64;
        out.push(RawSegment::new(id, a, b));
    };
    for j in 0..=rows {
        for i in 0..cols {
            let y = j as f64 * spacing;
            push([i as f64 * spacing, y], [(i + 1) as f64 * spacing, y]);
        }
    }
    for i in 0..=cols {
        for j in 0..rows {
            let x = i as f64 * spacing;
            push([x, j as f64 * spacing], [x, (j + 1) as f64 * spacing]);
        }
    }
    out
}

/// A street grid with a dead-end stub of length `stub` leaving every
/// boundary node, so that the stub tips form the network border.
pub fn grid_with_stubs(cols: usize, rows: usize, spacing: f64, stub: f64) -> Vec<RawSegment> {
    let mut out = grid(cols, rows, spacing);
    let w = cols as f64 * spacing;
    let h = rows as f64 * spacing;
    let mut push = |a: [f64; 2], b: [f64; 2]| {
        let id = out.len() as u64;
        out.push(RawSegment::new(id, a, b));
    };
    for j in 0..=rows {
        let y = j as f64 * spacing;
        push([0.0, y], [-stub, y]);
        push([w, y], [w + stub, y]);
    }
    for i in 0..=cols {
        let x = i as f64 * spacing;
        push([x, 0.0], [x, -stub]);
        push([x, h], [x, h + stub]);
    }
    out
}

/// Connected random planar network on a jittered `k x k` lattice with
/// `k = floor(sqrt(max_nodes))`: a random spanning tree of the lattice plus
/// extra lattice edges, cell diagonals and a few dead ends removed at random.
pub fn random_planar(max_nodes: usize, spacing: f64, seed: u64) -> Result<LinearNetwork> {
    let k = ((max_nodes as f64).sqrt().floor() as usize).max(2);
    let mut rng = substream(seed, tag::NETWORK, 0);
    let jitter = 0.15 * spacing;
    let coords: Vec<[f64; 2]> = (0..k * k)
        .map(|n| {
            let (i, j) = (n % k, n / k);
            [
                i as f64 * spacing + rng.random_range(-jitter..=jitter),
                j as f64 * spacing + rng.random_range(-jitter..=jitter),
            ]
        })
        .collect();
    let idx = |i: usize, j: usize| j * k + i;

    let mut lattice: Vec<(usize, usize)> = Vec::new();
    for j in 0..k {
        for i in 0..k {
            if i + 1 < k {
                lattice.push((idx(i, j), idx(i + 1, j)));
            }
            if j + 1 < k {
                lattice.push((idx(i, j), idx(i, j + 1)));
            }
        }
    }
    lattice.shuffle(&mut rng);

    // Kruskal on shuffled edges gives a uniform-ish random spanning tree
    let mut parent: Vec<usize> = (0..k * k).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut edges = Vec::new();
    for &(a, b) in &lattice {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            edges.push((a, b));
        } else if rng.random_bool(0.3) {
            edges.push((a, b));
        }
    }
    for j in 0..k - 1 {
        for i in 0..k - 1 {
            if rng.random_bool(0.25) {
                if rng.random_bool(0.5) {
                    edges.push((idx(i, j), idx(i + 1, j + 1)));
                } else {
                    edges.push((idx(i + 1, j), idx(i, j + 1)));
                }
            }
        }
    }

    let raw: Vec<RawSegment> =
        edges.iter().enumerate().map(|(id, &(a, b))| RawSegment::new(id as u64, coords[a], coords[b])).collect();
    build_network(&raw, DEFAULT_SNAP_TOL)
}
