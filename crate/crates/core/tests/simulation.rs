mod common;

use std::sync::Arc;

use netmark::netgeom::build_network;
use netmark::netgeom::synthetic::{grid, grid_with_stubs};
use netmark::sim::{simulate, simulate_poisson_network, Scenario, SimConfig};

#[test]
fn counts_and_segment_proportions() {
    let net = build_network(&grid_with_stubs(4, 4, 100.0, 35.0), 1e-6).unwrap();
    let lambda = 60.0 / net.total_length();
    let reps = 60;
    let mut per_segment = vec![0usize; net.segments().len()];
    let mut total = 0usize;
    for seed in 0..reps {
        for p in simulate_poisson_network(&net, lambda, seed).unwrap() {
            per_segment[p.segment] += 1;
            total += 1;
        }
    }
    let expected = 60.0 * reps as f64;
    assert!((total as f64 - expected).abs() < 4.0 * expected.sqrt(), "{total}");
    let chi2: f64 = net
        .segments()
        .iter()
        .zip(&per_segment)
        .map(|(s, &o)| {
            let e = total as f64 * s.length / net.total_length();
            (o as f64 - e).powi(2) / e
        })
        .sum();
    assert!(common::chi_square_sf(chi2, per_segment.len() - 1) > 1e-4, "chi2 {chi2}");
}

#[test]
fn scenarios_share_locations() {
    let net = Arc::new(build_network(&grid_with_stubs(5, 5, 100.0, 50.0), 1e-6).unwrap());
    let cfg = |s| SimConfig::new(0.02, s, 42);
    let one = simulate(net.clone(), &cfg(Scenario::One)).unwrap();
    let two = simulate(net.clone(), &cfg(Scenario::Two)).unwrap();
    let three = simulate(net, &cfg(Scenario::Three)).unwrap();
    assert_eq!(one.points(), two.points());
    assert_eq!(one.points(), three.points());
    assert_eq!(one.grid().len(), 30);
}

#[test]
fn scenario_three_tracks_neighbour_counts() {
    let net = Arc::new(build_network(&grid(6, 6, 100.0), 1e-6).unwrap());
    let mut cfg = SimConfig::new(0.03, Scenario::Three, 9);
    cfg.neighbor_radius = 150.0;
    let p = simulate(net.clone(), &cfg).unwrap();
    let counts = net.neighbor_counts(p.points(), 150.0).unwrap();
    for (m, &a) in p.marks().iter().zip(&counts) {
        let a = a as f64;
        assert!(m.0.iter().all(|&v| v >= a / 2.0 && v <= 1.5 * a));
    }
}
