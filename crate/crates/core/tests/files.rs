use std::fs;
use std::sync::Arc;

use netmark::dataio::{self, NetworkFormat, OutputFormat};
use netmark::estim::{estimate_summary, RGrid};
use netmark::netgeom::{build_network, synthetic::grid, DEFAULT_SNAP_TOL};
use netmark::sim::{simulate, Scenario, SimConfig};
use netmark::testfun::TestFunctionId;
use netmark::Error;

#[test]
fn network_csv_and_geojson_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("net.csv");
    fs::write(&csv, "seg_id,x1,y1,x2,y2\n0,0,0,10,0\n1,10,0,10,10\n").unwrap();
    let gj = dir.path().join("net.geojson");
    fs::write(
        &gj,
        r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":null,
            "geometry":{"type":"LineString","coordinates":[[0,0],[10,0],[10,10]]}}]}"#,
    )
    .unwrap();
    let a = dataio::load_network(&csv, NetworkFormat::from_path(&csv), DEFAULT_SNAP_TOL).unwrap();
    let b = dataio::load_network(&gj, NetworkFormat::from_path(&gj), DEFAULT_SNAP_TOL).unwrap();
    assert_eq!(a.nodes().len(), 3);
    assert_eq!(dataio::render_network_csv(&a).unwrap(), dataio::render_network_csv(&b).unwrap());
}

#[test]
fn crossing_network_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    fs::write(&csv, "seg_id,x1,y1,x2,y2\n7,0,0,10,10\n8,0,10,10,0\n").unwrap();
    let err = dataio::load_network(&csv, NetworkFormat::Csv, DEFAULT_SNAP_TOL).unwrap_err();
    assert!(matches!(err, Error::CrossingSegments { first: 7, second: 8 }));
}

#[test]
fn simulated_pattern_round_trips_through_files() {
    let net = Arc::new(build_network(&grid(4, 4, 100.0), DEFAULT_SNAP_TOL).unwrap());
    let p = simulate(net.clone(), &SimConfig::new(0.05, Scenario::One, 4)).unwrap();
    let ids: Vec<String> = (0..p.len()).map(|k| format!("pt{k}")).collect();
    let dir = tempfile::tempdir().unwrap();
    let (pp, mp) = (dir.path().join("p.csv"), dir.path().join("m.csv"));
    fs::write(&pp, dataio::render_pattern_csv(&ids, p.points(), &net).unwrap()).unwrap();
    fs::write(&mp, dataio::render_marks_csv(&ids, p.grid(), p.marks()).unwrap()).unwrap();
    let back = dataio::assemble_pattern(
        net,
        &dataio::read_pattern(&pp, p.network()).unwrap(),
        &dataio::read_marks(&mp).unwrap(),
    )
    .unwrap();
    assert_eq!(back.points(), p.points());
    assert_eq!(back.marks(), p.marks());
    assert_eq!(back.grid(), p.grid());
}

#[test]
fn exports_are_byte_stable() {
    let net = Arc::new(build_network(&grid(4, 4, 100.0), DEFAULT_SNAP_TOL).unwrap());
    let p = simulate(net, &SimConfig::new(0.05, Scenario::One, 8)).unwrap();
    let rgrid = RGrid::uniform(150.0, 7, 30.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for format in [OutputFormat::Csv, OutputFormat::Json] {
        let a = dir.path().join(format!("a.{}", format.extension()));
        let b = dir.path().join(format!("b.{}", format.extension()));
        let s1 = estimate_summary(&p, TestFunctionId::ShimataniI, &rgrid).unwrap();
        let s2 = estimate_summary(&p, TestFunctionId::ShimataniI, &rgrid).unwrap();
        dataio::export_curve(&s1.curve, &a, format).unwrap();
        dataio::export_curve(&s2.curve, &b, format).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        dataio::export_surface(&s1.surface, &a, format).unwrap();
        dataio::export_surface(&s2.surface, &b, format).unwrap();
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    }
}
