//! Grid index vs linear scan on random instances, plus the streamed
//! file-to-file mapping path.

use cdrkit_core::geo::{Projection, Rect};
use cdrkit_core::io::{read_cells, write_trajectory};
use cdrkit_core::types::TrajectoryPoint;
use cdrkit_topology::{generate_stations, map_file, CellTopology};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

#[test]
fn grid_index_matches_linear_scan() {
    let proj = Projection::new(60.1699, 24.9384);
    let bbox = Rect::new(0.0, 0.0, 10_000.0, 8_000.0);
    let mut rng = ChaCha12Rng::seed_from_u64(1234);
    let stations = generate_stations(100, &bbox, &proj, &mut rng);
    let topo = CellTopology::build(&stations, proj, bbox).unwrap();

    for _ in 0..10_000 {
        let x = rng.gen_range(0.0..10_000.0);
        let y = rng.gen_range(0.0..8_000.0);
        assert_eq!(topo.nearest_xy(x, y), topo.nearest_brute_xy(x, y), "at ({x},{y})");
    }
}

#[test]
fn index_agrees_on_points_outside_the_box() {
    let proj = Projection::new(60.0, 24.0);
    let bbox = Rect::new(0.0, 0.0, 2_000.0, 2_000.0);
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let stations = generate_stations(40, &bbox, &proj, &mut rng);
    let topo = CellTopology::build(&stations, proj, bbox).unwrap();
    for _ in 0..500 {
        let x = rng.gen_range(-3_000.0..5_000.0);
        let y = rng.gen_range(-3_000.0..5_000.0);
        assert_eq!(topo.nearest_xy(x, y), topo.nearest_brute_xy(x, y));
    }
}

#[test]
fn file_mapping_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let proj = Projection::new(60.0, 24.0);
    let bbox = Rect::new(0.0, 0.0, 1_000.0, 1_000.0);
    let mut rng = ChaCha12Rng::seed_from_u64(7);
    let stations = generate_stations(10, &bbox, &proj, &mut rng);
    let topo = CellTopology::build(&stations, proj, bbox).unwrap();

    let mut points = Vec::new();
    for i in 0..200u64 {
        let x = rng.gen_range(0.0..1_000.0);
        let y = rng.gen_range(0.0..1_000.0);
        let (lat, lon) = proj.to_latlon(x, y);
        points.push(TrajectoryPoint { timestamp: i * 60, user_id: 3, lat, lon });
    }
    let traj_path = dir.path().join("traj.csv");
    let cells_path = dir.path().join("cells.csv");
    write_trajectory(&traj_path, &points).unwrap();
    let n = map_file(&topo, &traj_path, &cells_path).unwrap();
    assert_eq!(n, 200);

    let cells = read_cells(&cells_path).unwrap();
    assert_eq!(cells.len(), 200);
    for (cp, tp) in cells.iter().zip(&points) {
        assert_eq!(cp.timestamp, tp.timestamp);
        assert_eq!(cp.user_id, 3);
        assert_eq!(cp.cell_id, topo.nearest(tp.lat, tp.lon));
    }
}
