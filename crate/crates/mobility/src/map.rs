//! City map: a road graph in projected meters, typed neighborhoods with
//! popularity weights, and bus routes. Maps are either generated (a grid
//! street plan with randomly placed neighborhoods) or loaded from a road CSV.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::Rng;
use thiserror::Error;

use cdrkit_core::config::MapConfig;
use cdrkit_core::geo::{Projection, Rect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeighborhoodKind {
    Home,
    Office,
    Leisure,
}

impl NeighborhoodKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NeighborhoodKind::Home => "home",
            NeighborhoodKind::Office => "office",
            NeighborhoodKind::Leisure => "leisure",
        }
    }

    pub fn parse(s: &str) -> Option<NeighborhoodKind> {
        match s {
            "home" => Some(NeighborhoodKind::Home),
            "office" => Some(NeighborhoodKind::Office),
            "leisure" => Some(NeighborhoodKind::Leisure),
            _ => None,
        }
    }
}

/// Axis-aligned rectangle in projected meters with a popularity weight.
/// Weights are normalized per kind when the map is assembled.
#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub id: u32,
    pub kind: NeighborhoodKind,
    pub rect: Rect,
    pub popularity: f64,
}

#[derive(Debug, Clone)]
pub struct BusRoute {
    pub id: u32,
    pub stops: Vec<u32>,
    pub period_s: u64,
}

#[derive(Debug, Error)]
pub enum MobilityError {
    #[error("road graph is not connected ({reachable} of {total} nodes reachable)")]
    Disconnected { reachable: usize, total: usize },
    #[error("no {0} neighborhoods on the map")]
    MissingNeighborhoods(&'static str),
    #[error("no road path from node {from} to node {to}")]
    Unreachable { from: u32, to: u32 },
    #[error("map file {path}:{line}: {msg}")]
    BadMapFile { path: String, line: usize, msg: String },
    #[error("simulation horizon must cover at least one day, got {0} s")]
    ShortDuration(u64),
    #[error(transparent)]
    Io(#[from] cdrkit_core::io::IoError),
}

#[derive(Debug)]
pub struct CityMap {
    pub bbox: Rect,
    pub proj: Projection,
    /// Node positions in projected meters.
    pub nodes: Vec<(f64, f64)>,
    /// Adjacency list: (neighbor node, edge length in meters).
    pub adjacency: Vec<Vec<(u32, f64)>>,
    pub neighborhoods: Vec<Neighborhood>,
    pub bus_routes: Vec<BusRoute>,
}

impl CityMap {
    pub fn nearest_node(&self, x: f64, y: f64) -> u32 {
        let mut best = 0u32;
        let mut best_d2 = f64::INFINITY;
        for (i, &(nx, ny)) in self.nodes.iter().enumerate() {
            let d2 = (nx - x) * (nx - x) + (ny - y) * (ny - y);
            if d2 < best_d2 {
                best_d2 = d2;
                best = i as u32;
            }
        }
        best
    }

    pub fn neighborhoods_of(&self, kind: NeighborhoodKind) -> Vec<&Neighborhood> {
        self.neighborhoods.iter().filter(|n| n.kind == kind).collect()
    }

    fn assert_connected(&self) -> Result<(), MobilityError> {
        let n = self.nodes.len();
        if n == 0 {
            return Err(MobilityError::Disconnected { reachable: 0, total: 0 });
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut reachable = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    reachable += 1;
                    stack.push(v as usize);
                }
            }
        }
        if reachable != n {
            return Err(MobilityError::Disconnected { reachable, total: n });
        }
        Ok(())
    }
}

/// Shortest-path tree from one source over the road graph (Dijkstra).
pub struct Sssp {
    pub dist: Vec<f64>,
    pub prev: Vec<u32>,
}

impl Sssp {
    pub fn run(map: &CityMap, source: u32) -> Sssp {
        let n = map.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![u32::MAX; n];
        let mut heap = std::collections::BinaryHeap::new();
        dist[source as usize] = 0.0;
        heap.push(std::cmp::Reverse((ordered(0.0), source)));
        while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
            let d = d.0;
            if d > dist[u as usize] {
                continue;
            }
            for &(v, w) in &map.adjacency[u as usize] {
                let nd = d + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    prev[v as usize] = u;
                    heap.push(std::cmp::Reverse((ordered(nd), v)));
                }
            }
        }
        Sssp { dist, prev }
    }

    /// Node path source..=target, or None if unreachable.
    pub fn path_to(&self, source: u32, target: u32) -> Option<Vec<u32>> {
        if !self.dist[target as usize].is_finite() {
            return None;
        }
        let mut path = vec![target];
        let mut cur = target;
        while cur != source {
            cur = self.prev[cur as usize];
            path.push(cur);
        }
        path.reverse();
        Some(path)
    }
}

#[derive(PartialEq, PartialOrd)]
struct OrderedF64(f64);
impl Eq for OrderedF64 {}
#[allow(clippy::derive_ord_xor_partial_ord)]
impl Ord for OrderedF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).expect("finite distances")
    }
}
fn ordered(v: f64) -> OrderedF64 {
    OrderedF64(v)
}

/// Memoized shortest-path trees; the node set is small so this never evicts.
pub struct RoadRouter {
    cache: BTreeMap<u32, Sssp>,
}

impl RoadRouter {
    pub fn new() -> RoadRouter {
        RoadRouter { cache: BTreeMap::new() }
    }

    pub fn path(&mut self, map: &CityMap, from: u32, to: u32) -> Result<Vec<u32>, MobilityError> {
        let sssp = self.cache.entry(from).or_insert_with(|| Sssp::run(map, from));
        sssp.path_to(from, to).ok_or(MobilityError::Unreachable { from, to })
    }
}

impl Default for RoadRouter {
    fn default() -> Self {
        Self::new()
    }
}

fn place_rect(bbox: &Rect, w: f64, h: f64, rng: &mut impl Rng) -> Rect {
    let w = w.min(bbox.width());
    let h = h.min(bbox.height());
    let cx = rng.gen_range(bbox.min_x + w / 2.0..=bbox.max_x - w / 2.0);
    let cy = rng.gen_range(bbox.min_y + h / 2.0..=bbox.max_y - h / 2.0);
    Rect::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0)
}

fn normalize_popularity(neighborhoods: &mut [Neighborhood]) {
    for kind in [NeighborhoodKind::Home, NeighborhoodKind::Office, NeighborhoodKind::Leisure] {
        let total: f64 =
            neighborhoods.iter().filter(|n| n.kind == kind).map(|n| n.popularity).sum();
        if total > 0.0 {
            for n in neighborhoods.iter_mut().filter(|n| n.kind == kind) {
                n.popularity /= total;
            }
        }
    }
}

/// Grid street plan over the configured box, with neighborhoods dropped
/// uniformly and bus routes laid along whole grid rows and columns.
pub fn generate_map(
    map_cfg: &MapConfig,
    leisure_side_m: f64,
    home_wh: (f64, f64),
    office_wh: (f64, f64),
    rng: &mut impl Rng,
) -> CityMap {
    let bbox = Rect::new(0.0, 0.0, map_cfg.width_m, map_cfg.height_m);
    let proj = Projection::new(map_cfg.origin_lat, map_cfg.origin_lon);
    let sp = map_cfg.road_spacing_m;
    let nx = (map_cfg.width_m / sp).floor() as usize + 1;
    let ny = (map_cfg.height_m / sp).floor() as usize + 1;

    let mut nodes = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            nodes.push((i as f64 * sp, j as f64 * sp));
        }
    }
    let idx = |i: usize, j: usize| (j * nx + i) as u32;
    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nodes.len()];
    let mut connect = |a: u32, b: u32| {
        let (ax, ay) = nodes[a as usize];
        let (bx, by) = nodes[b as usize];
        let len = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
        adjacency[a as usize].push((b, len));
        adjacency[b as usize].push((a, len));
    };
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                connect(idx(i, j), idx(i + 1, j));
            }
            if j + 1 < ny {
                connect(idx(i, j), idx(i, j + 1));
            }
        }
    }

    let mut neighborhoods = Vec::new();
    let mut id = 0u32;
    for _ in 0..map_cfg.home_clusters {
        neighborhoods.push(Neighborhood {
            id,
            kind: NeighborhoodKind::Home,
            rect: place_rect(&bbox, home_wh.0, home_wh.1, rng),
            popularity: rng.gen_range(0.5..1.5),
        });
        id += 1;
    }
    for _ in 0..map_cfg.office_clusters {
        neighborhoods.push(Neighborhood {
            id,
            kind: NeighborhoodKind::Office,
            rect: place_rect(&bbox, office_wh.0, office_wh.1, rng),
            popularity: rng.gen_range(0.5..1.5),
        });
        id += 1;
    }
    for _ in 0..map_cfg.leisure_spots {
        neighborhoods.push(Neighborhood {
            id,
            kind: NeighborhoodKind::Leisure,
            rect: place_rect(&bbox, leisure_side_m, leisure_side_m, rng),
            popularity: rng.gen_range(0.5..1.5),
        });
        id += 1;
    }
    normalize_popularity(&mut neighborhoods);

    // Routes alternate between horizontal and vertical lines through the
    // grid, each stopping at every intersection along the way.
    let mut bus_routes = Vec::new();
    for r in 0..map_cfg.bus_routes {
        let stops = if r % 2 == 0 {
            let j = rng.gen_range(0..ny);
            (0..nx).map(|i| idx(i, j)).collect()
        } else {
            let i = rng.gen_range(0..nx);
            (0..ny).map(|j| idx(i, j)).collect()
        };
        bus_routes.push(BusRoute { id: r, stops, period_s: map_cfg.bus_period_s });
    }

    CityMap { bbox, proj, nodes, adjacency, neighborhoods, bus_routes }
}

const NODE_HEADER: &str = "node_id,lat,lon";
const EDGE_HEADER: &str = "edge,node_a,node_b";

/// Road CSV: a node section under `node_id,lat,lon`, then an edge section
/// introduced by the literal line `edge,node_a,node_b`.
pub fn write_map(path: &Path, map: &CityMap) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{NODE_HEADER}")?;
    for (i, &(x, y)) in map.nodes.iter().enumerate() {
        let (lat, lon) = map.proj.to_latlon(x, y);
        writeln!(f, "{i},{lat:.6},{lon:.6}")?;
    }
    writeln!(f, "{EDGE_HEADER}")?;
    for (a, nbrs) in map.adjacency.iter().enumerate() {
        for &(b, _) in nbrs {
            if (a as u32) < b {
                writeln!(f, "{a},{b}")?;
            }
        }
    }
    f.flush()
}

/// Load a road CSV written by [`write_map`] or supplied externally. The
/// bounding box is the node hull; neighborhoods and bus routes stay empty
/// (callers add neighborhoods from their own source).
pub fn load_map(path: &Path, proj: Projection) -> Result<CityMap, MobilityError> {
    let file = std::fs::File::open(path)
        .map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();
    let bad = |line: usize, msg: String| MobilityError::BadMapFile {
        path: display.clone(),
        line,
        msg,
    };

    let mut nodes: Vec<(f64, f64)> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let mut in_edges = false;
    let mut ids: BTreeMap<u32, u32> = BTreeMap::new();
    for (ln, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
        let line = line.trim_end();
        if ln == 0 {
            if line != NODE_HEADER {
                return Err(bad(1, format!("expected header `{NODE_HEADER}`")));
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        if line == EDGE_HEADER {
            in_edges = true;
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if in_edges {
            let [a, b] = parts[..] else {
                return Err(bad(ln + 1, "edge rows need 2 fields".into()));
            };
            let a: u32 = a.parse().map_err(|_| bad(ln + 1, format!("bad node id `{a}`")))?;
            let b: u32 = b.parse().map_err(|_| bad(ln + 1, format!("bad node id `{b}`")))?;
            edges.push((a, b));
        } else {
            let [id, lat, lon] = parts[..] else {
                return Err(bad(ln + 1, "node rows need 3 fields".into()));
            };
            let id: u32 = id.parse().map_err(|_| bad(ln + 1, format!("bad node id `{id}`")))?;
            let lat: f64 = lat.parse().map_err(|_| bad(ln + 1, format!("bad lat `{lat}`")))?;
            let lon: f64 = lon.parse().map_err(|_| bad(ln + 1, format!("bad lon `{lon}`")))?;
            if ids.insert(id, nodes.len() as u32).is_some() {
                return Err(bad(ln + 1, format!("duplicate node id {id}")));
            }
            nodes.push(proj.to_xy(lat, lon));
        }
    }
    if nodes.is_empty() {
        return Err(bad(1, "no nodes".into()));
    }

    let mut adjacency: Vec<Vec<(u32, f64)>> = vec![Vec::new(); nodes.len()];
    for (a, b) in edges {
        let (&ia, &ib) = match (ids.get(&a), ids.get(&b)) {
            (Some(ia), Some(ib)) => (ia, ib),
            _ => return Err(bad(0, format!("edge references unknown node {a} or {b}"))),
        };
        let (ax, ay) = nodes[ia as usize];
        let (bx, by) = nodes[ib as usize];
        let len = ((ax - bx).powi(2) + (ay - by).powi(2)).sqrt();
        adjacency[ia as usize].push((ib, len));
        adjacency[ib as usize].push((ia, len));
    }

    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &nodes {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let map = CityMap {
        bbox: Rect::new(x0, y0, x1, y1),
        proj,
        nodes,
        adjacency,
        neighborhoods: Vec::new(),
        bus_routes: Vec::new(),
    };
    map.assert_connected()?;
    Ok(map)
}

const NEIGHBORHOOD_HEADER: &str = "kind,id,popularity,lat_min,lon_min,lat_max,lon_max";

pub fn write_neighborhoods(path: &Path, map: &CityMap) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{NEIGHBORHOOD_HEADER}")?;
    for n in &map.neighborhoods {
        let (lat0, lon0) = map.proj.to_latlon(n.rect.min_x, n.rect.min_y);
        let (lat1, lon1) = map.proj.to_latlon(n.rect.max_x, n.rect.max_y);
        writeln!(
            f,
            "{},{},{:.6},{lat0:.6},{lon0:.6},{lat1:.6},{lon1:.6}",
            n.kind.as_str(),
            n.id,
            n.popularity
        )?;
    }
    f.flush()
}

pub fn read_neighborhoods(path: &Path, proj: &Projection) -> Result<Vec<Neighborhood>, MobilityError> {
    let file = std::fs::File::open(path)
        .map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
    let display = path.display().to_string();
    let mut out = Vec::new();
    for (ln, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| MobilityError::Io(cdrkit_core::io::IoError::io(path, e)))?;
        let line = line.trim_end();
        if ln == 0 {
            if line != NEIGHBORHOOD_HEADER {
                return Err(MobilityError::BadMapFile {
                    path: display,
                    line: 1,
                    msg: format!("expected header `{NEIGHBORHOOD_HEADER}`"),
                });
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        let bad = |msg: String| MobilityError::BadMapFile { path: display.clone(), line: ln + 1, msg };
        let [kind, id, pop, lat0, lon0, lat1, lon1] = parts[..] else {
            return Err(bad("expected 7 fields".into()));
        };
        let kind = NeighborhoodKind::parse(kind).ok_or_else(|| bad(format!("bad kind `{kind}`")))?;
        let id: u32 = id.parse().map_err(|_| bad(format!("bad id `{id}`")))?;
        let popularity: f64 = pop.parse().map_err(|_| bad(format!("bad popularity `{pop}`")))?;
        let corner = |lat: &str, lon: &str| -> Result<(f64, f64), MobilityError> {
            let lat: f64 = lat.parse().map_err(|_| bad(format!("bad lat `{lat}`")))?;
            let lon: f64 = lon.parse().map_err(|_| bad(format!("bad lon `{lon}`")))?;
            Ok(proj.to_xy(lat, lon))
        };
        let (x0, y0) = corner(lat0, lon0)?;
        let (x1, y1) = corner(lat1, lon1)?;
        out.push(Neighborhood { id, kind, rect: Rect::new(x0, y0, x1, y1), popularity });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::RngFactory;

    fn test_cfg() -> MapConfig {
        MapConfig {
            file: String::new(),
            width_m: 3000.0,
            height_m: 2000.0,
            origin_lat: 60.1699,
            origin_lon: 24.9384,
            road_spacing_m: 500.0,
            home_clusters: 4,
            office_clusters: 3,
            leisure_spots: 3,
            bus_routes: 2,
            bus_period_s: 600,
            areas: 3,
        }
    }

    fn test_map(seed: u64) -> CityMap {
        let mut rng = RngFactory::new(seed).stream("test/map");
        generate_map(&test_cfg(), 100.0, (250.0, 150.0), (500.0, 300.0), &mut rng)
    }

    #[test]
    fn generated_grid_is_connected_with_normalized_popularity() {
        let map = test_map(1);
        assert_eq!(map.nodes.len(), 7 * 5);
        map.assert_connected().unwrap();
        for kind in [NeighborhoodKind::Home, NeighborhoodKind::Office, NeighborhoodKind::Leisure] {
            let total: f64 = map.neighborhoods_of(kind).iter().map(|n| n.popularity).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        for n in &map.neighborhoods {
            assert!(n.rect.min_x >= 0.0 && n.rect.max_x <= 3000.0);
            assert!(n.rect.min_y >= 0.0 && n.rect.max_y <= 2000.0);
        }
        assert_eq!(map.bus_routes.len(), 2);
        for route in &map.bus_routes {
            // Consecutive stops must be road neighbors.
            for w in route.stops.windows(2) {
                assert!(map.adjacency[w[0] as usize].iter().any(|&(v, _)| v == w[1]));
            }
        }
    }

    #[test]
    fn dijkstra_follows_the_grid_metric() {
        let map = test_map(2);
        let sssp = Sssp::run(&map, 0);
        // Node 0 is (0,0); the far corner is 6 east + 4 north of it.
        let far = (map.nodes.len() - 1) as u32;
        assert!((sssp.dist[far as usize] - 5000.0).abs() < 1e-9);
        let path = sssp.path_to(0, far).unwrap();
        assert_eq!(path.first(), Some(&0));
        assert_eq!(path.last(), Some(&far));
        assert_eq!(path.len(), 11, "10 edges of 500 m each");
    }

    #[test]
    fn map_csv_roundtrip_preserves_graph() {
        let map = test_map(3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roads.csv");
        write_map(&path, &map).unwrap();
        let loaded = load_map(&path, Projection::new(60.1699, 24.9384)).unwrap();
        assert_eq!(loaded.nodes.len(), map.nodes.len());
        let n_edges = |m: &CityMap| m.adjacency.iter().map(|a| a.len()).sum::<usize>();
        assert_eq!(n_edges(&loaded), n_edges(&map));
        // Positions survive the lat/lon roundtrip to within format precision.
        for (a, b) in map.nodes.iter().zip(loaded.nodes.iter()) {
            assert!((a.0 - b.0).abs() < 0.2, "{a:?} vs {b:?}");
            assert!((a.1 - b.1).abs() < 0.2);
        }
    }

    #[test]
    fn neighborhoods_csv_roundtrip() {
        let map = test_map(4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("neighborhoods.csv");
        write_neighborhoods(&path, &map).unwrap();
        let loaded = read_neighborhoods(&path, &map.proj).unwrap();
        assert_eq!(loaded.len(), map.neighborhoods.len());
        for (a, b) in map.neighborhoods.iter().zip(loaded.iter()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.kind, b.kind);
            assert!((a.rect.min_x - b.rect.min_x).abs() < 0.2);
            assert!((a.popularity - b.popularity).abs() < 1e-6);
        }
    }

    #[test]
    fn disconnected_road_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("roads.csv");
        std::fs::write(
            &path,
            "node_id,lat,lon\n0,60.0,24.0\n1,60.001,24.0\n2,60.1,24.1\nedge,node_a,node_b\n0,1\n",
        )
        .unwrap();
        let err = load_map(&path, Projection::new(60.0, 24.0)).unwrap_err();
        assert!(matches!(err, MobilityError::Disconnected { reachable: 2, total: 3 }));
    }
}
