//! Explicit Voronoi polygons for plot export.
//!
//! Each station's cell is the bounding box clipped against the perpendicular
//! bisector half-plane toward every other station. Quadratic in the station
//! count, which is fine for plotting; the query path never touches this.

use crate::grid::CellTopology;
use cdrkit_core::io::IoError;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// (cell_id, vertices) with vertices in projected meters, closed implicitly.
pub fn voronoi_polygons(topo: &CellTopology) -> Vec<(u32, Vec<(f64, f64)>)> {
    let bbox = topo.bbox;
    let corners = vec![
        (bbox.min_x, bbox.min_y),
        (bbox.max_x, bbox.min_y),
        (bbox.max_x, bbox.max_y),
        (bbox.min_x, bbox.max_y),
    ];
    topo.sites
        .iter()
        .map(|site| {
            let mut poly = corners.clone();
            for other in &topo.sites {
                if other.cell_id == site.cell_id {
                    continue;
                }
                // Half-plane of points at least as close to `site`:
                // 2(xo-xs)x + 2(yo-ys)y <= xo^2+yo^2-xs^2-ys^2.
                let a = 2.0 * (other.x - site.x);
                let b = 2.0 * (other.y - site.y);
                let c = other.x * other.x + other.y * other.y
                    - site.x * site.x
                    - site.y * site.y;
                poly = clip_halfplane(&poly, a, b, c);
                if poly.is_empty() {
                    break;
                }
            }
            (site.cell_id, poly)
        })
        .collect()
}

/// Keep the part of `poly` with a*x + b*y <= c (Sutherland-Hodgman).
fn clip_halfplane(poly: &[(f64, f64)], a: f64, b: f64, c: f64) -> Vec<(f64, f64)> {
    let inside = |p: (f64, f64)| a * p.0 + b * p.1 <= c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let cur = poly[i];
        let next = poly[(i + 1) % poly.len()];
        let cur_in = inside(cur);
        let next_in = inside(next);
        if cur_in {
            out.push(cur);
        }
        if cur_in != next_in {
            let denom = a * (next.0 - cur.0) + b * (next.1 - cur.1);
            if denom.abs() > 1e-12 {
                let t = (c - a * cur.0 - b * cur.1) / denom;
                out.push((cur.0 + t * (next.0 - cur.0), cur.1 + t * (next.1 - cur.1)));
            }
        }
    }
    out
}

/// GeoJSON FeatureCollection of cell polygons in (lon, lat) order.
pub fn write_polygons_geojson(path: &Path, topo: &CellTopology) -> Result<(), IoError> {
    let proj = topo.projection();
    let mut out = String::from("{\"type\":\"FeatureCollection\",\"features\":[\n");
    let polys = voronoi_polygons(topo);
    for (i, (cell_id, poly)) in polys.iter().enumerate() {
        let mut ring = String::new();
        for &(x, y) in poly {
            let (lat, lon) = proj.to_latlon(x, y);
            let _ = write!(ring, "[{lon},{lat}],");
        }
        if let Some(&(x, y)) = poly.first() {
            let (lat, lon) = proj.to_latlon(x, y);
            let _ = write!(ring, "[{lon},{lat}]");
        }
        let _ = write!(
            out,
            "{{\"type\":\"Feature\",\"properties\":{{\"cell_id\":{cell_id}}},\
             \"geometry\":{{\"type\":\"Polygon\",\"coordinates\":[[{ring}]]}}}}"
        );
        out.push_str(if i + 1 < polys.len() { ",\n" } else { "\n" });
    }
    out.push_str("]}\n");
    fs::write(path, out).map_err(|e| IoError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::geo::{Projection, Rect};
    use cdrkit_core::io::Station;

    fn point_in_poly(poly: &[(f64, f64)], x: f64, y: f64) -> bool {
        // Ray casting; adequate for convex test polygons.
        let mut inside = false;
        let n = poly.len();
        for i in 0..n {
            let (x1, y1) = poly[i];
            let (x2, y2) = poly[(i + 1) % n];
            if (y1 > y) != (y2 > y) {
                let xc = x1 + (y - y1) / (y2 - y1) * (x2 - x1);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    #[test]
    fn polygons_partition_the_box() {
        let proj = Projection::new(60.0, 24.0);
        let bbox = Rect::new(0.0, 0.0, 1000.0, 1000.0);
        let mut stations = Vec::new();
        for (i, (x, y)) in [(200.0, 300.0), (700.0, 200.0), (500.0, 800.0), (900.0, 900.0)]
            .iter()
            .enumerate()
        {
            let (lat, lon) = proj.to_latlon(*x, *y);
            stations.push(Station { cell_id: i as u32 + 1, lat, lon, mcc: None, mnc: None });
        }
        let topo = CellTopology::build(&stations, proj, bbox).unwrap();
        let polys = voronoi_polygons(&topo);
        assert_eq!(polys.len(), 4);

        // Every station sits inside its own polygon.
        for ((cell_id, poly), (tid, x, y)) in polys.iter().zip(topo.cells()) {
            assert_eq!(*cell_id, tid);
            assert!(point_in_poly(poly, x, y), "station {cell_id} outside its cell");
        }
        // Polygon membership agrees with the nearest-station rule on a grid
        // of interior probes (skipping points near polygon edges).
        for gx in 0..20 {
            for gy in 0..20 {
                let x = 25.0 + gx as f64 * 50.0;
                let y = 25.0 + gy as f64 * 50.0;
                let want = topo.nearest_xy(x, y);
                let hits: Vec<u32> = polys
                    .iter()
                    .filter(|(_, p)| point_in_poly(p, x, y))
                    .map(|(id, _)| *id)
                    .collect();
                if hits.len() == 1 {
                    assert_eq!(hits[0], want, "probe ({x},{y})");
                }
            }
        }
        // Total polygon area tiles the box.
        let area: f64 = polys.iter().map(|(_, p)| polygon_area(p)).sum();
        assert!((area - 1_000_000.0).abs() < 1.0, "area {area}");
    }

    fn polygon_area(poly: &[(f64, f64)]) -> f64 {
        let n = poly.len();
        let mut s = 0.0;
        for i in 0..n {
            let (x1, y1) = poly[i];
            let (x2, y2) = poly[(i + 1) % n];
            s += x1 * y2 - x2 * y1;
        }
        s.abs() / 2.0
    }
}
