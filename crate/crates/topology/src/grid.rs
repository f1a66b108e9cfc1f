//! Nearest-station index on a uniform bucket grid.
//!
//! Queries walk outward over Chebyshev rings of buckets and stop once the
//! ring's distance lower bound exceeds the best hit, which makes the result
//! exactly the linear-scan nearest station. Ties on distance go to the
//! lowest cell id, so the mapping is total and deterministic even for
//! points on a bisector.

use cdrkit_core::geo::{Projection, Rect};
use cdrkit_core::io::Station;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("no stations supplied")]
    NoStations,
    #[error("duplicate cell id {0}")]
    DuplicateCellId(u32),
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Site {
    pub cell_id: u32,
    pub x: f64,
    pub y: f64,
}

pub struct CellTopology {
    pub(crate) sites: Vec<Site>,
    proj: Projection,
    pub(crate) bbox: Rect,
    grid_w: usize,
    grid_h: usize,
    cell_w: f64,
    cell_h: f64,
    buckets: Vec<Vec<u32>>,
}

impl CellTopology {
    /// Stations sharing an exact position collapse to the lowest cell id;
    /// distinct stations with the same cell id are an input error.
    pub fn build(
        stations: &[Station],
        proj: Projection,
        bbox: Rect,
    ) -> Result<CellTopology, TopologyError> {
        if stations.is_empty() {
            return Err(TopologyError::NoStations);
        }
        let mut ids = BTreeSet::new();
        for s in stations {
            if !ids.insert(s.cell_id) {
                return Err(TopologyError::DuplicateCellId(s.cell_id));
            }
        }

        let mut sites: Vec<Site> = stations
            .iter()
            .map(|s| {
                let (x, y) = proj.to_xy(s.lat, s.lon);
                Site { cell_id: s.cell_id, x, y }
            })
            .collect();
        // Ascending id order, then first-wins per position: stations sharing
        // an exact location keep the lowest cell id.
        sites.sort_by(|a, b| a.cell_id.cmp(&b.cell_id));
        let mut seen_pos = BTreeSet::new();
        sites.retain(|s| seen_pos.insert((s.x.to_bits(), s.y.to_bits())));

        let n = sites.len();
        let grid_w = (n as f64).sqrt().ceil().max(1.0) as usize;
        let grid_h = grid_w;
        let cell_w = (bbox.width() / grid_w as f64).max(1e-9);
        let cell_h = (bbox.height() / grid_h as f64).max(1e-9);
        let mut buckets = vec![Vec::new(); grid_w * grid_h];
        for (idx, s) in sites.iter().enumerate() {
            let (bx, by) = bucket_of(s.x, s.y, &bbox, cell_w, cell_h, grid_w, grid_h);
            buckets[by * grid_w + bx].push(idx as u32);
        }
        Ok(CellTopology { sites, proj, bbox, grid_w, grid_h, cell_w, cell_h, buckets })
    }

    /// Nearest station for a projected point; out-of-box points clamp to the
    /// box edge first.
    pub fn nearest_xy(&self, x: f64, y: f64) -> u32 {
        let (x, y) = self.bbox.clamp_point(x, y);
        let (bx, by) = bucket_of(x, y, &self.bbox, self.cell_w, self.cell_h, self.grid_w, self.grid_h);
        let min_dim = self.cell_w.min(self.cell_h);

        let mut best: Option<(f64, u32)> = None;
        let max_r = self.grid_w.max(self.grid_h);
        for r in 0..=max_r {
            if let Some((best_d2, _)) = best {
                let bound = (r as f64 - 1.0).max(0.0) * min_dim;
                // Every station in this ring or beyond is strictly farther;
                // an equality could still tie and win on id, so keep going.
                if bound * bound > best_d2 {
                    break;
                }
            }
            self.scan_ring(bx, by, r, x, y, &mut best);
        }
        best.expect("at least one station").1
    }

    pub fn nearest(&self, lat: f64, lon: f64) -> u32 {
        let (x, y) = self.proj.to_xy(lat, lon);
        self.nearest_xy(x, y)
    }

    /// Linear scan over every station; the reference answer the grid index
    /// must reproduce.
    pub fn nearest_brute_xy(&self, x: f64, y: f64) -> u32 {
        let (x, y) = self.bbox.clamp_point(x, y);
        let mut best: Option<(f64, u32)> = None;
        for s in &self.sites {
            consider(s, x, y, &mut best);
        }
        best.expect("at least one station").1
    }

    pub fn nearest_brute(&self, lat: f64, lon: f64) -> u32 {
        let (x, y) = self.proj.to_xy(lat, lon);
        self.nearest_brute_xy(x, y)
    }

    fn scan_ring(&self, bx: usize, by: usize, r: usize, x: f64, y: f64, best: &mut Option<(f64, u32)>) {
        let x0 = bx.saturating_sub(r);
        let x1 = (bx + r).min(self.grid_w - 1);
        let y0 = by.saturating_sub(r);
        let y1 = (by + r).min(self.grid_h - 1);
        for gy in y0..=y1 {
            for gx in x0..=x1 {
                // Only the ring boundary; the interior was scanned earlier.
                if gx.abs_diff(bx).max(gy.abs_diff(by)) != r {
                    continue;
                }
                for &idx in &self.buckets[gy * self.grid_w + gx] {
                    consider(&self.sites[idx as usize], x, y, best);
                }
            }
        }
    }

    pub fn bbox(&self) -> Rect {
        self.bbox
    }

    pub fn projection(&self) -> Projection {
        self.proj
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// (cell_id, x, y) in projected meters, ascending by cell id.
    pub fn cells(&self) -> impl Iterator<Item = (u32, f64, f64)> + '_ {
        self.sites.iter().map(|s| (s.cell_id, s.x, s.y))
    }

    pub fn cell_xy(&self, cell_id: u32) -> Option<(f64, f64)> {
        let idx = self.sites.binary_search_by(|s| s.cell_id.cmp(&cell_id)).ok()?;
        let s = &self.sites[idx];
        Some((s.x, s.y))
    }
}

fn consider(s: &Site, x: f64, y: f64, best: &mut Option<(f64, u32)>) {
    let dx = s.x - x;
    let dy = s.y - y;
    let d2 = dx * dx + dy * dy;
    let better = match *best {
        None => true,
        Some((bd2, bid)) => d2 < bd2 || (d2 == bd2 && s.cell_id < bid),
    };
    if better {
        *best = Some((d2, s.cell_id));
    }
}

fn bucket_of(
    x: f64,
    y: f64,
    bbox: &Rect,
    cell_w: f64,
    cell_h: f64,
    grid_w: usize,
    grid_h: usize,
) -> (usize, usize) {
    let bx = ((x - bbox.min_x) / cell_w).floor() as i64;
    let by = ((y - bbox.min_y) / cell_h).floor() as i64;
    (
        bx.clamp(0, grid_w as i64 - 1) as usize,
        by.clamp(0, grid_h as i64 - 1) as usize,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn station(cell_id: u32, lat: f64, lon: f64) -> Station {
        Station { cell_id, lat, lon, mcc: None, mnc: None }
    }

    fn proj() -> Projection {
        Projection::new(60.0, 24.0)
    }

    fn topo(stations: &[Station]) -> CellTopology {
        CellTopology::build(stations, proj(), Rect::new(0.0, 0.0, 10_000.0, 8_000.0)).unwrap()
    }

    #[test]
    fn empty_and_duplicate_ids_rejected() {
        let r = CellTopology::build(&[], proj(), Rect::new(0.0, 0.0, 1.0, 1.0));
        assert!(matches!(r, Err(TopologyError::NoStations)));
        let p = proj();
        let (lat, lon) = p.to_latlon(10.0, 10.0);
        let (lat2, lon2) = p.to_latlon(20.0, 20.0);
        let r = CellTopology::build(
            &[station(1, lat, lon), station(1, lat2, lon2)],
            p,
            Rect::new(0.0, 0.0, 100.0, 100.0),
        );
        assert!(matches!(r, Err(TopologyError::DuplicateCellId(1))));
    }

    #[test]
    fn single_station_takes_everything() {
        let p = proj();
        let (lat, lon) = p.to_latlon(5_000.0, 4_000.0);
        let t = topo(&[station(7, lat, lon)]);
        assert_eq!(t.nearest_xy(0.0, 0.0), 7);
        assert_eq!(t.nearest_xy(9_999.0, 7_999.0), 7);
        // Out-of-box points clamp, then map.
        assert_eq!(t.nearest_xy(-500.0, 20_000.0), 7);
    }

    #[test]
    fn two_stations_flip_across_the_bisector() {
        let p = proj();
        let (lat_a, lon_a) = p.to_latlon(2_000.0, 4_000.0);
        let (lat_b, lon_b) = p.to_latlon(8_000.0, 4_000.0);
        let t = topo(&[station(1, lat_a, lon_a), station(2, lat_b, lon_b)]);
        assert_eq!(t.nearest_xy(4_999.0, 100.0), 1);
        assert_eq!(t.nearest_xy(5_001.0, 100.0), 2);
        // Equidistant point: lowest cell id wins.
        assert_eq!(t.nearest_xy(5_000.0, 4_000.0), 1);
    }

    #[test]
    fn same_position_stations_collapse_to_lowest_id() {
        let p = proj();
        let (lat, lon) = p.to_latlon(1_000.0, 1_000.0);
        let t = topo(&[station(9, lat, lon), station(3, lat, lon)]);
        assert_eq!(t.len(), 1);
        assert_eq!(t.nearest_xy(1_000.0, 1_000.0), 3);
    }

    #[test]
    fn station_exact_position_maps_to_itself() {
        let p = proj();
        let mut sts = Vec::new();
        for i in 0..30u32 {
            let (lat, lon) = p.to_latlon(333.0 * i as f64 + 17.0, (i as f64 * 911.0) % 7_800.0);
            sts.push(station(i + 1, lat, lon));
        }
        let t = topo(&sts);
        for (cell_id, x, y) in t.cells() {
            assert_eq!(t.nearest_xy(x, y), cell_id);
        }
    }

    #[test]
    fn cell_lookup_by_id() {
        let p = proj();
        let (lat, lon) = p.to_latlon(1_234.0, 567.0);
        let t = topo(&[station(42, lat, lon)]);
        let (x, y) = t.cell_xy(42).unwrap();
        assert!((x - 1_234.0).abs() < 1e-6 && (y - 567.0).abs() < 1e-6);
        assert_eq!(t.cell_xy(41), None);
    }
}
