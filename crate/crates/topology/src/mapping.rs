//! Trajectory-to-cell mapping. Order preserving: one output record per
//! input point, same timestamps.

use crate::grid::CellTopology;
use cdrkit_core::io::{CellWriter, IoError, TrajectoryReader};
use cdrkit_core::types::{CellPoint, TrajectoryPoint};
use std::path::Path;

pub fn map_positions<I>(topo: &CellTopology, points: I) -> Vec<CellPoint>
where
    I: IntoIterator<Item = TrajectoryPoint>,
{
    points
        .into_iter()
        .map(|p| CellPoint {
            timestamp: p.timestamp,
            user_id: p.user_id,
            cell_id: topo.nearest(p.lat, p.lon),
        })
        .collect()
}

/// Streaming file-to-file variant; returns the number of mapped records.
pub fn map_file(topo: &CellTopology, trajectory: &Path, out: &Path) -> Result<u64, IoError> {
    let mut reader = TrajectoryReader::open(trajectory)?;
    let mut writer = CellWriter::create(out)?;
    let mut n = 0u64;
    for point in reader.by_ref() {
        let p = point?;
        writer.write(&CellPoint {
            timestamp: p.timestamp,
            user_id: p.user_id,
            cell_id: topo.nearest(p.lat, p.lon),
        })?;
        n += 1;
    }
    writer.finish()?;
    Ok(n)
}
