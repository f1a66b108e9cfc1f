//! Cell topology over base stations: a uniform-grid nearest-station index
//! (implicitly the Voronoi partition of the plane), trajectory-to-cell
//! mapping, synthetic station placement, and polygon export for plotting.

mod grid;
mod mapping;
mod polygons;
mod stations;

pub use grid::{CellTopology, TopologyError};
pub use mapping::{map_file, map_positions};
pub use polygons::{voronoi_polygons, write_polygons_geojson};
pub use stations::generate_stations;
