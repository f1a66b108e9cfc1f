//! Synthetic station placement: uniform over the bounding box, sequential
//! cell ids from 1.

use cdrkit_core::geo::{Projection, Rect};
use cdrkit_core::io::Station;
use rand::Rng;

pub fn generate_stations<R: Rng>(
    n: u32,
    bbox: &Rect,
    proj: &Projection,
    rng: &mut R,
) -> Vec<Station> {
    (1..=n)
        .map(|cell_id| {
            let x = rng.gen_range(bbox.min_x..bbox.max_x);
            let y = rng.gen_range(bbox.min_y..bbox.max_y);
            let (lat, lon) = proj.to_latlon(x, y);
            Station { cell_id, lat, lon, mcc: None, mnc: None }
        })
        .collect()
}
