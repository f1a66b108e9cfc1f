//! Local map projection.
//!
//! The simulation world is a flat rectangle of `width_m` x `height_m` meters
//! anchored at a geographic origin (south-west corner). Conversion between
//! meters and degrees is equirectangular around the origin latitude, which is
//! exact enough at city scale (< 30 km) and, crucially, the same everywhere:
//! nearest-station queries, contact radii and gyration radii all measure
//! distance through this one projection.

const METERS_PER_DEG_LAT: f64 = 111_320.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub origin_lat: f64,
    pub origin_lon: f64,
    meters_per_deg_lon: f64,
}

impl Projection {
    pub fn new(origin_lat: f64, origin_lon: f64) -> Self {
        Projection {
            origin_lat,
            origin_lon,
            meters_per_deg_lon: METERS_PER_DEG_LAT * origin_lat.to_radians().cos(),
        }
    }

    pub fn to_latlon(&self, x_m: f64, y_m: f64) -> (f64, f64) {
        (
            self.origin_lat + y_m / METERS_PER_DEG_LAT,
            self.origin_lon + x_m / self.meters_per_deg_lon,
        )
    }

    pub fn to_xy(&self, lat: f64, lon: f64) -> (f64, f64) {
        (
            (lon - self.origin_lon) * self.meters_per_deg_lon,
            (lat - self.origin_lat) * METERS_PER_DEG_LAT,
        )
    }

    pub fn distance_m(&self, lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
        let (x1, y1) = self.to_xy(lat1, lon1);
        let (x2, y2) = self.to_xy(lat2, lon2);
        ((x1 - x2).powi(2) + (y1 - y2).powi(2)).sqrt()
    }
}

/// Axis-aligned rectangle in projected meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Rect {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Rect { min_x, min_y, max_x, max_y }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn clamp_point(&self, x: f64, y: f64) -> (f64, f64) {
        (x.clamp(self.min_x, self.max_x), y.clamp(self.min_y, self.max_y))
    }

    /// Grown outward by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Rect {
        Rect::new(
            self.min_x - margin,
            self.min_y - margin,
            self.max_x + margin,
            self.max_y + margin,
        )
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }
}
