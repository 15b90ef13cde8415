//! Radius queries over POIs and time-matched check-in retrieval.

use std::collections::HashMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::dataset::{time_category, CheckinIdx, Dataset, Hourly, PoiIdx, TimeCategory, Weekly};
use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Metres per degree of latitude on the sphere used by [`distance`].
const M_PER_DEG: f64 = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Self {
        GeoPoint { lat, lon }
    }

    pub fn checked(lat: f64, lon: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidArgument(format!(
                "coordinates ({lat}, {lon}) out of range"
            )));
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Great-circle distance in metres (haversine).
pub fn distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = lat2 - lat1;
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// The user's situation: where and when recommendations are requested.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub loc: GeoPoint,
    pub time: TimeCategory,
    pub wall_time: NaiveDateTime,
}

impl Context {
    pub fn new(loc: GeoPoint, wall_time: NaiveDateTime) -> Self {
        Context {
            loc,
            time: time_category(wall_time),
            wall_time,
        }
    }
}

/// Uniform lat/lon grid. Only occupied cells are stored.
#[derive(Debug, Clone, Default)]
pub struct GridIndex {
    cell_deg: f64,
    cells: HashMap<(i32, i32), Vec<PoiIdx>>,
    points: Vec<GeoPoint>,
}

impl GridIndex {
    pub fn build(points: impl Iterator<Item = GeoPoint>, cell_m: f64) -> Self {
        let cell_deg = cell_m / M_PER_DEG;
        let points: Vec<GeoPoint> = points.collect();
        let mut cells: HashMap<(i32, i32), Vec<PoiIdx>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            cells
                .entry(Self::cell_of(cell_deg, *p))
                .or_default()
                .push(PoiIdx(i as u32));
        }
        GridIndex {
            cell_deg,
            cells,
            points,
        }
    }

    fn cell_of(cell_deg: f64, p: GeoPoint) -> (i32, i32) {
        (
            (p.lat / cell_deg).floor() as i32,
            (p.lon / cell_deg).floor() as i32,
        )
    }

    /// Indices of all points within `r` metres of `center`, ascending.
    pub fn within(&self, center: GeoPoint, r: f64) -> Vec<PoiIdx> {
        let dlat = r / M_PER_DEG;
        let lat_lo = center.lat - dlat;
        let lat_hi = center.lat + dlat;
        let max_abs_lat = lat_lo.abs().max(lat_hi.abs());
        let mut out = Vec::new();

        let full_scan = |out: &mut Vec<PoiIdx>| {
            out.extend(
                self.points
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| distance(**p, center) <= r)
                    .map(|(i, _)| PoiIdx(i as u32)),
            );
        };

        // Near the poles or across the antimeridian the lon window degenerates.
        if max_abs_lat >= 89.0 {
            full_scan(&mut out);
            return out;
        }
        let dlon = dlat / max_abs_lat.to_radians().cos();
        let (lon_lo, lon_hi) = (center.lon - dlon, center.lon + dlon);
        if dlon >= 180.0 || lon_lo < -180.0 || lon_hi > 180.0 {
            full_scan(&mut out);
            return out;
        }

        let (r0, c0) = Self::cell_of(self.cell_deg, GeoPoint::new(lat_lo, lon_lo));
        let (r1, c1) = Self::cell_of(self.cell_deg, GeoPoint::new(lat_hi, lon_hi));
        let window = (r1 - r0 + 1) as u64 * (c1 - c0 + 1) as u64;
        if window > self.cells.len() as u64 {
            for (&(row, col), members) in &self.cells {
                if (r0..=r1).contains(&row) && (c0..=c1).contains(&col) {
                    out.extend(members.iter().filter(|i| distance(self.points[i.index()], center) <= r));
                }
            }
        } else {
            for row in r0..=r1 {
                for col in c0..=c1 {
                    if let Some(members) = self.cells.get(&(row, col)) {
                        out.extend(
                            members
                                .iter()
                                .filter(|i| distance(self.points[i.index()], center) <= r),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// POIs within `r` metres of `center`, ordered by POI id.
pub fn nearby_pois(dataset: &Dataset, center: GeoPoint, r: f64) -> Result<Vec<PoiIdx>> {
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
    }
    Ok(dataset.grid().within(center, r))
}

/// Check-ins at `pois` whose hourly bucket equals `hourly` and, when given, whose weekly
/// bucket equals `weekly`.
pub fn checkins_of(
    dataset: &Dataset,
    pois: &[PoiIdx],
    hourly: Hourly,
    weekly: Option<Weekly>,
) -> Vec<CheckinIdx> {
    pois.iter()
        .flat_map(|&p| dataset.checkins_at(p))
        .filter(|&c| {
            let t = time_category(dataset.checkin(c).ts);
            t.hourly == hourly && weekly.map_or(true, |w| t.weekly == w)
        })
        .collect()
}
