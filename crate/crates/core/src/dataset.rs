//! Immutable in-memory store of POIs, visitors and check-ins.
//!
//! Sources are JSON-lines files (one object per line). After loading, the dataset is never
//! mutated: every query in the engine borrows it, so it can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{GeoPoint, GridIndex, EARTH_RADIUS_M};

/// Reserved name for POIs that carry no category.
pub const UNCATEGORIZED: &str = "uncategorized";

/// Rating injected for every POI when the source has no ratings at all.
pub const FALLBACK_RATING: f64 = 0.5;

/// Cell size of the spatial index, close to the default query radius.
pub const DEFAULT_GRID_CELL_M: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PoiIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VisitorIdx(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CheckinIdx(pub u32);

/// Index into [`Dataset::category_names`]. Id 0 is always [`UNCATEGORIZED`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CategoryId(pub u32);

impl PoiIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl VisitorIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CheckinIdx {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CategoryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Poi {
    pub id: String,
    pub loc: GeoPoint,
    pub inserted: NaiveDate,
    pub total_checkins: u64,
    pub radius_m: f64,
    pub categories: BTreeSet<CategoryId>,
    /// Rating in `[0, 5]`; imputed with the dataset mean when the source has none.
    pub rating: f64,
    pub rating_observed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visitor {
    pub id: String,
    /// Raw demographic values indexed by [`DemogAttribute`].
    pub demographics: [f64; DemogAttribute::COUNT],
    /// Check-ins of this visitor, ordered by timestamp.
    pub checkins: Vec<CheckinIdx>,
}

/// A visit record. `ts` is local wall-clock time of the dataset's city.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checkin {
    pub visitor: VisitorIdx,
    pub poi: PoiIdx,
    pub ts: NaiveDateTime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DemogAttribute {
    Items,
    Photos,
    Friends,
    Checkins,
    Places,
}

impl DemogAttribute {
    pub const COUNT: usize = 5;
    pub const ALL: [DemogAttribute; 5] = [
        DemogAttribute::Items,
        DemogAttribute::Photos,
        DemogAttribute::Friends,
        DemogAttribute::Checkins,
        DemogAttribute::Places,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DemogAttribute::Items => "items",
            DemogAttribute::Photos => "photos",
            DemogAttribute::Friends => "friends",
            DemogAttribute::Checkins => "check-ins",
            DemogAttribute::Places => "places",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        DemogAttribute::ALL
            .into_iter()
            .find(|a| a.name() == name)
            .ok_or_else(|| Error::UnknownAttribute(name.to_string()))
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bucket {
    VeryFew,
    Few,
    Some,
    Many,
}

impl Bucket {
    pub const ALL: [Bucket; 4] = [Bucket::VeryFew, Bucket::Few, Bucket::Some, Bucket::Many];

    pub fn name(self) -> &'static str {
        match self {
            Bucket::VeryFew => "very few",
            Bucket::Few => "few",
            Bucket::Some => "some",
            Bucket::Many => "many",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DemographicBucket {
    pub attribute: DemogAttribute,
    pub bucket: Bucket,
}

impl fmt::Display for DemographicBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.bucket.name(), self.attribute.name())
    }
}

/// Upper bounds of the first three buckets per attribute. A value `v` falls in
/// `very few` when `v <= t[0]`, `few` when `t[0] < v <= t[1]`, `some` when `t[1] < v <= t[2]`
/// and `many` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BucketThresholds(pub [[f64; 3]; DemogAttribute::COUNT]);

impl Default for BucketThresholds {
    fn default() -> Self {
        // Equal-frequency cut points observed on the full Gowalla dump.
        BucketThresholds([
            [2.0, 3.0, 5.0],   // items
            [1.0, 2.0, 5.0],   // photos
            [1.0, 3.0, 5.0],   // friends
            [3.0, 12.0, 34.0], // check-ins
            [3.0, 9.0, 23.0],  // places
        ])
    }
}

impl BucketThresholds {
    pub fn bucket(&self, attribute: DemogAttribute, raw: f64) -> DemographicBucket {
        let [a, b, c] = self.0[attribute.index()];
        let bucket = if raw <= a {
            Bucket::VeryFew
        } else if raw <= b {
            Bucket::Few
        } else if raw <= c {
            Bucket::Some
        } else {
            Bucket::Many
        };
        DemographicBucket { attribute, bucket }
    }

    pub fn buckets_of(&self, visitor: &Visitor) -> [DemographicBucket; DemogAttribute::COUNT] {
        DemogAttribute::ALL.map(|a| self.bucket(a, visitor.demographics[a.index()]))
    }

    /// Recomputes cut points as the 25/50/75% quantiles of the observed values.
    pub fn refit(visitors: &[Visitor]) -> Self {
        let mut out = BucketThresholds::default();
        if visitors.is_empty() {
            return out;
        }
        for attr in DemogAttribute::ALL {
            let mut values: Vec<f64> = visitors
                .iter()
                .map(|v| v.demographics[attr.index()])
                .collect();
            values.sort_by(f64::total_cmp);
            let quantile = |q: f64| {
                let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len());
                values[rank - 1]
            };
            out.0[attr.index()] = [quantile(0.25), quantile(0.5), quantile(0.75)];
        }
        out
    }
}

/// Buckets a raw demographic value with the default cut points.
pub fn discretize(attribute: &str, raw_value: f64) -> Result<DemographicBucket> {
    let attribute = DemogAttribute::from_name(attribute)?;
    if !(raw_value >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "demographic value must be non-negative, got {raw_value}"
        )));
    }
    Ok(BucketThresholds::default().bucket(attribute, raw_value))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hourly {
    Morning,
    Afternoon,
    Evening,
    Night,
}

impl Hourly {
    pub const ALL: [Hourly; 4] = [Hourly::Morning, Hourly::Afternoon, Hourly::Evening, Hourly::Night];

    pub fn from_hour(hour: u32) -> Hourly {
        match hour {
            5..=11 => Hourly::Morning,
            12..=17 => Hourly::Afternoon,
            18..=22 => Hourly::Evening,
            _ => Hourly::Night,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Hourly::Morning => "morning",
            Hourly::Afternoon => "afternoon",
            Hourly::Evening => "evening",
            Hourly::Night => "night",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weekly {
    Weekday,
    Weekend,
}

impl Weekly {
    pub const ALL: [Weekly; 2] = [Weekly::Weekday, Weekly::Weekend];

    pub fn name(self) -> &'static str {
        match self {
            Weekly::Weekday => "weekday",
            Weekly::Weekend => "weekend",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimeCategory {
    pub hourly: Hourly,
    pub weekly: Weekly,
}

pub fn time_category(ts: NaiveDateTime) -> TimeCategory {
    let weekly = match ts.weekday() {
        Weekday::Sat | Weekday::Sun => Weekly::Weekend,
        _ => Weekly::Weekday,
    };
    TimeCategory {
        hourly: Hourly::from_hour(ts.hour()),
        weekly,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub max_poi_checkins: u64,
    pub max_radius_m: f64,
    pub oldest_insertion_date: NaiveDate,
    pub mean_rating: f64,
    pub city_area_m2: f64,
    pub category_universe: BTreeSet<CategoryId>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadConfig {
    /// Fail on check-ins that reference unknown POIs or visitors instead of skipping them.
    pub strict: bool,
    /// Offset added to timestamps that carry an explicit UTC offset, in minutes.
    pub utc_offset_minutes: i32,
    /// Recompute demographic cut points as equal-frequency quartiles of this dataset.
    pub refit_buckets: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub skipped_checkins: usize,
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    pois: Vec<Poi>,
    visitors: Vec<Visitor>,
    checkins: Vec<Checkin>,
    category_names: Vec<String>,
    stats: DatasetStats,
    thresholds: BucketThresholds,
}

#[derive(Debug)]
pub struct Dataset {
    pois: Vec<Poi>,
    visitors: Vec<Visitor>,
    /// Ordered by (poi, ts, visitor); `poi_offsets` slices it per POI.
    checkins: Vec<Checkin>,
    poi_offsets: Vec<u32>,
    category_names: Vec<String>,
    stats: DatasetStats,
    thresholds: BucketThresholds,
    poi_by_id: HashMap<String, PoiIdx>,
    visitor_by_id: HashMap<String, VisitorIdx>,
    category_by_name: HashMap<String, CategoryId>,
    grid: GridIndex,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawId {
    Str(String),
    Int(i64),
}

impl RawId {
    fn into_string(self) -> String {
        match self {
            RawId::Str(s) => s,
            RawId::Int(i) => i.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct PoiRow {
    id: RawId,
    lat: f64,
    lon: f64,
    inserted: String,
    checkins: u64,
    radius_m: f64,
    #[serde(default)]
    categories: Option<Vec<String>>,
    #[serde(default)]
    rating: Option<f64>,
}

#[derive(Deserialize)]
struct VisitorRow {
    id: RawId,
    #[serde(default)]
    demogs: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
struct CheckinRow {
    user: RawId,
    poi: RawId,
    ts: String,
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .or_else(|| parse_timestamp(s, 0).map(|t| t.date()))
}

/// Parses an ISO-8601 timestamp into local wall-clock time. Timestamps with an explicit offset
/// are converted to UTC and shifted by `offset_minutes`; naive timestamps are taken as local.
fn parse_timestamp(s: &str, offset_minutes: i32) -> Option<NaiveDateTime> {
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_utc() + Duration::minutes(offset_minutes as i64));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

fn json_lines<R: BufRead, T: serde::de::DeserializeOwned>(
    reader: R,
    file: &'static str,
) -> impl Iterator<Item = Result<(usize, T)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| {
            let line_no = i + 1;
            match line {
                Err(e) => Some(Err(Error::Io(e))),
                Ok(l) if l.trim().is_empty() => None,
                Ok(l) => Some(serde_json::from_str::<T>(&l).map(|v| (line_no, v)).map_err(|e| {
                    Error::Ingest {
                        file,
                        line: line_no,
                        message: e.to_string(),
                    }
                })),
            }
        })
}

fn ingest_error(file: &'static str, line: usize, message: impl Into<String>) -> Error {
    Error::Ingest {
        file,
        line,
        message: message.into(),
    }
}

/// Loads a dataset from three JSON-lines sources.
pub fn load_dataset<P: BufRead, U: BufRead, C: BufRead>(
    pois_source: P,
    visitors_source: U,
    checkins_source: C,
    config: &LoadConfig,
) -> Result<(Dataset, LoadReport)> {
    let mut poi_rows = Vec::new();
    for row in json_lines::<_, PoiRow>(pois_source, "pois") {
        let (line, row) = row?;
        if !(-90.0..=90.0).contains(&row.lat) || !(-180.0..=180.0).contains(&row.lon) {
            return Err(ingest_error("pois", line, "coordinates out of range"));
        }
        if !(row.radius_m >= 0.0) {
            return Err(ingest_error("pois", line, "radius_m must be non-negative"));
        }
        if let Some(r) = row.rating {
            if !(0.0..=5.0).contains(&r) {
                return Err(ingest_error("pois", line, "rating must lie in [0, 5]"));
            }
        }
        let inserted = parse_date(&row.inserted)
            .ok_or_else(|| ingest_error("pois", line, format!("bad date `{}`", row.inserted)))?;
        poi_rows.push((line, row, inserted));
    }

    let mut visitor_rows = Vec::new();
    for row in json_lines::<_, VisitorRow>(visitors_source, "visitors") {
        let (line, row) = row?;
        let mut demographics = [0.0; DemogAttribute::COUNT];
        for (name, value) in &row.demogs {
            let attr = DemogAttribute::from_name(name)
                .map_err(|_| ingest_error("visitors", line, format!("unknown attribute `{name}`")))?;
            if !(*value >= 0.0) {
                return Err(ingest_error("visitors", line, "demographic values must be non-negative"));
            }
            demographics[attr.index()] = *value;
        }
        visitor_rows.push((row.id.into_string(), demographics));
    }

    let mut checkin_rows = Vec::new();
    for row in json_lines::<_, CheckinRow>(checkins_source, "checkins") {
        let (line, row) = row?;
        let ts = parse_timestamp(&row.ts, config.utc_offset_minutes)
            .ok_or_else(|| ingest_error("checkins", line, format!("bad timestamp `{}`", row.ts)))?;
        checkin_rows.push((line, row.user.into_string(), row.poi.into_string(), ts));
    }

    // Category dictionary: reserved id 0, then names in sorted order.
    let mut names: BTreeSet<String> = BTreeSet::new();
    for (_, row, _) in &poi_rows {
        for c in row.categories.iter().flatten() {
            let c = c.trim().to_lowercase();
            if !c.is_empty() && c != UNCATEGORIZED {
                names.insert(c);
            }
        }
    }
    let category_names: Vec<String> = std::iter::once(UNCATEGORIZED.to_string())
        .chain(names)
        .collect();
    let category_by_name: HashMap<String, CategoryId> = category_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), CategoryId(i as u32)))
        .collect();

    let observed: Vec<f64> = poi_rows.iter().filter_map(|(_, r, _)| r.rating).collect();
    let mean_rating = if observed.is_empty() {
        FALLBACK_RATING
    } else {
        observed.iter().sum::<f64>() / observed.len() as f64
    };

    let mut pois: Vec<Poi> = Vec::with_capacity(poi_rows.len());
    let mut seen = BTreeSet::new();
    for (line, row, inserted) in poi_rows {
        let id = row.id.into_string();
        if !seen.insert(id.clone()) {
            return Err(ingest_error("pois", line, format!("duplicate POI id `{id}`")));
        }
        let mut categories: BTreeSet<CategoryId> = row
            .categories
            .iter()
            .flatten()
            .map(|c| c.trim().to_lowercase())
            .filter(|c| !c.is_empty())
            .map(|c| category_by_name[&c])
            .collect();
        if categories.is_empty() {
            categories.insert(CategoryId(0));
        }
        pois.push(Poi {
            id,
            loc: GeoPoint::new(row.lat, row.lon),
            inserted,
            total_checkins: row.checkins,
            radius_m: row.radius_m,
            categories,
            rating: row.rating.unwrap_or(mean_rating),
            rating_observed: row.rating.is_some(),
        });
    }
    pois.sort_by(|a, b| a.id.cmp(&b.id));
    let poi_by_id: HashMap<String, PoiIdx> = pois
        .iter()
        .enumerate()
        .map(|(i, p)| (p.id.clone(), PoiIdx(i as u32)))
        .collect();

    visitor_rows.sort_by(|a, b| a.0.cmp(&b.0));
    for pair in visitor_rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidArgument(format!(
                "duplicate visitor id `{}`",
                pair[0].0
            )));
        }
    }
    let mut visitors: Vec<Visitor> = visitor_rows
        .into_iter()
        .map(|(id, demographics)| Visitor {
            id,
            demographics,
            checkins: Vec::new(),
        })
        .collect();
    let visitor_by_id: HashMap<String, VisitorIdx> = visitors
        .iter()
        .enumerate()
        .map(|(i, v)| (v.id.clone(), VisitorIdx(i as u32)))
        .collect();

    let mut report = LoadReport::default();
    let mut checkins = Vec::with_capacity(checkin_rows.len());
    for (line, user, poi, ts) in checkin_rows {
        let Some(&poi) = poi_by_id.get(&poi) else {
            if config.strict {
                return Err(Error::Dangling { line, kind: "POI", id: poi });
            }
            tracing::warn!(line, poi = %poi, "skipping check-in with unknown POI");
            report.skipped_checkins += 1;
            continue;
        };
        let Some(&visitor) = visitor_by_id.get(&user) else {
            if config.strict {
                return Err(Error::Dangling { line, kind: "visitor", id: user });
            }
            tracing::warn!(line, user = %user, "skipping check-in with unknown visitor");
            report.skipped_checkins += 1;
            continue;
        };
        checkins.push(Checkin { visitor, poi, ts });
    }

    let thresholds = if config.refit_buckets {
        BucketThresholds::refit(&visitors)
    } else {
        BucketThresholds::default()
    };
    let stats = compute_stats(&pois, mean_rating);

    checkins.sort_by(|a, b| (a.poi, a.ts, a.visitor).cmp(&(b.poi, b.ts, b.visitor)));
    for v in &mut visitors {
        v.checkins.clear();
    }
    let snapshot = Snapshot {
        pois,
        visitors,
        checkins,
        category_names,
        stats,
        thresholds,
    };
    Ok((Dataset::from_snapshot(snapshot), report))
}

fn compute_stats(pois: &[Poi], mean_rating: f64) -> DatasetStats {
    let max_poi_checkins = pois.iter().map(|p| p.total_checkins).max().unwrap_or(0);
    let max_radius_m = pois.iter().map(|p| p.radius_m).fold(0.0, f64::max);
    let oldest_insertion_date = pois
        .iter()
        .map(|p| p.inserted)
        .min()
        .unwrap_or(NaiveDate::MIN);
    let category_universe = pois
        .iter()
        .flat_map(|p| p.categories.iter().copied())
        .collect();
    DatasetStats {
        max_poi_checkins,
        max_radius_m,
        oldest_insertion_date,
        mean_rating,
        city_area_m2: city_area_m2(pois.iter().map(|p| p.loc)),
        category_universe,
    }
}

/// Bounding-box area under an equirectangular projection at the mean latitude. Each side is
/// at least one metre, so any two distinct locations give a positive area.
fn city_area_m2(points: impl Iterator<Item = GeoPoint>) -> f64 {
    let pts: Vec<GeoPoint> = points.collect();
    let distinct = pts
        .iter()
        .any(|p| p.lat != pts[0].lat || p.lon != pts[0].lon);
    if !distinct {
        return 0.0;
    }
    let (mut min_lat, mut max_lat, mut min_lon, mut max_lon) =
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in &pts {
        min_lat = min_lat.min(p.lat);
        max_lat = max_lat.max(p.lat);
        min_lon = min_lon.min(p.lon);
        max_lon = max_lon.max(p.lon);
    }
    let mean_lat = pts.iter().map(|p| p.lat).sum::<f64>() / pts.len() as f64;
    let height = (max_lat - min_lat).to_radians() * EARTH_RADIUS_M;
    let width = (max_lon - min_lon).to_radians() * EARTH_RADIUS_M * mean_lat.to_radians().cos();
    height.max(1.0) * width.max(1.0)
}

impl Dataset {
    fn from_snapshot(s: Snapshot) -> Dataset {
        let Snapshot {
            pois,
            mut visitors,
            checkins,
            category_names,
            stats,
            thresholds,
        } = s;
        let mut poi_offsets = vec![0u32; pois.len() + 1];
        for c in &checkins {
            poi_offsets[c.poi.index() + 1] += 1;
        }
        for i in 0..pois.len() {
            poi_offsets[i + 1] += poi_offsets[i];
        }
        for v in &mut visitors {
            v.checkins.clear();
        }
        for (i, c) in checkins.iter().enumerate() {
            visitors[c.visitor.index()].checkins.push(CheckinIdx(i as u32));
        }
        for v in &mut visitors {
            v.checkins.sort_by_key(|&c| (checkins[c.index()].ts, c));
        }
        let poi_by_id = pois
            .iter()
            .enumerate()
            .map(|(i, p)| (p.id.clone(), PoiIdx(i as u32)))
            .collect();
        let visitor_by_id = visitors
            .iter()
            .enumerate()
            .map(|(i, v)| (v.id.clone(), VisitorIdx(i as u32)))
            .collect();
        let category_by_name = category_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), CategoryId(i as u32)))
            .collect();
        let grid = GridIndex::build(pois.iter().map(|p| p.loc), DEFAULT_GRID_CELL_M);
        Dataset {
            pois,
            visitors,
            checkins,
            poi_offsets,
            category_names,
            stats,
            thresholds,
            poi_by_id,
            visitor_by_id,
            category_by_name,
            grid,
        }
    }

    /// Loads the three JSON-lines files from disk.
    pub fn from_paths(
        pois: &Path,
        visitors: &Path,
        checkins: &Path,
        config: &LoadConfig,
    ) -> Result<(Dataset, LoadReport)> {
        let open = |p: &Path| std::fs::File::open(p).map(std::io::BufReader::new);
        load_dataset(open(pois)?, open(visitors)?, open(checkins)?, config)
    }

    /// Writes a binary snapshot. Identical datasets produce identical bytes.
    pub fn write_snapshot<W: Write>(&self, writer: W) -> Result<()> {
        let snapshot = Snapshot {
            pois: self.pois.clone(),
            visitors: self.visitors.clone(),
            checkins: self.checkins.clone(),
            category_names: self.category_names.clone(),
            stats: self.stats.clone(),
            thresholds: self.thresholds.clone(),
        };
        ciborium::into_writer(&snapshot, writer).map_err(|e| Error::Snapshot(e.to_string()))
    }

    pub fn snapshot_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_snapshot(&mut out)?;
        Ok(out)
    }

    pub fn read_snapshot<R: Read>(reader: R) -> Result<Dataset> {
        let snapshot: Snapshot =
            ciborium::from_reader(reader).map_err(|e| Error::Snapshot(e.to_string()))?;
        Ok(Dataset::from_snapshot(snapshot))
    }

    pub fn open_snapshot(path: &Path) -> Result<Dataset> {
        let file = std::fs::File::open(path)?;
        Dataset::read_snapshot(std::io::BufReader::new(file))
    }

    pub fn pois(&self) -> &[Poi] {
        &self.pois
    }

    pub fn poi(&self, idx: PoiIdx) -> &Poi {
        &self.pois[idx.index()]
    }

    pub fn poi_by_id(&self, id: &str) -> Option<PoiIdx> {
        self.poi_by_id.get(id).copied()
    }

    pub fn visitors(&self) -> &[Visitor] {
        &self.visitors
    }

    pub fn visitor(&self, idx: VisitorIdx) -> &Visitor {
        &self.visitors[idx.index()]
    }

    pub fn visitor_by_id(&self, id: &str) -> Option<VisitorIdx> {
        self.visitor_by_id.get(id).copied()
    }

    pub fn checkins(&self) -> &[Checkin] {
        &self.checkins
    }

    pub fn checkin(&self, idx: CheckinIdx) -> &Checkin {
        &self.checkins[idx.index()]
    }

    /// Check-ins at one POI, ordered by timestamp.
    pub fn checkins_at(&self, poi: PoiIdx) -> impl Iterator<Item = CheckinIdx> + '_ {
        let start = self.poi_offsets[poi.index()];
        let end = self.poi_offsets[poi.index() + 1];
        (start..end).map(CheckinIdx)
    }

    pub fn stats(&self) -> &DatasetStats {
        &self.stats
    }

    pub fn thresholds(&self) -> &BucketThresholds {
        &self.thresholds
    }

    pub fn demographic_buckets(&self, visitor: VisitorIdx) -> [DemographicBucket; DemogAttribute::COUNT] {
        self.thresholds.buckets_of(self.visitor(visitor))
    }

    pub fn category_names(&self) -> &[String] {
        &self.category_names
    }

    pub fn category_name(&self, id: CategoryId) -> &str {
        &self.category_names[id.index()]
    }

    pub fn category_by_name(&self, name: &str) -> Option<CategoryId> {
        self.category_by_name.get(&name.trim().to_lowercase()).copied()
    }

    pub(crate) fn grid(&self) -> &GridIndex {
        &self.grid
    }
}
