//! A seeded synthetic city in the check-in file formats.
//!
//! POIs cluster into neighborhoods around a city centre. Visitors belong to one of a few
//! personas, each with preferred categories and typical hours. Each neighborhood hosts a few
//! tribes: visitors of one persona who share a demographic profile and a set of favourite
//! venues. Visitors go on short outings of 2-5 check-ins, mostly in their tribe's neighborhood
//! and mostly at favourite venues, so visitors who look alike also check in alike.
//!
//! Recorded POI totals also count check-ins by people outside the generated sample.
//!
//! The same config and seed always produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate, NaiveDateTime, NaiveTime};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{LogNormal, Normal};
use serde_json::json;

use crate::dataset::{load_dataset, Dataset, DemogAttribute, LoadConfig, BucketThresholds};
use crate::error::Result;
use crate::geo::GeoPoint;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub pois: usize,
    pub visitors: usize,
    /// Approximate total; outings are never cut short.
    pub checkins: usize,
    pub neighborhoods: usize,
    pub center: GeoPoint,
    /// Side of the square the neighborhood centres are drawn from.
    pub extent_m: f64,
    /// Spread of POIs around their neighborhood centre.
    pub neighborhood_sigma_m: f64,
    pub tribes_per_neighborhood: usize,
    /// Check-ins fall within this many days from the start of `year`.
    pub active_days: i64,
    pub year: i32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            pois: 5_000,
            visitors: 2_000,
            checkins: 50_000,
            neighborhoods: 25,
            center: GeoPoint::new(48.8566, 2.3522),
            extent_m: 5_000.0,
            neighborhood_sigma_m: 220.0,
            tribes_per_neighborhood: 2,
            active_days: 90,
            year: 2012,
        }
    }
}

impl SynthConfig {
    /// A few hundred check-ins; for fast tests.
    pub fn small(seed: u64) -> Self {
        SynthConfig {
            seed,
            pois: 300,
            visitors: 150,
            checkins: 3_000,
            neighborhoods: 4,
            extent_m: 1_500.0,
            ..SynthConfig::default()
        }
    }
}

/// Global frequency of each category among POIs.
const CATEGORIES: &[(&str, f64)] = &[
    ("restaurant", 14.0),
    ("coffee shop", 10.0),
    ("clothing store", 8.0),
    ("bar", 8.0),
    ("food", 6.0),
    ("park", 5.0),
    ("hotel", 5.0),
    ("office", 5.0),
    ("gym", 4.0),
    ("tea room", 3.0),
    ("museum", 3.0),
    ("gallery", 3.0),
    ("nightclub", 3.0),
    ("supermarket", 3.0),
    ("pharmacy", 3.0),
    ("sports field", 2.0),
    ("library", 2.0),
    ("bookstore", 2.0),
    ("movie theater", 2.0),
    ("monument", 2.0),
    ("tennis court", 1.0),
];

struct Persona {
    affinity: &'static [(&'static str, f64)],
    /// Typical buckets of items, photos and friends (0 = very few .. 3 = many).
    buckets: [usize; 3],
    /// Inclusive hour ranges with weights for the start of an outing.
    hours: &'static [(u32, u32, f64)],
}

const PERSONAS: &[Persona] = &[
    Persona {
        affinity: &[("restaurant", 5.0), ("food", 4.0), ("coffee shop", 1.5), ("bar", 1.0)],
        buckets: [3, 3, 2],
        hours: &[(11, 13, 3.0), (18, 20, 3.0)],
    },
    Persona {
        affinity: &[("gym", 5.0), ("park", 4.0), ("sports field", 4.0), ("tennis court", 3.0)],
        buckets: [1, 0, 3],
        hours: &[(6, 8, 3.0), (17, 19, 2.0)],
    },
    Persona {
        affinity: &[
            ("museum", 5.0),
            ("gallery", 5.0),
            ("library", 3.0),
            ("bookstore", 3.0),
            ("monument", 3.0),
            ("movie theater", 2.0),
        ],
        buckets: [2, 3, 1],
        hours: &[(10, 16, 1.0)],
    },
    Persona {
        affinity: &[("bar", 5.0), ("nightclub", 5.0), ("restaurant", 1.5), ("movie theater", 1.0)],
        buckets: [0, 2, 3],
        hours: &[(20, 23, 2.0), (0, 1, 1.0)],
    },
    Persona {
        affinity: &[("coffee shop", 5.0), ("tea room", 4.0), ("park", 3.0), ("bookstore", 1.5)],
        buckets: [1, 1, 0],
        hours: &[(8, 16, 1.0)],
    },
    Persona {
        affinity: &[
            ("clothing store", 5.0),
            ("supermarket", 3.0),
            ("pharmacy", 2.0),
            ("coffee shop", 1.0),
        ],
        buckets: [3, 1, 2],
        hours: &[(10, 18, 1.0)],
    },
];

/// Weight of POIs outside a persona's preferred categories.
const OFF_TASTE: f64 = 0.01;
/// Probability that a visitor's typical bucket is used for an attribute.
const TYPICAL_BUCKET: f64 = 0.85;
const HOME_OUTING: f64 = 0.75;
const TRIBE_FAVOURITES: usize = 8;
const PERSONAL_FAVOURITES: usize = 3;
/// How often an outing stop is one of the visitor's favourites.
const ROUTINE_SHARE: f64 = 0.8;
/// Median of the check-ins a venue received from people outside the sample.
const UNOBSERVED_MEDIAN: f64 = 20.0;

/// Generated check-in files plus the persona and tribe of each visitor (in visitor id order).
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCity {
    pub pois: String,
    pub visitors: String,
    pub checkins: String,
    pub personas: Vec<usize>,
    pub tribes: Vec<usize>,
}

struct Tribe {
    hood: usize,
    persona: usize,
    buckets: [usize; 3],
    favourites: Vec<usize>,
}

/// Up to `n` distinct values from `draw`, giving up on a slot after a few repeats.
fn distinct_draws(
    rng: &mut ChaCha8Rng,
    n: usize,
    mut draw: impl FnMut(&mut ChaCha8Rng) -> usize,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..8 {
            let x = draw(rng);
            if !out.contains(&x) {
                out.push(x);
                break;
            }
        }
    }
    out
}

struct PoiDraft {
    loc: GeoPoint,
    categories: Vec<&'static str>,
    /// How much each persona likes this venue beyond its categories.
    appeal: Vec<f64>,
    neighborhood: usize,
}

fn offset(center: GeoPoint, dx_m: f64, dy_m: f64) -> GeoPoint {
    let lat = center.lat + (dy_m / crate::geo::EARTH_RADIUS_M).to_degrees();
    let lon = center.lon
        + (dx_m / (crate::geo::EARTH_RADIUS_M * center.lat.to_radians().cos())).to_degrees();
    GeoPoint::new(lat, lon)
}

fn raw_value(rng: &mut ChaCha8Rng, thresholds: &[f64; 3], bucket: usize) -> u32 {
    let t = thresholds.map(|x| x as u32);
    let (lo, hi) = match bucket {
        0 => (0, t[0]),
        1 => (t[0] + 1, t[1]),
        2 => (t[1] + 1, t[2]),
        _ => (t[2] + 1, 3 * t[2] + 5),
    };
    rng.gen_range(lo..=hi)
}

fn format_ts(ts: NaiveDateTime) -> String {
    ts.format("%Y-%m-%dT%H:%M:%S").to_string()
}

impl SynthCity {
    pub fn generate(cfg: &SynthConfig) -> SynthCity {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let half = cfg.extent_m / 2.0;
        let hoods: Vec<GeoPoint> = (0..cfg.neighborhoods.max(1))
            .map(|_| {
                offset(
                    cfg.center,
                    rng.gen_range(-half..=half),
                    rng.gen_range(-half..=half),
                )
            })
            .collect();

        let spread = Normal::new(0.0, cfg.neighborhood_sigma_m).expect("finite sigma");
        let appeal = LogNormal::new(0.0, 1.0).expect("valid lognormal");
        let category_pick =
            WeightedIndex::new(CATEGORIES.iter().map(|c| c.1)).expect("positive weights");
        let mut pois: Vec<PoiDraft> = (0..cfg.pois)
            .map(|_| {
                let neighborhood = rng.gen_range(0..hoods.len());
                let loc = offset(hoods[neighborhood], spread.sample(&mut rng), spread.sample(&mut rng));
                let mut categories = vec![CATEGORIES[category_pick.sample(&mut rng)].0];
                if rng.gen_bool(0.15) {
                    let second = CATEGORIES[category_pick.sample(&mut rng)].0;
                    if second != categories[0] {
                        categories.push(second);
                    }
                }
                PoiDraft {
                    loc,
                    categories,
                    appeal: (0..PERSONAS.len()).map(|_| appeal.sample(&mut rng)).collect(),
                    neighborhood,
                }
            })
            .collect();
        if pois.is_empty() {
            pois.push(PoiDraft {
                loc: cfg.center,
                categories: vec![CATEGORIES[0].0],
                appeal: vec![1.0; PERSONAS.len()],
                neighborhood: 0,
            });
        }

        // Per (neighborhood, persona): the neighborhood's POIs and how much the persona likes them.
        let mut by_hood: Vec<Vec<usize>> = vec![Vec::new(); hoods.len()];
        for (i, p) in pois.iter().enumerate() {
            by_hood[p.neighborhood].push(i);
        }
        let taste = |persona_idx: usize, p: &PoiDraft| {
            let persona = &PERSONAS[persona_idx];
            let a = p
                .categories
                .iter()
                .filter_map(|c| persona.affinity.iter().find(|(n, _)| n == c).map(|x| x.1))
                .fold(OFF_TASTE, f64::max);
            a * p.appeal[persona_idx]
        };
        let choosers: Vec<Vec<Option<WeightedIndex<f64>>>> = by_hood
            .iter()
            .map(|members| {
                (0..PERSONAS.len())
                    .map(|persona| {
                        WeightedIndex::new(members.iter().map(|&i| taste(persona, &pois[i]))).ok()
                    })
                    .collect()
            })
            .collect();
        let hour_pickers: Vec<(Vec<u32>, WeightedIndex<f64>)> = PERSONAS
            .iter()
            .map(|p| {
                let mut hours = Vec::new();
                let mut weights = Vec::new();
                for &(a, b, w) in p.hours {
                    for h in a..=b {
                        hours.push(h);
                        weights.push(w);
                    }
                }
                (hours, WeightedIndex::new(weights).expect("positive weights"))
            })
            .collect();

        // Local tribes: a persona, a demographic signature and shared favourite venues.
        let mut tribes: Vec<Tribe> = Vec::new();
        for (hood, members) in by_hood.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let mut used: Vec<[usize; 3]> = Vec::new();
            for _ in 0..cfg.tribes_per_neighborhood.max(1) {
                let persona = rng.gen_range(0..PERSONAS.len());
                // The persona's typical profile with some slots redrawn, distinct per neighborhood.
                let typical = PERSONAS[persona].buckets;
                let mut buckets = typical;
                for _ in 0..16 {
                    buckets = typical.map(|b| if rng.gen_bool(0.5) { rng.gen_range(0..4) } else { b });
                    if !used.contains(&buckets) {
                        break;
                    }
                }
                used.push(buckets);
                let Some(chooser) = &choosers[hood][persona] else {
                    continue;
                };
                let favourites = distinct_draws(&mut rng, TRIBE_FAVOURITES, |r| {
                    members[chooser.sample(r)]
                });
                tribes.push(Tribe {
                    hood,
                    persona,
                    buckets,
                    favourites,
                });
            }
        }

        let year_start = NaiveDate::from_ymd_opt(cfg.year, 1, 1).expect("valid year");
        let activity = LogNormal::new(0.0, 0.8).expect("valid lognormal");
        let raw_activity: Vec<f64> = (0..cfg.visitors).map(|_| activity.sample(&mut rng)).collect();
        let total_activity: f64 = raw_activity.iter().sum::<f64>().max(f64::MIN_POSITIVE);

        let thresholds = BucketThresholds::default();
        let mut poi_counts = vec![0u64; pois.len()];
        let mut visitor_rows = String::new();
        let mut checkin_rows = String::new();
        let mut personas = Vec::with_capacity(cfg.visitors);
        let mut tribe_of = Vec::with_capacity(cfg.visitors);
        for (v, act) in raw_activity.iter().enumerate() {
            let tribe_idx = rng.gen_range(0..tribes.len());
            let tribe = &tribes[tribe_idx];
            let persona_idx = tribe.persona;
            personas.push(persona_idx);
            tribe_of.push(tribe_idx);
            let target =
                ((act / total_activity * cfg.checkins as f64).round() as usize).max(2);

            let mut routines: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            let mut home_routine = tribe.favourites.clone();
            if let Some(chooser) = &choosers[tribe.hood][persona_idx] {
                let own = distinct_draws(&mut rng, PERSONAL_FAVOURITES, |r| {
                    by_hood[tribe.hood][chooser.sample(r)]
                });
                home_routine.extend(own.into_iter().filter(|p| !tribe.favourites.contains(p)));
            }
            routines.insert(tribe.hood, home_routine);

            let mut visited = Vec::new();
            let mut outings: Vec<(NaiveDateTime, usize)> = Vec::new();
            while visited.len() < target {
                let hood = if rng.gen_bool(HOME_OUTING) {
                    tribe.hood
                } else {
                    rng.gen_range(0..hoods.len())
                };
                let Some(chooser) = &choosers[hood][persona_idx] else {
                    continue;
                };
                let routine = routines.entry(hood).or_insert_with(|| {
                    distinct_draws(&mut rng, PERSONAL_FAVOURITES, |r| by_hood[hood][chooser.sample(r)])
                });
                let (hours, pick) = &hour_pickers[persona_idx];
                let day = year_start + Duration::days(rng.gen_range(0..cfg.active_days.max(1)));
                let start = NaiveTime::from_hms_opt(hours[pick.sample(&mut rng)], rng.gen_range(0..60), 0)
                    .expect("valid time");
                let mut ts = day.and_time(start);
                let len = rng.gen_range(2..=5).min(by_hood[hood].len());
                let draw = |rng: &mut ChaCha8Rng| {
                    if rng.gen_bool(ROUTINE_SHARE) {
                        routine[rng.gen_range(0..routine.len())]
                    } else {
                        by_hood[hood][chooser.sample(rng)]
                    }
                };
                let stops = distinct_draws(&mut rng, len, draw);
                for poi in stops {
                    outings.push((ts, poi));
                    visited.push(poi);
                    ts += Duration::minutes(rng.gen_range(45..=150));
                }
            }
            outings.sort();
            let user = format!("u{v:05}");
            for (ts, poi) in &outings {
                poi_counts[*poi] += 1;
                let row = json!({"user": user, "poi": format!("p{poi:05}"), "ts": format_ts(*ts)});
                checkin_rows.push_str(&row.to_string());
                checkin_rows.push('\n');
            }
            visited.sort_unstable();
            visited.dedup();

            let mut demogs = serde_json::Map::new();
            for (slot, attribute) in [DemogAttribute::Items, DemogAttribute::Photos, DemogAttribute::Friends]
                .into_iter()
                .enumerate()
            {
                let bucket = if rng.gen_bool(TYPICAL_BUCKET) {
                    tribe.buckets[slot]
                } else {
                    rng.gen_range(0..4)
                };
                let value = raw_value(&mut rng, &thresholds.0[attribute.index()], bucket);
                demogs.insert(attribute.name().to_string(), value.into());
            }
            demogs.insert(DemogAttribute::Checkins.name().to_string(), outings.len().into());
            demogs.insert(DemogAttribute::Places.name().to_string(), visited.len().into());
            let row = json!({"id": user, "demogs": demogs});
            visitor_rows.push_str(&row.to_string());
            visitor_rows.push('\n');
        }

        let radius = LogNormal::new(30f64.ln(), 0.7).expect("valid lognormal");
        let first_insert = NaiveDate::from_ymd_opt(cfg.year - 3, 1, 1).expect("valid year");
        let fame = LogNormal::new(UNOBSERVED_MEDIAN.ln(), 1.2).expect("valid lognormal");
        let mut poi_rows = String::new();
        for (i, p) in pois.iter().enumerate() {
            let unobserved = fame.sample(&mut rng).round() as u64;
            let inserted = first_insert + Duration::days(rng.gen_range(0..3 * 365));
            let radius_m = radius.sample(&mut rng).clamp(5.0, 500.0).round();
            let mut row = json!({
                "id": format!("p{i:05}"),
                "lat": (p.loc.lat * 1e6).round() / 1e6,
                "lon": (p.loc.lon * 1e6).round() / 1e6,
                "inserted": inserted.format("%Y-%m-%d").to_string(),
                "checkins": poi_counts[i] + unobserved,
                "radius_m": radius_m,
                "categories": p.categories,
            });
            if rng.gen_bool(0.9) {
                let rating = (rng.gen_range(1.0..=5.0f64) * 10.0).round() / 10.0;
                row["rating"] = rating.into();
            }
            poi_rows.push_str(&row.to_string());
            poi_rows.push('\n');
        }

        SynthCity {
            pois: poi_rows,
            visitors: visitor_rows,
            checkins: checkin_rows,
            personas,
            tribes: tribe_of,
        }
    }

    pub fn load(&self, config: &LoadConfig) -> Result<Dataset> {
        let (ds, _) = load_dataset(
            self.pois.as_bytes(),
            self.visitors.as_bytes(),
            self.checkins.as_bytes(),
            config,
        )?;
        Ok(ds)
    }

    /// Writes `pois.jsonl`, `visitors.jsonl` and `checkins.jsonl` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("pois.jsonl"), &self.pois)?;
        fs::write(dir.join("visitors.jsonl"), &self.visitors)?;
        fs::write(dir.join("checkins.jsonl"), &self.checkins)?;
        Ok(())
    }
}

/// Generates and loads a synthetic city with default load settings.
pub fn synthetic_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    SynthCity::generate(cfg).load(&LoadConfig::default())
}
