//! POI-set utility functions. Each maps a set of POIs to `[0, 1]`.

use std::collections::BTreeSet;
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::{CategoryId, DatasetStats, Poi};
use crate::geo::{GeoPoint, EARTH_RADIUS_M};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityKind {
    Popularity,
    Prestige,
    Recency,
    Coverage,
    Surprisingness,
    Category,
    Diversity,
    Size,
}

impl UtilityKind {
    pub const COUNT: usize = 8;
    pub const ALL: [UtilityKind; 8] = [
        UtilityKind::Popularity,
        UtilityKind::Prestige,
        UtilityKind::Recency,
        UtilityKind::Coverage,
        UtilityKind::Surprisingness,
        UtilityKind::Category,
        UtilityKind::Diversity,
        UtilityKind::Size,
    ];

    pub fn name(self) -> &'static str {
        match self {
            UtilityKind::Popularity => "popularity",
            UtilityKind::Prestige => "prestige",
            UtilityKind::Recency => "recency",
            UtilityKind::Coverage => "coverage",
            UtilityKind::Surprisingness => "surprisingness",
            UtilityKind::Category => "category",
            UtilityKind::Diversity => "diversity",
            UtilityKind::Size => "size",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for UtilityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inputs shared by the utilities beyond the POI set itself.
#[derive(Debug, Clone, Copy)]
pub struct UtilityEnv<'a> {
    pub stats: &'a DatasetStats,
    /// Categories of the bookmarked POIs.
    pub portfolio_categories: &'a BTreeSet<CategoryId>,
    /// Categories the active mindset cares about.
    pub categories_of_interest: &'a BTreeSet<CategoryId>,
    pub now: NaiveDate,
}

pub fn jaccard_similarity<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

pub fn jaccard_distance<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    1.0 - jaccard_similarity(a, b)
}

/// Union of the category sets of `pois`.
pub fn categories_of(pois: &[&Poi]) -> BTreeSet<CategoryId> {
    pois.iter().flat_map(|p| p.categories.iter().copied()).collect()
}

fn mean(pois: &[&Poi], f: impl Fn(&Poi) -> f64) -> f64 {
    pois.iter().map(|p| f(p)).sum::<f64>() / pois.len() as f64
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Evaluates one utility. The empty set scores 0 for every kind.
pub fn evaluate(kind: UtilityKind, pois: &[&Poi], env: &UtilityEnv<'_>) -> f64 {
    if pois.is_empty() {
        return 0.0;
    }
    match kind {
        UtilityKind::Popularity => ratio(
            mean(pois, |p| p.total_checkins as f64),
            env.stats.max_poi_checkins as f64,
        ),
        UtilityKind::Prestige => ratio(mean(pois, |p| p.rating), 5.0),
        UtilityKind::Recency => {
            let days = mean(pois, |p| (env.now - p.inserted).num_days() as f64);
            // Insertions after `now` count as brand new.
            1.0 / (1.0 + (days / 365.0).max(0.0))
        }
        UtilityKind::Coverage => {
            let points: Vec<GeoPoint> = pois.iter().map(|p| p.loc).collect();
            ratio(convex_hull_area(&points), env.stats.city_area_m2)
        }
        UtilityKind::Surprisingness => {
            if env.portfolio_categories.is_empty() {
                1.0
            } else {
                jaccard_distance(&categories_of(pois), env.portfolio_categories)
            }
        }
        UtilityKind::Category => jaccard_similarity(env.categories_of_interest, &categories_of(pois)),
        UtilityKind::Diversity => {
            let n = pois.len();
            if n < 2 {
                return 0.0;
            }
            let mut total = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    total += jaccard_distance(&pois[i].categories, &pois[j].categories);
                }
            }
            total / (n * (n - 1) / 2) as f64
        }
        UtilityKind::Size => ratio(mean(pois, |p| p.radius_m), env.stats.max_radius_m),
    }
}

/// All eight utilities, indexed by [`UtilityKind::index`].
pub fn evaluate_all(pois: &[&Poi], env: &UtilityEnv<'_>) -> [f64; UtilityKind::COUNT] {
    UtilityKind::ALL.map(|k| evaluate(k, pois, env))
}

/// Area in square metres of the convex hull of `points`, projected equirectangularly at
/// their mean latitude.
pub fn convex_hull_area(points: &[GeoPoint]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let mean_lat = points.iter().map(|p| p.lat).sum::<f64>() / points.len() as f64;
    let kx = EARTH_RADIUS_M * mean_lat.to_radians().cos();
    let mut xy: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.lon.to_radians() * kx, p.lat.to_radians() * EARTH_RADIUS_M))
        .collect();
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    xy.dedup();
    if xy.len() < 3 {
        return 0.0;
    }

    // Andrew's monotone chain.
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(2 * xy.len());
    for &p in &xy {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in xy.iter().rev().skip(1) {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..hull.len())
        .map(|i| {
            let (a, b) = (hull[i], hull[(i + 1) % hull.len()]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum();
    twice.abs() / 2.0
}
