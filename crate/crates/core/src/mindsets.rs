//! Mindsets: labelled intents expressed as prior-weighted blends of the POI-set utilities.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dataset::{CategoryId, Dataset, Poi};
use crate::error::{Error, Result};
use crate::utilities::{categories_of, evaluate_all, UtilityEnv, UtilityKind};

/// One value per utility kind. Serializes as a map keyed by utility name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityVector(pub [f64; UtilityKind::COUNT]);

impl UtilityVector {
    pub const ONES: UtilityVector = UtilityVector([1.0; UtilityKind::COUNT]);

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UtilityKind, f64)> + '_ {
        UtilityKind::ALL.iter().map(move |&k| (k, self.0[k.index()]))
    }
}

impl Default for UtilityVector {
    fn default() -> Self {
        UtilityVector::ONES
    }
}

impl Index<UtilityKind> for UtilityVector {
    type Output = f64;
    fn index(&self, k: UtilityKind) -> &f64 {
        &self.0[k.index()]
    }
}

impl IndexMut<UtilityKind> for UtilityVector {
    fn index_mut(&mut self, k: UtilityKind) -> &mut f64 {
        &mut self.0[k.index()]
    }
}

impl Serialize for UtilityVector {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(UtilityKind::COUNT))?;
        for (k, v) in self.iter() {
            map.serialize_entry(k.name(), &v)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for UtilityVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        let mut out = UtilityVector([0.0; UtilityKind::COUNT]);
        for (name, value) in raw {
            let kind = UtilityKind::ALL
                .into_iter()
                .find(|k| k.name() == name)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown utility `{name}`")))?;
            if !(value >= 0.0) {
                return Err(serde::de::Error::custom(format!("`{name}` must be non-negative")));
            }
            out[kind] = value;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mindset {
    pub label: String,
    pub priors: UtilityVector,
    /// Category labels, resolved against the dataset through [`CategoryAliases`].
    #[serde(default)]
    pub categories: BTreeSet<String>,
}

/// A built-in mindset with its short key (`m1`..`m7`) and a one-line gloss for the catalog.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CatalogEntry {
    pub key: &'static str,
    pub description: &'static str,
    #[serde(flatten)]
    pub mindset: Mindset,
}

type Row = (&'static str, &'static str, &'static str, [f64; 8], &'static [&'static str]);

// Columns: popularity, prestige, recency, coverage, surprisingness, category, diversity, size.
const BUILTINS: [Row; 7] = [
    (
        "m1",
        "I'm new here",
        "well-known attractions for a first visit",
        [0.25, 0.25, 0.10, 0.15, 0.00, 0.00, 0.25, 0.00],
        &[],
    ),
    (
        "m2",
        "surprise me",
        "uncommon places off the beaten path",
        [0.25, 0.20, 0.00, 0.00, 0.30, 0.00, 0.15, 0.10],
        &[],
    ),
    (
        "m3",
        "let's workout",
        "places to exercise and move",
        [0.25, 0.25, 0.00, 0.10, 0.00, 0.40, 0.00, 0.00],
        &["sport fields", "park", "health and fitness", "bowling", "tennis court", "ice skating", "gym"],
    ),
    (
        "m4",
        "me time",
        "relaxing solo activities",
        [0.10, 0.10, 0.00, 0.10, 0.00, 0.40, 0.00, 0.30],
        &["outdoor", "food", "tea room", "bar", "coffee shop"],
    ),
    (
        "m5",
        "I'm hungry",
        "food close by",
        [0.05, 0.20, 0.10, 0.15, 0.00, 0.40, 0.05, 0.05],
        &["food", "restaurant"],
    ),
    (
        "m6",
        "let's learn",
        "museums, libraries and cultural sites",
        [0.20, 0.20, 0.00, 0.10, 0.00, 0.40, 0.10, 0.00],
        &[
            "museum",
            "art",
            "gallery",
            "library",
            "sculpture",
            "bookstore",
            "movie theater",
            "historical landmark",
            "monument",
        ],
    ),
    (
        "m7",
        "hidden gems",
        "well-rated local spots that are not crowded",
        [0.30, 0.30, 0.15, 0.00, 0.00, 0.00, 0.00, 0.25],
        &[],
    ),
];

/// The seven built-in mindsets, in catalog order.
pub fn builtin_mindsets() -> Vec<Mindset> {
    catalog().into_iter().map(|e| e.mindset).collect()
}

pub fn catalog() -> Vec<CatalogEntry> {
    BUILTINS
        .iter()
        .map(|&(key, label, description, priors, cats)| {
            let priors = UtilityVector(priors);
            debug_assert!((priors.sum() - 1.0).abs() < 1e-9, "{label} priors must sum to 1");
            CatalogEntry {
                key,
                description,
                mindset: Mindset {
                    label: label.to_string(),
                    priors,
                    categories: cats.iter().map(|c| c.to_string()).collect(),
                },
            }
        })
        .collect()
}

/// Looks up a built-in by label or key, ignoring case.
pub fn builtin_by_label(label: &str) -> Option<Mindset> {
    let needle = label.trim().to_lowercase();
    catalog()
        .into_iter()
        .find(|e| e.key == needle || e.mindset.label.to_lowercase() == needle)
        .map(|e| e.mindset)
}

/// Maps mindset category labels to dataset category names.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CategoryAliases(pub BTreeMap<String, Vec<String>>);

impl CategoryAliases {
    /// The alias table shipped with the crate (Gowalla naming).
    pub fn bundled() -> Self {
        serde_json::from_str(include_str!("../data/category_aliases.json"))
            .expect("bundled alias table is valid JSON")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(e.to_string()))
    }

    /// Dataset categories matching any label, either by name or through an alias.
    pub fn resolve<'a>(
        &self,
        labels: impl IntoIterator<Item = &'a String>,
        dataset: &Dataset,
    ) -> BTreeSet<CategoryId> {
        let mut out = BTreeSet::new();
        for label in labels {
            let key = label.trim().to_lowercase();
            out.extend(dataset.category_by_name(&key));
            for alias in self.0.get(&key).into_iter().flatten() {
                out.extend(dataset.category_by_name(alias));
            }
        }
        out
    }
}

/// Mindset function: weighted mean of the utilities with weights `w_i * b_i`.
/// `env.categories_of_interest` must hold the resolved categories of `m`.
pub fn score(m: &Mindset, pois: &[&Poi], w: &UtilityVector, env: &UtilityEnv<'_>) -> f64 {
    score_values(&m.priors, w, &evaluate_all(pois, env))
}

/// [`score`] over precomputed utility values.
pub fn score_values(priors: &UtilityVector, w: &UtilityVector, f: &[f64; UtilityKind::COUNT]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..UtilityKind::COUNT {
        let c = w.0[i] * priors.0[i];
        num += c * f[i];
        den += c;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// User-specific weights from the bookmarked POIs: each weight is the utility of the
/// portfolio itself, or 1 for an empty portfolio. `env.portfolio_categories` is the portfolio's
/// own category set, so the surprisingness weight of a non-empty portfolio is always 0.
pub fn update_weights(portfolio: &[&Poi], env: &UtilityEnv<'_>) -> UtilityVector {
    if portfolio.is_empty() {
        return UtilityVector::ONES;
    }
    UtilityVector(evaluate_all(portfolio, env))
}

/// Builds a mindset whose priors are the utilities of `pois`, renormalized to sum to 1.
pub fn create_from_pois(
    label: &str,
    pois: &[&Poi],
    env: &UtilityEnv<'_>,
    dataset: &Dataset,
) -> Result<Mindset> {
    if pois.is_empty() {
        return Err(Error::EmptyPoiSet);
    }
    let cats = categories_of(pois);
    let env = UtilityEnv {
        categories_of_interest: &cats,
        ..*env
    };
    let raw = evaluate_all(pois, &env);
    let total: f64 = raw.iter().sum();
    let priors = if total > 0.0 {
        UtilityVector(raw.map(|v| v / total))
    } else {
        UtilityVector([1.0 / UtilityKind::COUNT as f64; UtilityKind::COUNT])
    };
    Ok(Mindset {
        label: label.to_string(),
        priors,
        categories: cats
            .iter()
            .map(|&c| dataset.category_name(c).to_string())
            .collect(),
    })
}

/// Averages the priors of several mindsets and unions their categories.
pub fn combine(label: &str, mindsets: &[Mindset]) -> Result<Mindset> {
    if mindsets.len() < 2 {
        return Err(Error::TooFewMindsets(mindsets.len()));
    }
    let mut priors = UtilityVector([0.0; UtilityKind::COUNT]);
    for m in mindsets {
        for i in 0..UtilityKind::COUNT {
            priors.0[i] += m.priors.0[i];
        }
    }
    for v in &mut priors.0 {
        *v /= mindsets.len() as f64;
    }
    Ok(Mindset {
        label: label.to_string(),
        priors,
        categories: mindsets.iter().flat_map(|m| m.categories.iter().cloned()).collect(),
    })
}
