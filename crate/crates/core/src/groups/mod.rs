//! Look-alike visitor groups.
//!
//! Every visitor with a nearby, time-matched check-in becomes a transaction of integer items:
//! demographic buckets, visited POIs, their categories, and categories crossed with the hourly
//! and weekly bucket of the visit. Groups are the closed frequent itemsets over these
//! transactions; members are the visitors whose transaction contains the itemset.

mod describe;
pub mod miner;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

pub use describe::{describe, GroupDescription};

use crate::dataset::{
    time_category, Bucket, CategoryId, CheckinIdx, Dataset, DemogAttribute, DemographicBucket,
    Hourly, PoiIdx, VisitorIdx, Weekly,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemPayload {
    Demographic(DemographicBucket),
    Poi { poi: PoiIdx },
    Category { category: CategoryId },
    CategoryHourly { category: CategoryId, hourly: Hourly },
    CategoryWeekly { category: CategoryId, weekly: Weekly },
}

/// Dense, dataset-scoped bijection between item payloads and ids. Ids are laid out in blocks:
/// 20 demographic buckets, then POIs, categories, category x hourly, category x weekly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ItemCodec {
    n_pois: u32,
    n_categories: u32,
}

const N_DEMOG: u32 = (DemogAttribute::COUNT * 4) as u32;

impl ItemCodec {
    pub fn new(n_pois: usize, n_categories: usize) -> Self {
        ItemCodec {
            n_pois: n_pois as u32,
            n_categories: n_categories as u32,
        }
    }

    pub fn for_dataset(dataset: &Dataset) -> Self {
        ItemCodec::new(dataset.pois().len(), dataset.category_names().len())
    }

    pub fn len(&self) -> u32 {
        N_DEMOG + self.n_pois + self.n_categories * 7
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn encode(&self, payload: ItemPayload) -> ItemId {
        let (poi0, cat0) = (N_DEMOG, N_DEMOG + self.n_pois);
        let hourly0 = cat0 + self.n_categories;
        let weekly0 = hourly0 + self.n_categories * 4;
        ItemId(match payload {
            ItemPayload::Demographic(d) => (d.attribute.index() * 4 + d.bucket.index()) as u32,
            ItemPayload::Poi { poi } => poi0 + poi.0,
            ItemPayload::Category { category } => cat0 + category.0,
            ItemPayload::CategoryHourly { category, hourly } => {
                hourly0 + category.0 * 4 + hourly.index() as u32
            }
            ItemPayload::CategoryWeekly { category, weekly } => {
                weekly0 + category.0 * 2 + weekly.index() as u32
            }
        })
    }

    pub fn decode(&self, id: ItemId) -> Option<ItemPayload> {
        let mut x = id.0;
        if x < N_DEMOG {
            return Some(ItemPayload::Demographic(DemographicBucket {
                attribute: DemogAttribute::ALL[(x / 4) as usize],
                bucket: Bucket::ALL[(x % 4) as usize],
            }));
        }
        x -= N_DEMOG;
        if x < self.n_pois {
            return Some(ItemPayload::Poi { poi: PoiIdx(x) });
        }
        x -= self.n_pois;
        if x < self.n_categories {
            return Some(ItemPayload::Category { category: CategoryId(x) });
        }
        x -= self.n_categories;
        if x < self.n_categories * 4 {
            return Some(ItemPayload::CategoryHourly {
                category: CategoryId(x / 4),
                hourly: Hourly::ALL[(x % 4) as usize],
            });
        }
        x -= self.n_categories * 4;
        if x < self.n_categories * 2 {
            return Some(ItemPayload::CategoryWeekly {
                category: CategoryId(x / 2),
                weekly: Weekly::ALL[(x % 2) as usize],
            });
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub visitor: VisitorIdx,
    /// Ascending, without duplicates.
    pub items: Vec<ItemId>,
}

/// One transaction per distinct visitor in `checkins`, ordered by visitor.
pub fn build_transactions(
    dataset: &Dataset,
    codec: &ItemCodec,
    checkins: &[CheckinIdx],
) -> Vec<Transaction> {
    let mut by_visitor: BTreeMap<VisitorIdx, BTreeSet<ItemId>> = BTreeMap::new();
    for &c in checkins {
        let checkin = dataset.checkin(c);
        let items = by_visitor.entry(checkin.visitor).or_insert_with(|| {
            dataset
                .demographic_buckets(checkin.visitor)
                .into_iter()
                .map(|d| codec.encode(ItemPayload::Demographic(d)))
                .collect()
        });
        let time = time_category(checkin.ts);
        items.insert(codec.encode(ItemPayload::Poi { poi: checkin.poi }));
        for &category in &dataset.poi(checkin.poi).categories {
            items.insert(codec.encode(ItemPayload::Category { category }));
            items.insert(codec.encode(ItemPayload::CategoryHourly {
                category,
                hourly: time.hourly,
            }));
            items.insert(codec.encode(ItemPayload::CategoryWeekly {
                category,
                weekly: time.weekly,
            }));
        }
    }
    by_visitor
        .into_iter()
        .map(|(visitor, items)| Transaction {
            visitor,
            items: items.into_iter().collect(),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeItem {
    Hourly { category: CategoryId, hourly: Hourly },
    Weekly { category: CategoryId, weekly: Weekly },
}

impl TimeItem {
    pub fn category(&self) -> CategoryId {
        match *self {
            TimeItem::Hourly { category, .. } | TimeItem::Weekly { category, .. } => category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub itemset: Vec<ItemId>,
    pub members: Vec<VisitorIdx>,
    pub support: usize,
    pub demog_items: Vec<DemographicBucket>,
    pub poi_items: Vec<PoiIdx>,
    pub category_items: Vec<CategoryId>,
    pub time_items: Vec<TimeItem>,
    /// Filled by [`top_pois`].
    pub display_pois: Vec<PoiIdx>,
}

impl Group {
    pub fn from_itemset(codec: &ItemCodec, itemset: Vec<ItemId>, members: Vec<VisitorIdx>) -> Self {
        let mut g = Group {
            support: members.len(),
            itemset,
            members,
            demog_items: Vec::new(),
            poi_items: Vec::new(),
            category_items: Vec::new(),
            time_items: Vec::new(),
            display_pois: Vec::new(),
        };
        for &id in &g.itemset {
            match codec.decode(id) {
                Some(ItemPayload::Demographic(d)) => g.demog_items.push(d),
                Some(ItemPayload::Poi { poi }) => g.poi_items.push(poi),
                Some(ItemPayload::Category { category }) => g.category_items.push(category),
                Some(ItemPayload::CategoryHourly { category, hourly }) => {
                    g.time_items.push(TimeItem::Hourly { category, hourly })
                }
                Some(ItemPayload::CategoryWeekly { category, weekly }) => {
                    g.time_items.push(TimeItem::Weekly { category, weekly })
                }
                None => {}
            }
        }
        g
    }

    pub fn payloads<'a>(&'a self, codec: &'a ItemCodec) -> impl Iterator<Item = ItemPayload> + 'a {
        self.itemset.iter().filter_map(|&i| codec.decode(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningParams {
    pub min_support: usize,
    pub max_itemset_len: Option<usize>,
    /// Refuse to mine more transactions than this.
    pub max_transactions: usize,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            min_support: 2,
            max_itemset_len: None,
            max_transactions: 50_000,
        }
    }
}

/// Closed frequent itemsets as groups, ordered by support (descending) then itemset.
pub fn mine_groups(
    codec: &ItemCodec,
    transactions: &[Transaction],
    params: &MiningParams,
) -> Result<Vec<Group>> {
    if params.min_support < 2 {
        return Err(Error::InvalidArgument(format!(
            "min_support must be at least 2, got {}",
            params.min_support
        )));
    }
    if transactions.len() > params.max_transactions {
        return Err(Error::TooManyTransactions {
            count: transactions.len(),
            cap: params.max_transactions,
        });
    }
    let raw: Vec<Vec<u32>> = transactions
        .iter()
        .map(|t| t.items.iter().map(|i| i.0).collect())
        .collect();
    let mut groups: Vec<Group> = miner::mine_closed(&raw, params.min_support, params.max_itemset_len)
        .into_iter()
        .map(|c| {
            let members = c.tids.iter().map(|&t| transactions[t as usize].visitor).collect();
            Group::from_itemset(codec, c.items.into_iter().map(ItemId).collect(), members)
        })
        .collect();
    groups.sort_by(|a, b| b.support.cmp(&a.support).then_with(|| a.itemset.cmp(&b.itemset)));
    Ok(groups)
}

/// Share of the portfolio found among the group's POI items; 1 for an empty portfolio.
pub fn relevance(group: &Group, portfolio: &[PoiIdx]) -> f64 {
    if portfolio.is_empty() {
        return 1.0;
    }
    let hits = portfolio
        .iter()
        .filter(|p| group.poi_items.binary_search(p).is_ok())
        .count();
    hits as f64 / portfolio.len() as f64
}

/// Distinct nearby POIs per visitor, taken from the time-matched check-ins of one iteration.
#[derive(Debug, Clone, Default)]
pub struct NearbyVisits {
    by_visitor: HashMap<VisitorIdx, Vec<PoiIdx>>,
}

impl NearbyVisits {
    pub fn from_checkins(dataset: &Dataset, checkins: &[CheckinIdx]) -> Self {
        let mut by_visitor: HashMap<VisitorIdx, Vec<PoiIdx>> = HashMap::new();
        for &c in checkins {
            let c = dataset.checkin(c);
            by_visitor.entry(c.visitor).or_default().push(c.poi);
        }
        for pois in by_visitor.values_mut() {
            pois.sort_unstable();
            pois.dedup();
        }
        NearbyVisits { by_visitor }
    }

    pub fn of(&self, visitor: VisitorIdx) -> &[PoiIdx] {
        self.by_visitor.get(&visitor).map_or(&[], Vec::as_slice)
    }
}

/// The `k` nearby POIs visited by the most members, ties broken by total check-ins (descending)
/// and then POI id.
pub fn top_pois(dataset: &Dataset, group: &Group, k: usize, visits: &NearbyVisits) -> Vec<PoiIdx> {
    top_pois_excluding(dataset, group, k, visits, &[])
}

/// [`top_pois`] ignoring the POIs in `exclude`.
pub fn top_pois_excluding(
    dataset: &Dataset,
    group: &Group,
    k: usize,
    visits: &NearbyVisits,
    exclude: &[PoiIdx],
) -> Vec<PoiIdx> {
    ranked_pois(dataset, group, visits)
        .into_iter()
        .filter(|p| !exclude.contains(p))
        .take(k)
        .collect()
}

/// Every nearby POI visited by a member, in [`top_pois`] order.
pub fn ranked_pois(dataset: &Dataset, group: &Group, visits: &NearbyVisits) -> Vec<PoiIdx> {
    let mut counts: HashMap<PoiIdx, u32> = HashMap::new();
    for &m in &group.members {
        for &p in visits.of(m) {
            *counts.entry(p).or_default() += 1;
        }
    }
    let mut ranked: Vec<(PoiIdx, u32)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| {
        b.1.cmp(&a.1)
            .then_with(|| dataset.poi(b.0).total_checkins.cmp(&dataset.poi(a.0).total_checkins))
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.into_iter().map(|(p, _)| p).collect()
}
