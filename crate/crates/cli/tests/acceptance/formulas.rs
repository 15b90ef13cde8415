//! Library formulas against the oracles on randomized small instances.

use std::collections::BTreeSet;

use chrono::NaiveDate;
use likemind_core::dataset::{CategoryId, DatasetStats, Poi, PoiIdx, VisitorIdx};
use likemind_core::groups::{mine_groups, relevance, Group, ItemCodec, ItemId, ItemPayload, MiningParams, Transaction};
use likemind_core::mindsets::{score, update_weights};
use likemind_core::simulator::{hr_iteration_hits, hr_session_hits};
use likemind_core::utilities::{categories_of, evaluate, UtilityEnv};
use likemind_core::{GeoPoint, Mindset, UtilityKind, UtilityVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::oracles::{self, close};
use crate::Verdict;

const INSTANCES: usize = 250;
const REL_TOL: f64 = 1e-9;

fn random_stats(rng: &mut ChaCha8Rng) -> DatasetStats {
    DatasetStats {
        max_poi_checkins: rng.gen_range(100..5_000),
        max_radius_m: rng.gen_range(50.0..500.0),
        oldest_insertion_date: NaiveDate::from_ymd_opt(2007, 1, 1).unwrap(),
        mean_rating: 2.5,
        city_area_m2: rng.gen_range(1.0e5..1.0e7),
        category_universe: (0..8).map(CategoryId).collect(),
    }
}

fn random_categories(rng: &mut ChaCha8Rng) -> BTreeSet<CategoryId> {
    (0..rng.gen_range(0..4)).map(|_| CategoryId(rng.gen_range(0..8))).collect()
}

fn random_poi(rng: &mut ChaCha8Rng, stats: &DatasetStats) -> Poi {
    Poi {
        id: String::new(),
        loc: GeoPoint::new(40.7 + rng.gen_range(-0.02..0.02), -74.0 + rng.gen_range(-0.02..0.02)),
        inserted: NaiveDate::from_ymd_opt(2007, 1, 1).unwrap() + chrono::Duration::days(rng.gen_range(0..2500)),
        total_checkins: rng.gen_range(0..=stats.max_poi_checkins),
        radius_m: rng.gen_range(1.0..=stats.max_radius_m),
        categories: random_categories(rng),
        rating: rng.gen_range(0.0..=5.0),
        rating_observed: true,
    }
}

fn random_set(rng: &mut ChaCha8Rng, stats: &DatasetStats, max: usize) -> Vec<Poi> {
    (0..rng.gen_range(0..=max)).map(|_| random_poi(rng, stats)).collect()
}

fn now() -> NaiveDate {
    NaiveDate::from_ymd_opt(2012, 6, 1).unwrap()
}

/// Counts disagreements per formula.
#[derive(Default)]
struct Tally {
    lines: Vec<String>,
    failed: bool,
}

impl Tally {
    fn record(&mut self, name: &str, checked: usize, mismatches: usize) {
        self.failed |= mismatches > 0 || checked < 200;
        self.lines.push(format!("{name} {}/{checked}", checked - mismatches));
    }
}

fn utilities(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let mut bad = [0usize; 8];
    for _ in 0..INSTANCES {
        let stats = random_stats(rng);
        let pois = random_set(rng, &stats, 5);
        let portfolio = random_categories(rng);
        let interest = random_categories(rng);
        let refs: Vec<&Poi> = pois.iter().collect();
        let env = UtilityEnv {
            stats: &stats,
            portfolio_categories: &portfolio,
            categories_of_interest: &interest,
            now: now(),
        };
        let expected = oracles::utilities(&refs, &oracles::Env::new(&stats, &portfolio, &interest, now()));
        for kind in UtilityKind::ALL {
            if !close(evaluate(kind, &refs, &env), expected[kind.index()], REL_TOL) {
                bad[kind.index()] += 1;
            }
        }
    }
    for kind in UtilityKind::ALL {
        tally.record(kind.name(), INSTANCES, bad[kind.index()]);
    }
}

fn mindset_score(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let mut bad = 0;
    for _ in 0..INSTANCES {
        let stats = random_stats(rng);
        let pois = random_set(rng, &stats, 5);
        let refs: Vec<&Poi> = pois.iter().collect();
        let portfolio = random_categories(rng);
        let interest = random_categories(rng);
        let priors: [f64; 8] = std::array::from_fn(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) });
        let weights: [f64; 8] = std::array::from_fn(|_| rng.gen_range(0.0..=1.0));
        let m = Mindset {
            label: "random".into(),
            priors: UtilityVector(priors),
            categories: BTreeSet::new(),
        };
        let env = UtilityEnv {
            stats: &stats,
            portfolio_categories: &portfolio,
            categories_of_interest: &interest,
            now: now(),
        };
        let got = score(&m, &refs, &UtilityVector(weights), &env);
        let f = oracles::utilities(&refs, &oracles::Env::new(&stats, &portfolio, &interest, now()));
        if !close(got, oracles::mindset_score(&priors, &weights, &f), REL_TOL) {
            bad += 1;
        }
    }
    tally.record("score", INSTANCES, bad);
}

fn weight_update(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let mut bad = 0;
    for _ in 0..INSTANCES {
        let stats = random_stats(rng);
        let portfolio = random_set(rng, &stats, 5);
        let refs: Vec<&Poi> = portfolio.iter().collect();
        let interest = random_categories(rng);
        let own = categories_of(&refs);
        let env = UtilityEnv {
            stats: &stats,
            portfolio_categories: &own,
            categories_of_interest: &interest,
            now: now(),
        };
        let got = update_weights(&refs, &env);
        let interest_ids = interest.iter().map(|c| c.0).collect();
        let expected = oracles::weights(&refs, &stats, &interest_ids, now());
        if !(0..8).all(|i| close(got.0[i], expected[i], REL_TOL)) {
            bad += 1;
        }
    }
    tally.record("weights", INSTANCES, bad);
}

fn group_relevance(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let codec = ItemCodec::new(30, 8);
    let mut bad = 0;
    for _ in 0..INSTANCES {
        let mut items: BTreeSet<ItemId> = (0..rng.gen_range(0..8))
            .map(|_| codec.encode(ItemPayload::Poi { poi: PoiIdx(rng.gen_range(0..30)) }))
            .collect();
        for _ in 0..rng.gen_range(0..3) {
            items.insert(codec.encode(ItemPayload::Category { category: CategoryId(rng.gen_range(0..8)) }));
        }
        let group = Group::from_itemset(&codec, items.iter().copied().collect(), vec![VisitorIdx(0), VisitorIdx(1)]);
        let group_pois: Vec<PoiIdx> = items
            .iter()
            .filter_map(|&i| match codec.decode(i) {
                Some(ItemPayload::Poi { poi }) => Some(poi),
                _ => None,
            })
            .collect();
        let portfolio: Vec<PoiIdx> = (0..rng.gen_range(0..6))
            .map(|_| PoiIdx(rng.gen_range(0..30)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if relevance(&group, &portfolio) != oracles::relevance(&group_pois, &portfolio) {
            bad += 1;
        }
    }
    tally.record("relevance", INSTANCES, bad);
}

fn group_support(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let codec = ItemCodec::new(10, 4);
    let mut bad = 0;
    for _ in 0..INSTANCES {
        let n_items = 12;
        let transactions: Vec<Transaction> = (0..rng.gen_range(1..10))
            .map(|v| Transaction {
                visitor: VisitorIdx(v),
                items: (0..n_items)
                    .filter(|_| rng.gen_bool(0.4))
                    .map(|i| ItemId(i + 16))
                    .collect(),
            })
            .collect();
        let raw: Vec<Vec<u32>> = transactions.iter().map(|t| t.items.iter().map(|i| i.0).collect()).collect();
        let groups = mine_groups(&codec, &transactions, &MiningParams::default()).unwrap();
        let ok = groups.iter().all(|g| {
            let items: Vec<u32> = g.itemset.iter().map(|i| i.0).collect();
            let holders: Vec<VisitorIdx> = transactions
                .iter()
                .filter(|t| items.iter().all(|i| t.items.contains(&ItemId(*i))))
                .map(|t| t.visitor)
                .collect();
            g.support == oracles::support(&items, &raw) && g.members == holders
        });
        if !ok {
            bad += 1;
        }
    }
    tally.record("support", INSTANCES, bad);
}

fn hit_ratios(rng: &mut ChaCha8Rng, tally: &mut Tally) {
    let mut bad = 0;
    for _ in 0..INSTANCES {
        let iterations = rng.gen_range(1..12);
        let p = rng.gen_range(0.0..1.0);
        let hits: Vec<Vec<bool>> = (0..rng.gen_range(1..15))
            .map(|_| (0..iterations).map(|_| rng.gen_bool(p)).collect())
            .collect();
        let n = rng.gen_range(1..=iterations);
        let same_i = close(hr_iteration_hits(&hits, n), oracles::hr_iteration(&hits, n), REL_TOL);
        let same_s = hr_session_hits(&hits, n) == oracles::hr_session(&hits, n);
        if !(same_i && same_s) {
            bad += 1;
        }
    }
    tally.record("hit ratios", INSTANCES, bad);
}

pub fn run() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut tally = Tally::default();
    utilities(&mut rng, &mut tally);
    mindset_score(&mut rng, &mut tally);
    weight_update(&mut rng, &mut tally);
    group_relevance(&mut rng, &mut tally);
    group_support(&mut rng, &mut tally);
    hit_ratios(&mut rng, &mut tally);
    Verdict::new(!tally.failed, format!("agreeing instances: {}", tally.lines.join(", ")))
}
