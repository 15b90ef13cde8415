//! The per-iteration pipeline, the greedy group maximizer and session state.
//!
//! One iteration runs four stages:
//!
//! 1. POIs within `r` of the user,
//! 2. their check-ins in the user's hourly bucket,
//! 3. transactions and closed-itemset groups over the visitors behind those check-ins,
//! 4. `k` groups maximizing the summed mindset score of their displayed POIs, each shown with
//!    its `k'` most visited nearby POIs.
//!
//! Stages 1-3 depend only on the context, so [`Engine::prepare`] exposes them separately and
//! callers iterating on a fixed context can reuse the [`Candidates`].

use std::cell::RefCell;
use std::collections::{BTreeSet, HashSet};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, PoiIdx, VisitorIdx};
use crate::error::{Error, Result};
use crate::geo::{checkins_of, nearby_pois, Context};
use crate::groups::{
    build_transactions, describe, mine_groups, ranked_pois, relevance, Group, GroupDescription,
    ItemCodec, MiningParams, NearbyVisits,
};
use crate::mindsets::{score, update_weights, CategoryAliases, Mindset, UtilityVector};
use crate::utilities::{categories_of, UtilityEnv};

/// Stop condition of the swap loop in [`maximize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Budget {
    /// Wall-clock limit on the swap loop.
    WallClock { millis: u64 },
    /// Maximum number of evaluated swaps; results are exactly reproducible.
    Swaps { max: u64 },
}

impl Budget {
    pub const INTERACTIVE: Budget = Budget::WallClock { millis: 100 };
    pub const UNLIMITED: Budget = Budget::Swaps { max: u64::MAX };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineParams {
    pub radius_m: f64,
    pub k: usize,
    pub k_prime: usize,
    pub sigma: f64,
    pub budget: Budget,
    pub mining: MiningParams,
    /// Two groups whose display POIs have a Jaccard similarity above this value are not shown
    /// together.
    pub dedup_threshold: Option<f64>,
    /// Also require check-ins to match the weekday/weekend bucket of the context.
    pub match_weekly: bool,
    /// Leave already bookmarked POIs out of the display lists.
    pub hide_bookmarked: bool,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            radius_m: 500.0,
            k: 5,
            k_prime: 5,
            sigma: 0.01,
            budget: Budget::INTERACTIVE,
            mining: MiningParams::default(),
            dedup_threshold: Some(0.9),
            match_weekly: false,
            hide_bookmarked: false,
        }
    }
}

impl EngineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius_m > 0.0) {
            return Err(Error::InvalidArgument("r must be positive".into()));
        }
        if self.k == 0 || self.k_prime == 0 {
            return Err(Error::InvalidArgument("k and k' must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return Err(Error::InvalidArgument("sigma must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub nearby: Duration,
    pub checkins: Duration,
    pub mining: Duration,
    pub maximize: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.nearby + self.checkins + self.mining + self.maximize
    }
}

/// Output of stages 1-3 for one context.
#[derive(Debug, Clone)]
pub struct Candidates {
    pub nearby: Vec<PoiIdx>,
    pub checkins: Vec<crate::dataset::CheckinIdx>,
    pub visits: NearbyVisits,
    pub transactions: usize,
    pub groups: Vec<Group>,
    pub timings: StageTimings,
    /// Full POI ranking of each group, filled on first use.
    pub rankings: Vec<OnceLock<Vec<PoiIdx>>>,
}

impl Candidates {
    /// Nearby POIs visited by members of group `i`, most visited first.
    pub fn ranking(&self, dataset: &Dataset, i: usize) -> &[PoiIdx] {
        self.rankings[i].get_or_init(|| ranked_pois(dataset, &self.groups[i], &self.visits))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendedGroup {
    /// `display_pois` holds the group's top-`k'` nearby POIs.
    pub group: Group,
    pub score: f64,
    pub relevance: f64,
    pub description: GroupDescription,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommendation {
    pub iteration: usize,
    pub mindset: String,
    pub groups: Vec<RecommendedGroup>,
    pub objective: f64,
    pub relevance_relaxed: bool,
    pub short: bool,
    pub diagnostic: Option<String>,
    pub candidate_count: usize,
    #[serde(skip)]
    pub timings: StageTimings,
    /// Objective after seeding and after every accepted swap.
    #[serde(skip)]
    pub accepted_objectives: Vec<f64>,
}

impl Recommendation {
    pub fn displayed_pois(&self) -> impl Iterator<Item = PoiIdx> + '_ {
        self.groups.iter().flat_map(|g| g.group.display_pois.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub description: String,
    pub support: usize,
    pub score: f64,
    pub pois: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub index: usize,
    pub mindset: String,
    pub params: EngineParams,
    pub groups: Vec<GroupSummary>,
    pub objective: f64,
    pub recorded_at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub context: Context,
    /// Bookmarked POIs in bookmark order, without duplicates.
    pub portfolio: Vec<PoiIdx>,
    pub weights: UtilityVector,
    pub history: Vec<IterationRecord>,
    pub active_mindset: Option<Mindset>,
    /// POIs shown by the latest recommendation; only these can be bookmarked.
    pub displayed: BTreeSet<PoiIdx>,
    /// A visitor whose check-ins are hidden from mining (cold-start simulation).
    pub masked_visitor: Option<VisitorIdx>,
}

impl Session {
    pub fn new(id: impl Into<String>, context: Context) -> Self {
        Session {
            id: id.into(),
            context,
            portfolio: Vec::new(),
            weights: UtilityVector::ONES,
            history: Vec::new(),
            active_mindset: None,
            displayed: BTreeSet::new(),
            masked_visitor: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizeOutcome {
    /// Indices into the candidate pool, by score (descending).
    pub selected: Vec<usize>,
    pub scores: Vec<f64>,
    pub objective: f64,
    /// Objective after seeding and after every accepted swap.
    pub accepted: Vec<f64>,
    pub relaxed: bool,
    pub short: bool,
    pub evaluations: u64,
}

fn support_order(pool: &[Group], a: usize, b: usize) -> std::cmp::Ordering {
    pool[b]
        .support
        .cmp(&pool[a].support)
        .then_with(|| pool[a].itemset.cmp(&pool[b].itemset))
}

/// Jaccard similarity of two lists of distinct POIs, 1 when both are empty.
pub fn poi_jaccard(a: &[PoiIdx], b: &[PoiIdx]) -> f64 {
    let inter = a.iter().filter(|p| b.contains(p)).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

/// Greedy hill climbing over groups.
///
/// Groups with relevance below `sigma` are pruned and the rest ordered by support. The first
/// `k` seed the selection; every further candidate is tried against each selected group in
/// turn and the first swap that strictly raises the summed score is kept. Passes over the
/// unselected candidates repeat until one completes without a swap or the budget runs out.
/// When nothing survives pruning, the `k` largest groups are returned with `relaxed` set.
///
/// `redundant(a, b)` marks near-duplicate pairs. Seeding prefers groups that are not redundant
/// with an earlier seed, and a swap never brings in a group redundant with one that stays.
pub fn maximize<F, R>(
    pool: &[Group],
    mut score: F,
    portfolio: &[PoiIdx],
    sigma: f64,
    k: usize,
    budget: Budget,
    mut redundant: R,
) -> MaximizeOutcome
where
    F: FnMut(usize) -> f64,
    R: FnMut(usize, usize) -> bool,
{
    let start = Instant::now();
    let mut cache: Vec<Option<f64>> = vec![None; pool.len()];
    let mut score_of = |i: usize| *cache[i].get_or_insert_with(|| score(i));

    let mut survivors: Vec<usize> = (0..pool.len())
        .filter(|&i| relevance(&pool[i], portfolio) >= sigma)
        .collect();
    let relaxed = survivors.is_empty() && !pool.is_empty();
    if relaxed {
        survivors = (0..pool.len()).collect();
    }
    survivors.sort_by(|&a, &b| support_order(pool, a, b));
    let short = survivors.len() < k;

    let mut selected: Vec<usize> = Vec::with_capacity(k);
    let mut skipped = Vec::new();
    for &c in &survivors {
        if selected.len() == k {
            break;
        }
        if selected.iter().any(|&s| redundant(s, c)) {
            skipped.push(c);
        } else {
            selected.push(c);
        }
    }
    for c in skipped {
        if selected.len() == k {
            break;
        }
        selected.push(c);
    }

    let sum = |sel: &[usize], score_of: &mut dyn FnMut(usize) -> f64| -> f64 {
        sel.iter().map(|&i| score_of(i)).sum()
    };
    let mut objective = sum(&selected, &mut score_of);
    let mut accepted = vec![objective];
    let mut evaluations = 0u64;

    if !relaxed {
        let exhausted = |evaluations: u64| match budget {
            Budget::Swaps { max } => evaluations >= max,
            Budget::WallClock { millis } => start.elapsed() >= Duration::from_millis(millis),
        };
        'passes: loop {
            let mut improved = false;
            let in_selection: HashSet<usize> = selected.iter().copied().collect();
            for &out in survivors.iter().filter(|c| !in_selection.contains(c)) {
                if selected.contains(&out) {
                    continue;
                }
                let clashes: Vec<bool> = selected.iter().map(|&s| redundant(s, out)).collect();
                let n_clashes = clashes.iter().filter(|&&c| c).count();
                for slot in 0..selected.len() {
                    if exhausted(evaluations) {
                        break 'passes;
                    }
                    if n_clashes > usize::from(clashes[slot]) {
                        continue;
                    }
                    evaluations += 1;
                    let mut trial = selected.clone();
                    trial[slot] = out;
                    let candidate = sum(&trial, &mut score_of);
                    if candidate > objective {
                        selected = trial;
                        objective = candidate;
                        accepted.push(objective);
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                break;
            }
        }
    }

    let mut ranked: Vec<(usize, f64)> = selected.iter().map(|&i| (i, score_of(i))).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| support_order(pool, a.0, b.0)));
    MaximizeOutcome {
        selected: ranked.iter().map(|r| r.0).collect(),
        scores: ranked.iter().map(|r| r.1).collect(),
        objective,
        accepted,
        relaxed,
        short,
        evaluations,
    }
}

pub const WIDEN_RADIUS: &str = "no POIs nearby; widen the radius";
pub const NO_GROUPS: &str = "no look-alike groups nearby; widen the radius";

/// Shared, read-only recommendation engine over one dataset.
#[derive(Debug, Clone)]
pub struct Engine {
    dataset: Arc<Dataset>,
    codec: ItemCodec,
    aliases: CategoryAliases,
}

impl Engine {
    pub fn new(dataset: Arc<Dataset>) -> Self {
        Engine::with_aliases(dataset, CategoryAliases::bundled())
    }

    pub fn with_aliases(dataset: Arc<Dataset>, aliases: CategoryAliases) -> Self {
        let codec = ItemCodec::for_dataset(&dataset);
        Engine {
            dataset,
            codec,
            aliases,
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn dataset_arc(&self) -> &Arc<Dataset> {
        &self.dataset
    }

    pub fn codec(&self) -> &ItemCodec {
        &self.codec
    }

    pub fn aliases(&self) -> &CategoryAliases {
        &self.aliases
    }

    /// Stages 1-3: nearby POIs, time-matched check-ins (without the masked visitor) and groups.
    pub fn prepare(
        &self,
        context: &Context,
        params: &EngineParams,
        masked: Option<VisitorIdx>,
    ) -> Result<Candidates> {
        params.validate()?;
        let ds = &*self.dataset;
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let nearby = nearby_pois(ds, context.loc, params.radius_m)?;
        timings.nearby = t.elapsed();

        let t = Instant::now();
        let weekly = params.match_weekly.then_some(context.time.weekly);
        let mut checkins = checkins_of(ds, &nearby, context.time.hourly, weekly);
        if let Some(m) = masked {
            checkins.retain(|&c| ds.checkin(c).visitor != m);
        }
        timings.checkins = t.elapsed();

        let t = Instant::now();
        let transactions = build_transactions(ds, &self.codec, &checkins);
        let groups = mine_groups(&self.codec, &transactions, &params.mining)?;
        let visits = NearbyVisits::from_checkins(ds, &checkins);
        timings.mining = t.elapsed();

        Ok(Candidates {
            nearby,
            checkins,
            visits,
            transactions: transactions.len(),
            rankings: (0..groups.len()).map(|_| OnceLock::new()).collect(),
            groups,
            timings,
        })
    }

    fn portfolio_pois(&self, portfolio: &[PoiIdx]) -> Vec<&crate::dataset::Poi> {
        portfolio.iter().map(|&p| self.dataset.poi(p)).collect()
    }

    /// Weights for `mindset` given the session's bookmarks.
    pub fn weights_for(&self, session: &Session, mindset: &Mindset) -> UtilityVector {
        let ds = &*self.dataset;
        let portfolio = self.portfolio_pois(&session.portfolio);
        let portfolio_categories = categories_of(&portfolio);
        let interest = self.aliases.resolve(&mindset.categories, ds);
        let env = UtilityEnv {
            stats: ds.stats(),
            portfolio_categories: &portfolio_categories,
            categories_of_interest: &interest,
            now: session.context.wall_time.date(),
        };
        update_weights(&portfolio, &env)
    }

    /// Mindset score of `pois` under the session's portfolio, with the weights that `mindset`
    /// would get.
    pub fn score_pois(&self, session: &Session, mindset: &Mindset, pois: &[PoiIdx]) -> f64 {
        let ds = &*self.dataset;
        let portfolio = self.portfolio_pois(&session.portfolio);
        let portfolio_categories = categories_of(&portfolio);
        let interest = self.aliases.resolve(&mindset.categories, ds);
        let env = UtilityEnv {
            stats: ds.stats(),
            portfolio_categories: &portfolio_categories,
            categories_of_interest: &interest,
            now: session.context.wall_time.date(),
        };
        let w = update_weights(&portfolio, &env);
        let pois: Vec<_> = pois.iter().map(|&p| ds.poi(p)).collect();
        score(mindset, &pois, &w, &env)
    }

    /// Stage 4 on prepared candidates. Does not touch the session.
    pub fn select(
        &self,
        candidates: &Candidates,
        session: &Session,
        mindset: &Mindset,
        params: &EngineParams,
    ) -> Result<Recommendation> {
        params.validate()?;
        let ds = &*self.dataset;
        let started = Instant::now();
        let mut timings = candidates.timings;
        let mut rec = Recommendation {
            iteration: session.history.len() + 1,
            mindset: mindset.label.clone(),
            groups: Vec::new(),
            objective: 0.0,
            relevance_relaxed: false,
            short: false,
            diagnostic: None,
            candidate_count: candidates.groups.len(),
            timings,
            accepted_objectives: Vec::new(),
        };
        if candidates.nearby.is_empty() {
            rec.diagnostic = Some(WIDEN_RADIUS.to_string());
            return Ok(rec);
        }
        if candidates.groups.is_empty() {
            rec.diagnostic = Some(NO_GROUPS.to_string());
            return Ok(rec);
        }

        let portfolio = self.portfolio_pois(&session.portfolio);
        let portfolio_categories = categories_of(&portfolio);
        let interest = self.aliases.resolve(&mindset.categories, ds);
        let env = UtilityEnv {
            stats: ds.stats(),
            portfolio_categories: &portfolio_categories,
            categories_of_interest: &interest,
            now: session.context.wall_time.date(),
        };
        let weights = update_weights(&portfolio, &env);

        let pool = &candidates.groups;
        let displays: RefCell<Vec<Option<Vec<PoiIdx>>>> = RefCell::new(vec![None; pool.len()]);
        let hidden: &[PoiIdx] = if params.hide_bookmarked { &session.portfolio } else { &[] };
        let display = |i: usize| -> Vec<PoiIdx> {
            candidates
                .ranking(ds, i)
                .iter()
                .filter(|p| !hidden.contains(p))
                .take(params.k_prime)
                .copied()
                .collect()
        };
        let ensure_display = |i: usize| {
            displays.borrow_mut()[i].get_or_insert_with(|| display(i));
        };
        let outcome = maximize(
            pool,
            |i| {
                ensure_display(i);
                let displays = displays.borrow();
                let pois: Vec<_> = displays[i].iter().flatten().map(|&p| ds.poi(p)).collect();
                score(mindset, &pois, &weights, &env)
            },
            &session.portfolio,
            params.sigma,
            params.k,
            params.budget,
            |a, b| {
                params.dedup_threshold.is_some_and(|t| {
                    ensure_display(a);
                    ensure_display(b);
                    let displays = displays.borrow();
                    let (da, db) = (displays[a].as_deref(), displays[b].as_deref());
                    poi_jaccard(da.unwrap_or_default(), db.unwrap_or_default()) > t
                })
            },
        );
        let mut displays = displays.into_inner();

        for (&i, &s) in outcome.selected.iter().zip(&outcome.scores) {
            let mut group = pool[i].clone();
            group.display_pois = displays[i]
                .take()
                .unwrap_or_else(|| display(i));
            let description = describe(&group, ds);
            rec.groups.push(RecommendedGroup {
                relevance: relevance(&group, &session.portfolio),
                group,
                score: s,
                description,
            });
        }
        rec.objective = outcome.objective;
        rec.relevance_relaxed = outcome.relaxed;
        rec.short = outcome.short;
        rec.accepted_objectives = outcome.accepted;
        timings.maximize = started.elapsed();
        rec.timings = timings;
        Ok(rec)
    }

    /// Runs a full iteration and records it in the session history.
    pub fn iterate(
        &self,
        session: &mut Session,
        mindset: &Mindset,
        params: &EngineParams,
    ) -> Result<Recommendation> {
        self.iterate_at(session, mindset, params, Utc::now())
    }

    pub fn iterate_at(
        &self,
        session: &mut Session,
        mindset: &Mindset,
        params: &EngineParams,
        recorded_at: DateTime<Utc>,
    ) -> Result<Recommendation> {
        let candidates = self.prepare(&session.context, params, session.masked_visitor)?;
        self.iterate_prepared(session, &candidates, mindset, params, recorded_at)
    }

    /// Stage 4 plus bookkeeping, on candidates prepared for this session's context.
    pub fn iterate_prepared(
        &self,
        session: &mut Session,
        candidates: &Candidates,
        mindset: &Mindset,
        params: &EngineParams,
        recorded_at: DateTime<Utc>,
    ) -> Result<Recommendation> {
        let rec = self.select(candidates, session, mindset, params)?;
        session.weights = self.weights_for(session, mindset);
        session.active_mindset = Some(mindset.clone());
        session.displayed = rec.displayed_pois().collect();
        session.history.push(IterationRecord {
            index: rec.iteration,
            mindset: mindset.label.clone(),
            params: *params,
            groups: rec
                .groups
                .iter()
                .map(|g| GroupSummary {
                    description: g.description.text.clone(),
                    support: g.group.support,
                    score: g.score,
                    pois: g
                        .group
                        .display_pois
                        .iter()
                        .map(|&p| self.dataset.poi(p).id.clone())
                        .collect(),
                })
                .collect(),
            objective: rec.objective,
            recorded_at,
        });
        Ok(rec)
    }

    /// Adds a displayed POI to the portfolio and refreshes the weights. Returns `false` when
    /// the POI was already bookmarked.
    pub fn bookmark(&self, session: &mut Session, poi_id: &str) -> Result<bool> {
        let poi = self
            .dataset
            .poi_by_id(poi_id)
            .ok_or_else(|| Error::UnknownPoi(poi_id.to_string()))?;
        if session.portfolio.contains(&poi) {
            return Ok(false);
        }
        if !session.displayed.contains(&poi) {
            return Err(Error::NotDisplayed(poi_id.to_string()));
        }
        session.portfolio.push(poi);
        if let Some(m) = session.active_mindset.clone() {
            session.weights = self.weights_for(session, &m);
        }
        Ok(true)
    }
}
