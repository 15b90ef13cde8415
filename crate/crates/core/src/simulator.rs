//! Simulated interaction sessions and hit-ratio measurement.
//!
//! A session samples a visitor and one of their check-ins as the context, hides all of that
//! visitor's check-ins from mining, and runs `N` iterations. Each iteration picks a mindset,
//! asks the engine for groups, records a hit when any displayed POI is among the visitor's
//! nearby check-ins of the following 48 hours, then picks a group and bookmarks its best POI.
//!
//! Every session draws from its own ChaCha streams keyed by `(seed, session index)`, so runs
//! are reproducible, parallel execution does not change results, and different strategies
//! see the same sampled sessions.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::Duration as ChronoDuration;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, DemographicBucket, PoiIdx, VisitorIdx};
use crate::engine::{Budget, Engine, EngineParams, Session};
use crate::error::{Error, Result};
use crate::geo::{distance, nearby_pois, Context};
use crate::groups::Group;
use crate::mindsets::{builtin_mindsets, Mindset};
use crate::utilities::jaccard_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Optimal,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Optimal => "optimal",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Strategy::Random),
            "optimal" => Ok(Strategy::Optimal),
            _ => Err(Error::InvalidArgument(format!(
                "unknown strategy {s:?} (expected random or optimal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    Popularity,
    Diversity,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Popularity => "popularity",
            BaselineKind::Diversity => "diversity",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "popularity" => Ok(BaselineKind::Popularity),
            "diversity" => Ok(BaselineKind::Diversity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown baseline {s:?} (expected popularity or diversity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub sessions: usize,
    pub iterations: usize,
    pub group_strategy: Strategy,
    pub mindset_strategy: Strategy,
    /// Probability of keeping the previous mindset.
    pub theta: f64,
    pub seed: u64,
    pub engine: EngineParams,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            sessions: 100,
            iterations: 50,
            group_strategy: Strategy::Random,
            mindset_strategy: Strategy::Random,
            theta: 0.5,
            seed: 0,
            // Simulated users look for new places, so bookmarked ones are not shown again.
            engine: EngineParams {
                budget: Budget::Swaps { max: 1000 },
                hide_bookmarked: true,
                ..EngineParams::default()
            },
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sessions == 0 || self.iterations == 0 {
            return Err(Error::InvalidArgument(
                "sessions and iterations must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument("theta must lie in [0, 1]".into()));
        }
        self.engine.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedGroup {
    pub description: String,
    pub support: usize,
    pub relevance: f64,
    pub pois: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub mindset: String,
    pub groups: Vec<TracedGroup>,
    pub relevance_relaxed: bool,
    pub hit: bool,
    /// Index into `groups` of the picked group.
    pub selected_group: Option<usize>,
    pub selected_poi: Option<String>,
}

impl IterationTrace {
    pub fn recommended(&self) -> impl Iterator<Item = &str> + '_ {
        self.groups.iter().flat_map(|g| g.pois.iter().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionTrace {
    pub user: String,
    pub context: Context,
    pub zeta: Vec<String>,
    pub iterations: Vec<IterationTrace>,
}

impl SessionTrace {
    pub fn hits(&self) -> Vec<bool> {
        self.iterations.iter().map(|i| i.hit).collect()
    }
}

fn check_len(hits: &[Vec<bool>], n: usize) {
    assert!(n >= 1, "N must be at least 1");
    assert!(
        hits.iter().all(|h| h.len() >= n),
        "every session needs at least N iterations"
    );
}

/// Mean over sessions of the share of hit iterations among the first `n`.
///
/// # Panics
///
/// When `n` is 0 or a session has fewer than `n` iterations.
pub fn hr_iteration_hits(hits: &[Vec<bool>], n: usize) -> f64 {
    check_len(hits, n);
    if hits.is_empty() {
        return 0.0;
    }
    let total: f64 = hits
        .iter()
        .map(|h| h[..n].iter().filter(|&&x| x).count() as f64 / n as f64)
        .sum();
    total / hits.len() as f64
}

/// Share of sessions with at least one hit among the first `n` iterations.
///
/// # Panics
///
/// When `n` is 0 or a session has fewer than `n` iterations.
pub fn hr_session_hits(hits: &[Vec<bool>], n: usize) -> f64 {
    check_len(hits, n);
    if hits.is_empty() {
        return 0.0;
    }
    let sessions = hits.iter().filter(|h| h[..n].iter().any(|&x| x)).count();
    sessions as f64 / hits.len() as f64
}

pub fn hr_iteration(traces: &[SessionTrace], n: usize) -> f64 {
    hr_iteration_hits(&traces.iter().map(SessionTrace::hits).collect::<Vec<_>>(), n)
}

pub fn hr_session(traces: &[SessionTrace], n: usize) -> f64 {
    hr_session_hits(&traces.iter().map(SessionTrace::hits).collect::<Vec<_>>(), n)
}

/// POIs `visitor` checked in at within `(0, r]` of the context and within 48 hours after it.
pub fn build_eval_set(
    dataset: &Dataset,
    visitor: VisitorIdx,
    context: &Context,
    r: f64,
) -> BTreeSet<PoiIdx> {
    let window = ChronoDuration::hours(48);
    dataset
        .visitor(visitor)
        .checkins
        .iter()
        .map(|&c| dataset.checkin(c))
        .filter(|c| {
            let d = distance(dataset.poi(c.poi).loc, context.loc);
            let dt = c.ts - context.wall_time;
            d > 0.0 && d <= r && dt > ChronoDuration::zero() && dt <= window
        })
        .map(|c| c.poi)
        .collect()
}

/// Cosine similarity of one-hot encodings of two sets of demographic buckets.
pub fn demographic_cosine(group: &[DemographicBucket], user: &[DemographicBucket]) -> f64 {
    let g: BTreeSet<_> = group.iter().collect();
    let u: BTreeSet<_> = user.iter().collect();
    if g.is_empty() || u.is_empty() {
        return 0.0;
    }
    let dot = g.intersection(&u).count() as f64;
    dot / ((g.len() as f64).sqrt() * (u.len() as f64).sqrt())
}

/// Index of the picked group. `Optimal` maximizes [`demographic_cosine`] with the user's
/// buckets, preferring larger support and then the earlier group on ties.
pub fn select_group<R: Rng>(
    groups: &[&Group],
    user: &[DemographicBucket],
    strategy: Strategy,
    rng: &mut R,
) -> Option<usize> {
    if groups.is_empty() {
        return None;
    }
    match strategy {
        Strategy::Random => Some(rng.gen_range(0..groups.len())),
        Strategy::Optimal => {
            let mut best = 0;
            let mut best_key = (f64::NEG_INFINITY, 0usize);
            for (i, g) in groups.iter().enumerate() {
                let key = (demographic_cosine(&g.demog_items, user), g.support);
                if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
                    best = i;
                    best_key = key;
                }
            }
            Some(best)
        }
    }
}

/// Index into `catalog` of the next mindset. With probability `theta` the current mindset is
/// kept; otherwise `Random` draws uniformly and `Optimal` takes the first maximizer of
/// `score_of`. Without a current mindset, or without previous group POIs to score, the pick is
/// uniform.
pub fn select_mindset<R: Rng>(
    catalog: &[Mindset],
    current: Option<usize>,
    theta: f64,
    strategy: Strategy,
    has_previous_group: bool,
    rng: &mut R,
    mut score_of: impl FnMut(&Mindset) -> f64,
) -> usize {
    assert!(!catalog.is_empty(), "empty mindset catalog");
    if let Some(c) = current {
        if rng.gen::<f64>() < theta {
            return c;
        }
    }
    match strategy {
        Strategy::Optimal if has_previous_group => {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (i, m) in catalog.iter().enumerate() {
                let s = score_of(m);
                if s > best_score {
                    best = i;
                    best_score = s;
                }
            }
            best
        }
        _ => rng.gen_range(0..catalog.len()),
    }
}

fn by_popularity(dataset: &Dataset, a: PoiIdx, b: PoiIdx) -> std::cmp::Ordering {
    dataset
        .poi(b)
        .total_checkins
        .cmp(&dataset.poi(a).total_checkins)
        .then_with(|| a.cmp(&b))
}

/// Non-personalized recommendation of `n` POIs among `nearby`.
pub fn baseline(dataset: &Dataset, nearby: &[PoiIdx], n: usize, kind: BaselineKind) -> Vec<PoiIdx> {
    let mut ranked = nearby.to_vec();
    ranked.sort_by(|&a, &b| by_popularity(dataset, a, b));
    match kind {
        BaselineKind::Popularity => {
            ranked.truncate(n);
            ranked
        }
        BaselineKind::Diversity => {
            let mut chosen: Vec<PoiIdx> = Vec::with_capacity(n.min(ranked.len()));
            let mut rest = ranked;
            if rest.is_empty() || n == 0 {
                return chosen;
            }
            chosen.push(rest.remove(0));
            // Adding p to the set changes the total pairwise distance by the sum of its
            // distances to the chosen POIs, and the pair count does not depend on p.
            while chosen.len() < n && !rest.is_empty() {
                let mut best = 0;
                let mut best_gain = f64::NEG_INFINITY;
                for (i, &p) in rest.iter().enumerate() {
                    let gain: f64 = chosen
                        .iter()
                        .map(|&c| {
                            jaccard_distance(&dataset.poi(p).categories, &dataset.poi(c).categories)
                        })
                        .sum();
                    if gain > best_gain {
                        best = i;
                        best_gain = gain;
                    }
                }
                chosen.push(rest.remove(best));
            }
            chosen
        }
    }
}

/// A sampled session: user, context and evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSession {
    pub visitor: VisitorIdx,
    pub context: Context,
    pub zeta: BTreeSet<PoiIdx>,
}

const STREAM_SESSION: u64 = 0;
const STREAM_MINDSET: u64 = 1;
const STREAM_GROUP: u64 = 2;

fn stream(seed: u64, session: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((session as u64) << 2) | purpose);
    rng
}

/// Samples session `index`: a visitor with at least one check-in and one of their check-ins.
pub fn sample_session(dataset: &Dataset, seed: u64, index: usize, r: f64) -> Result<SampledSession> {
    let eligible: Vec<VisitorIdx> = (0..dataset.visitors().len() as u32)
        .map(VisitorIdx)
        .filter(|&v| !dataset.visitor(v).checkins.is_empty())
        .collect();
    if eligible.is_empty() {
        return Err(Error::InvalidArgument("no visitor has check-ins".into()));
    }
    let mut rng = stream(seed, index, STREAM_SESSION);
    let visitor = eligible[rng.gen_range(0..eligible.len())];
    let own = &dataset.visitor(visitor).checkins;
    let checkin = dataset.checkin(own[rng.gen_range(0..own.len())]);
    let context = Context::new(dataset.poi(checkin.poi).loc, checkin.ts);
    let zeta = build_eval_set(dataset, visitor, &context, r);
    Ok(SampledSession {
        visitor,
        context,
        zeta,
    })
}

fn run_session(engine: &Engine, config: &SimulationConfig, index: usize) -> Result<SessionTrace> {
    let ds = engine.dataset();
    let params = &config.engine;
    let sampled = sample_session(ds, config.seed, index, params.radius_m)?;
    let mut mindset_rng = stream(config.seed, index, STREAM_MINDSET);
    let mut group_rng = stream(config.seed, index, STREAM_GROUP);
    let catalog = builtin_mindsets();
    let user_buckets = ds.demographic_buckets(sampled.visitor);

    let mut session = Session::new(format!("sim-{index}"), sampled.context);
    session.masked_visitor = Some(sampled.visitor);
    let candidates = engine.prepare(&session.context, params, session.masked_visitor)?;
    let recorded_at = sampled.context.wall_time.and_utc();

    let mut current: Option<usize> = None;
    let mut previous_group: Vec<PoiIdx> = Vec::new();
    let mut iterations = Vec::with_capacity(config.iterations);
    for j in 0..config.iterations {
        let m = select_mindset(
            &catalog,
            current,
            config.theta,
            config.mindset_strategy,
            !previous_group.is_empty(),
            &mut mindset_rng,
            |m| engine.score_pois(&session, m, &previous_group),
        );
        current = Some(m);
        let rec = engine.iterate_prepared(
            &mut session,
            &candidates,
            &catalog[m],
            params,
            recorded_at + ChronoDuration::seconds(j as i64),
        )?;
        let hit = rec.displayed_pois().any(|p| sampled.zeta.contains(&p));

        let groups: Vec<&Group> = rec.groups.iter().map(|g| &g.group).collect();
        let selected = select_group(&groups, &user_buckets, config.group_strategy, &mut group_rng);
        let mut selected_poi = None;
        if let Some(g) = selected {
            let display = &groups[g].display_pois;
            if let Some(&p) = display.iter().find(|p| !session.portfolio.contains(p)) {
                let id = ds.poi(p).id.clone();
                engine.bookmark(&mut session, &id)?;
                selected_poi = Some(id);
            }
            previous_group = display.clone();
        }

        iterations.push(IterationTrace {
            mindset: catalog[m].label.clone(),
            groups: rec
                .groups
                .iter()
                .map(|g| TracedGroup {
                    description: g.description.text.clone(),
                    support: g.group.support,
                    relevance: g.relevance,
                    pois: g
                        .group
                        .display_pois
                        .iter()
                        .map(|&p| ds.poi(p).id.clone())
                        .collect(),
                })
                .collect(),
            relevance_relaxed: rec.relevance_relaxed,
            hit,
            selected_group: selected,
            selected_poi,
        });
    }

    Ok(SessionTrace {
        user: ds.visitor(sampled.visitor).id.clone(),
        context: sampled.context,
        zeta: sampled.zeta.iter().map(|&p| ds.poi(p).id.clone()).collect(),
        iterations,
    })
}

/// Runs every session of `config` in parallel; traces are in session order.
pub fn simulate(engine: &Engine, config: &SimulationConfig) -> Result<Vec<SessionTrace>> {
    config.validate()?;
    (0..config.sessions)
        .into_par_iter()
        .map(|i| run_session(engine, config, i))
        .collect()
}

/// Per-iteration hits of a baseline on the sessions `config` would sample. The baseline
/// ignores feedback, so each session shows the same `k * k'` POIs at every iteration.
pub fn simulate_baseline(
    engine: &Engine,
    config: &SimulationConfig,
    kind: BaselineKind,
) -> Result<Vec<Vec<bool>>> {
    config.validate()?;
    let ds = engine.dataset();
    let r = config.engine.radius_m;
    let n = config.engine.k * config.engine.k_prime;
    (0..config.sessions)
        .into_par_iter()
        .map(|i| {
            let s = sample_session(ds, config.seed, i, r)?;
            let nearby = nearby_pois(ds, s.context.loc, r)?;
            let shown = baseline(ds, &nearby, n, kind);
            let hit = shown.iter().any(|p| s.zeta.contains(p));
            Ok(vec![hit; config.iterations])
        })
        .collect()
}

/// One CSV row of a hit-ratio curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HrRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "HR_I")]
    pub hr_i: f64,
    #[serde(rename = "HR_S")]
    pub hr_s: f64,
    pub group_strategy: Strategy,
    pub mindset_strategy: Strategy,
    pub theta: f64,
    pub seed: u64,
    /// `likemind` or a baseline name.
    pub method: String,
}

/// Hit-ratio rows for `N = 1..=iterations`.
pub fn hr_rows(hits: &[Vec<bool>], config: &SimulationConfig, method: &str) -> Vec<HrRow> {
    (1..=config.iterations)
        .map(|n| HrRow {
            n,
            hr_i: hr_iteration_hits(hits, n),
            hr_s: hr_session_hits(hits, n),
            group_strategy: config.group_strategy,
            mindset_strategy: config.mindset_strategy,
            theta: config.theta,
            seed: config.seed,
            method: method.to_string(),
        })
        .collect()
}
