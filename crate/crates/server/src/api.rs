//! Request and response bodies of the `/v1` API.

use chrono::{DateTime, NaiveDateTime};
use likemind_core::dataset::PoiIdx;
use likemind_core::engine::{IterationRecord, RecommendedGroup};
use likemind_core::geo::distance;
use likemind_core::groups::GroupDescription;
use likemind_core::{Context, Dataset, EngineParams, GeoPoint, Mindset, Recommendation, Session, UtilityVector};
use serde::{Deserialize, Serialize};

use crate::error::{ApiError, ApiResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub lat: f64,
    pub lon: f64,
    /// Local wall time, `2012-03-10T14:30:00`; an RFC 3339 offset is accepted and dropped.
    pub wall_time: String,
}

impl CreateSession {
    pub fn context(&self) -> ApiResult<Context> {
        let loc = GeoPoint::checked(self.lat, self.lon).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let wall_time = parse_wall_time(&self.wall_time)?;
        Ok(Context::new(loc, wall_time))
    }
}

fn parse_wall_time(s: &str) -> ApiResult<NaiveDateTime> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t);
        }
    }
    Err(ApiError::bad_request(format!(
        "wall_time `{s}` is not a date-time like 2012-03-10T14:30:00"
    )))
}

/// A built-in mindset by label or key, or a full custom mindset.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MindsetRef {
    Label(String),
    Custom(Mindset),
}

/// Per-request parameter overrides.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(alias = "radius_m")]
    pub r: Option<f64>,
    pub k: Option<usize>,
    #[serde(alias = "k'")]
    pub k_prime: Option<usize>,
    #[serde(alias = "σ")]
    pub sigma: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, base: &EngineParams) -> ApiResult<EngineParams> {
        let mut p = *base;
        if let Some(r) = self.r {
            p.radius_m = r;
        }
        if let Some(k) = self.k {
            p.k = k;
        }
        if let Some(k) = self.k_prime {
            p.k_prime = k;
        }
        if let Some(s) = self.sigma {
            p.sigma = s;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecommendRequest {
    pub mindset: MindsetRef,
    #[serde(default)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BookmarkRequest {
    pub poi_id: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextView {
    pub lat: f64,
    pub lon: f64,
    pub wall_time: NaiveDateTime,
    pub hourly: String,
    pub weekly: String,
}

impl From<&Context> for ContextView {
    fn from(c: &Context) -> Self {
        ContextView {
            lat: c.loc.lat,
            lon: c.loc.lon,
            wall_time: c.wall_time,
            hourly: c.time.hourly.name().to_string(),
            weekly: c.time.weekly.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoiView {
    pub id: String,
    pub lat: f64,
    pub lon: f64,
    pub categories: Vec<String>,
    pub rating: Option<f64>,
    pub total_checkins: u64,
    pub radius_m: f64,
    pub inserted: chrono::NaiveDate,
    /// Distance from the session location, when there is one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance_m: Option<f64>,
}

impl PoiView {
    pub fn new(ds: &Dataset, idx: PoiIdx, from: Option<GeoPoint>) -> Self {
        let p = ds.poi(idx);
        PoiView {
            id: p.id.clone(),
            lat: p.loc.lat,
            lon: p.loc.lon,
            categories: p.categories.iter().map(|&c| ds.category_name(c).to_string()).collect(),
            rating: p.rating_observed.then_some(p.rating),
            total_checkins: p.total_checkins,
            radius_m: p.radius_m,
            inserted: p.inserted,
            distance_m: from.map(|c| distance(c, p.loc)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupView {
    pub rank: usize,
    pub score: f64,
    pub relevance: f64,
    pub support: usize,
    pub member_count: usize,
    pub description: GroupDescription,
    pub pois: Vec<PoiView>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationView {
    pub session_id: String,
    pub iteration: usize,
    pub mindset: String,
    pub params: EngineParams,
    pub objective: f64,
    pub relevance_relaxed: bool,
    pub short: bool,
    pub diagnostic: Option<String>,
    pub candidate_count: usize,
    pub groups: Vec<GroupView>,
}

impl RecommendationView {
    pub fn new(ds: &Dataset, session: &Session, rec: &Recommendation, params: EngineParams) -> Self {
        let from = Some(session.context.loc);
        let group = |(rank, g): (usize, &RecommendedGroup)| GroupView {
            rank: rank + 1,
            score: g.score,
            relevance: g.relevance,
            support: g.group.support,
            member_count: g.group.members.len(),
            description: g.description.clone(),
            pois: g.group.display_pois.iter().map(|&p| PoiView::new(ds, p, from)).collect(),
        };
        RecommendationView {
            session_id: session.id.clone(),
            iteration: rec.iteration,
            mindset: rec.mindset.clone(),
            params,
            objective: rec.objective,
            relevance_relaxed: rec.relevance_relaxed,
            short: rec.short,
            diagnostic: rec.diagnostic.clone(),
            candidate_count: rec.candidate_count,
            groups: rec.groups.iter().enumerate().map(group).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session_id: String,
    pub context: ContextView,
    pub portfolio: Vec<PoiView>,
    pub weights: UtilityVector,
    pub active_mindset: Option<Mindset>,
    /// POI ids of the latest recommendation, the only ones that can be bookmarked.
    pub displayed: Vec<String>,
    pub iterations: Vec<IterationRecord>,
}

impl SessionView {
    pub fn new(ds: &Dataset, s: &Session) -> Self {
        let from = Some(s.context.loc);
        SessionView {
            session_id: s.id.clone(),
            context: ContextView::from(&s.context),
            portfolio: s.portfolio.iter().map(|&p| PoiView::new(ds, p, from)).collect(),
            weights: s.weights,
            active_mindset: s.active_mindset.clone(),
            displayed: s.displayed.iter().map(|&p| ds.poi(p).id.clone()).collect(),
            iterations: s.history.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookmarkView {
    /// `false` when the POI was already in the portfolio.
    pub added: bool,
    pub poi: PoiView,
    pub portfolio_size: usize,
    pub weights: UtilityVector,
}

/// Stage durations in milliseconds, as sent in the `server-timing` header.
pub fn server_timing(stages: &[(&str, f64)]) -> String {
    stages
        .iter()
        .map(|(name, ms)| format!("{name};dur={ms:.3}"))
        .collect::<Vec<_>>()
        .join(", ")
}
