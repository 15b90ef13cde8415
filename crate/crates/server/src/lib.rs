//! JSON-over-HTTP service for interactive sessions.
//!
//! Routes, all under `/v1`:
//!
//! * `GET  /mindsets`: the built-in mindset catalog.
//! * `POST /sessions`: create a session from `{lat, lon, wall_time}`; answers 201.
//! * `GET  /sessions/{id}`: portfolio, weights and iteration history.
//! * `POST /sessions/{id}/recommend`: run one iteration for `{mindset, overrides?}`.
//! * `POST /sessions/{id}/bookmarks`: bookmark a displayed POI, `{poi_id}`.
//! * `GET  /pois/{id}`: POI detail.
//!
//! Errors are `{"error": message}` with status 400, 404 or 409. Sessions live in memory and
//! expire after a period of inactivity. Requests on one session run one at a time; distinct
//! sessions run concurrently over the shared read-only dataset.

pub mod api;
pub mod error;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{Duration, Instant};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderName, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use likemind_core::mindsets::{builtin_by_label, catalog};
use likemind_core::{Budget, Engine, EngineParams, Mindset, Session};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::de::DeserializeOwned;
use serde_json::json;
use tokio::sync::Mutex;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::api::{
    server_timing, BookmarkRequest, BookmarkView, CreateSession, MindsetRef, PoiView, RecommendRequest,
    RecommendationView, SessionView,
};
use crate::error::{ApiError, ApiResult};

pub const SERVER_TIMING: HeaderName = HeaderName::from_static("server-timing");

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub bind: SocketAddr,
    /// Defaults for every recommendation; requests may override r, k, k' and σ.
    pub engine: EngineParams,
    /// Idle sessions are dropped after this long.
    pub session_ttl: Duration,
    /// Origins allowed by CORS; `*` allows any. Empty disables CORS headers.
    pub cors_origins: Vec<String>,
    /// Seeded session ids and a logical clock for history timestamps, so that replaying a
    /// request log against a fresh server yields identical responses. Pair it with a
    /// swap-count budget.
    pub replay_seed: Option<u64>,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            bind: SocketAddr::from(([127, 0, 0, 1], 8080)),
            engine: EngineParams::default(),
            session_ttl: Duration::from_secs(30 * 60),
            cors_origins: Vec::new(),
            replay_seed: None,
        }
    }
}

impl ServerConfig {
    /// Deterministic settings for replay and tests.
    pub fn replay(seed: u64, swaps: u64) -> Self {
        ServerConfig {
            engine: EngineParams {
                budget: Budget::Swaps { max: swaps },
                ..EngineParams::default()
            },
            replay_seed: Some(seed),
            ..ServerConfig::default()
        }
    }
}

struct Entry {
    session: Session,
    last_used: Instant,
}

struct Ids {
    rng: ChaCha20Rng,
    /// Logical clock in seconds, used instead of the wall clock in replay mode.
    ticks: i64,
}

pub struct AppState {
    engine: Arc<Engine>,
    config: ServerConfig,
    sessions: StdMutex<HashMap<String, Arc<Mutex<Entry>>>>,
    ids: StdMutex<Ids>,
}

impl AppState {
    pub fn new(engine: Arc<Engine>, config: ServerConfig) -> Arc<Self> {
        let rng = match config.replay_seed {
            Some(seed) => ChaCha20Rng::seed_from_u64(seed),
            None => ChaCha20Rng::from_entropy(),
        };
        Arc::new(AppState {
            engine,
            config,
            sessions: StdMutex::new(HashMap::new()),
            ids: StdMutex::new(Ids { rng, ticks: 0 }),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session map lock").len()
    }

    fn new_id(&self) -> String {
        let bits: u128 = self.ids.lock().expect("id lock").rng.gen();
        format!("{bits:032x}")
    }

    fn now(&self) -> DateTime<Utc> {
        if self.config.replay_seed.is_some() {
            let mut ids = self.ids.lock().expect("id lock");
            ids.ticks += 1;
            DateTime::from_timestamp(ids.ticks, 0).expect("small timestamp")
        } else {
            Utc::now()
        }
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Mutex<Entry>>> {
        self.sessions
            .lock()
            .expect("session map lock")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("unknown session `{id}`")))
    }

    /// Drops sessions idle for longer than the TTL; returns how many were dropped.
    pub fn evict_idle(&self, now: Instant) -> usize {
        let ttl = self.config.session_ttl;
        let mut map = self.sessions.lock().expect("session map lock");
        let before = map.len();
        // A session locked by a running request is in use, so it stays.
        map.retain(|_, e| match e.try_lock() {
            Ok(entry) => now.duration_since(entry.last_used) <= ttl,
            Err(_) => true,
        });
        before - map.len()
    }
}

fn parse<T: DeserializeOwned>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

fn resolve_mindset(r: MindsetRef) -> ApiResult<Mindset> {
    match r {
        MindsetRef::Label(label) => builtin_by_label(&label).ok_or_else(|| {
            let valid: Vec<String> = catalog()
                .iter()
                .map(|e| format!("{} ({})", e.mindset.label, e.key))
                .collect();
            ApiError::bad_request(format!("unknown mindset `{label}`; valid: {}", valid.join(", ")))
        }),
        MindsetRef::Custom(m) => {
            if m.priors.sum() <= 0.0 {
                return Err(ApiError::bad_request("custom mindset priors must not all be zero"));
            }
            Ok(m)
        }
    }
}

async fn list_mindsets() -> Json<serde_json::Value> {
    Json(json!({ "mindsets": catalog() }))
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: CreateSession = parse(&body)?;
    let context = req.context()?;
    let id = state.new_id();
    let session = Session::new(id.clone(), context);
    let view = SessionView::new(state.engine.dataset(), &session);
    let entry = Entry {
        session,
        last_used: Instant::now(),
    };
    state
        .sessions
        .lock()
        .expect("session map lock")
        .insert(id.clone(), Arc::new(Mutex::new(entry)));
    let location = HeaderValue::from_str(&format!("/v1/sessions/{id}")).expect("hex id is a valid header");
    Ok((StatusCode::CREATED, [(header::LOCATION, location)], Json(view)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let entry = state.entry(&id)?;
    let mut entry = entry.lock().await;
    entry.last_used = Instant::now();
    Ok(Json(SessionView::new(state.engine.dataset(), &entry.session)))
}

async fn recommend(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Response> {
    let req: RecommendRequest = parse(&body)?;
    let mindset = resolve_mindset(req.mindset)?;
    let params = req.overrides.apply(&state.config.engine)?;
    let entry = state.entry(&id)?;
    let mut entry = entry.lock_owned().await;
    let recorded_at = state.now();
    let engine = state.engine.clone();
    let (entry, result) = tokio::task::spawn_blocking(move || {
        let result = engine
            .iterate_at(&mut entry.session, &mindset, &params, recorded_at)
            .map(|rec| {
                let view = RecommendationView::new(engine.dataset(), &entry.session, &rec, params);
                (view, rec.timings)
            });
        entry.last_used = Instant::now();
        (entry, result)
    })
    .await
    .map_err(|e| ApiError::internal(format!("recommendation task failed: {e}")))?;
    drop(entry);
    let (view, t) = result?;
    let ms = |d: Duration| d.as_secs_f64() * 1e3;
    let timing = server_timing(&[
        ("nearby", ms(t.nearby)),
        ("checkins", ms(t.checkins)),
        ("mining", ms(t.mining)),
        ("maximize", ms(t.maximize)),
        ("total", ms(t.total())),
    ]);
    let timing = HeaderValue::from_str(&timing).expect("ascii header");
    Ok(([(SERVER_TIMING, timing)], Json(view)).into_response())
}

async fn bookmark(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<BookmarkView>> {
    let req: BookmarkRequest = parse(&body)?;
    let entry = state.entry(&id)?;
    let mut entry = entry.lock().await;
    entry.last_used = Instant::now();
    let added = state.engine.bookmark(&mut entry.session, &req.poi_id)?;
    let ds = state.engine.dataset();
    let poi = ds.poi_by_id(&req.poi_id).expect("bookmarked POI exists");
    Ok(Json(BookmarkView {
        added,
        poi: PoiView::new(ds, poi, Some(entry.session.context.loc)),
        portfolio_size: entry.session.portfolio.len(),
        weights: entry.session.weights,
    }))
}

async fn get_poi(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> ApiResult<Json<PoiView>> {
    let ds = state.engine.dataset();
    let idx = ds
        .poi_by_id(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown POI `{id}`")))?;
    Ok(Json(PoiView::new(ds, idx, None)))
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

fn cors(origins: &[String]) -> Option<CorsLayer> {
    if origins.is_empty() {
        return None;
    }
    let allow = if origins.iter().any(|o| o == "*") {
        AllowOrigin::any()
    } else {
        AllowOrigin::list(origins.iter().filter_map(|o| HeaderValue::from_str(o).ok()))
    };
    Some(
        CorsLayer::new()
            .allow_origin(allow)
            .allow_methods([Method::GET, Method::POST])
            .allow_headers([header::CONTENT_TYPE])
            .expose_headers([SERVER_TIMING, header::LOCATION]),
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = cors(&state.config.cors_origins);
    let app = Router::new()
        .route("/v1/mindsets", get(list_mindsets))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/recommend", post(recommend))
        .route("/v1/sessions/{id}/bookmarks", post(bookmark))
        .route("/v1/pois/{id}", get(get_poi))
        .fallback(fallback)
        .with_state(state);
    match cors {
        Some(layer) => app.layer(layer),
        None => app,
    }
}

/// Binds, serves until Ctrl-C, and evicts idle sessions in the background.
pub async fn serve(engine: Arc<Engine>, config: ServerConfig) -> std::io::Result<()> {
    let bind = config.bind;
    let ttl = config.session_ttl;
    let state = AppState::new(engine, config);
    let sweeper = state.clone();
    tokio::spawn(async move {
        let mut tick = tokio::time::interval((ttl / 4).max(Duration::from_secs(1)));
        loop {
            tick.tick().await;
            let dropped = sweeper.evict_idle(Instant::now());
            if dropped > 0 {
                tracing::debug!(dropped, "evicted idle sessions");
            }
        }
    });
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
