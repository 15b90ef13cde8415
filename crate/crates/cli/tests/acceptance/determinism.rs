//! Byte-identical simulation reports and replayable server responses.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use axum::body::Body;
use axum::http::{header, Request};
use axum::Router;
use http_body_util::BodyExt;
use likemind_core::simulator::sample_session;
use likemind_server::{router, AppState, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

use crate::simulation::engine;
use crate::{report_dir, Verdict};

const REPLAY_SEED: u64 = 42;
const REPLAY_SWAPS: u64 = 1000;

fn simulate_csv(out: &std::path::Path) -> Vec<u8> {
    let status = Command::new(env!("CARGO_BIN_EXE_likemind"))
        .args(["simulate", "--synthetic", "7", "--sessions", "20", "--iterations", "20", "--seed", "9"])
        .args(["--group-strategy", "optimal", "--mindset-strategy", "optimal", "--theta", "0.2"])
        .args(["--baseline", "popularity", "--baseline", "diversity", "--out"])
        .arg(out)
        .stderr(Stdio::null())
        .status()
        .expect("running likemind simulate");
    assert!(status.success(), "likemind simulate exited with {status}");
    fs::read(out).expect("reading the simulation CSV")
}

fn csv_identical() -> (bool, String) {
    let dir = report_dir();
    let a = simulate_csv(&dir.join("determinism-a.csv"));
    let b = simulate_csv(&dir.join("determinism-b.csv"));
    let rows = a.iter().filter(|&&c| c == b'\n').count();
    (a == b && rows > 1, format!("simulation CSV {} bytes, {rows} lines, identical: {}", a.len(), a == b))
}

#[derive(Debug, Clone, PartialEq)]
struct Logged {
    method: String,
    uri: String,
    body: Option<Value>,
}

impl Logged {
    fn to_json(&self) -> Value {
        json!({"method": self.method, "uri": self.uri, "body": self.body})
    }

    fn from_json(v: &Value) -> Self {
        Logged {
            method: v["method"].as_str().unwrap().to_string(),
            uri: v["uri"].as_str().unwrap().to_string(),
            body: Some(v["body"].clone()).filter(|b| !b.is_null()),
        }
    }
}

async fn send(app: &Router, req: &Logged) -> Value {
    let mut builder = Request::builder().method(req.method.as_str()).uri(&req.uri);
    let body = match &req.body {
        Some(v) => {
            builder = builder.header(header::CONTENT_TYPE, "application/json");
            Body::from(v.to_string())
        }
        None => Body::empty(),
    };
    let res = app.clone().oneshot(builder.body(body).unwrap()).await.unwrap();
    let status = res.status().as_u16();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    let body: Value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    json!({"status": status, "body": body})
}

fn fresh_app() -> Router {
    router(AppState::new(engine(), ServerConfig::replay(REPLAY_SEED, REPLAY_SWAPS)))
}

/// Drives a session interactively and returns the concrete requests with their responses.
async fn record() -> (Vec<Logged>, Vec<Value>) {
    let app = fresh_app();
    let ctx = sample_session(engine().dataset(), 0, 0, 500.0).unwrap().context;
    let mut log = Vec::new();
    let mut responses = Vec::new();
    let step = |log: &mut Vec<Logged>, method: &str, uri: String, body: Option<Value>| {
        let req = Logged {
            method: method.into(),
            uri,
            body,
        };
        log.push(req.clone());
        req
    };

    let create = step(
        &mut log,
        "POST",
        "/v1/sessions".into(),
        Some(json!({"lat": ctx.loc.lat, "lon": ctx.loc.lon, "wall_time": ctx.wall_time.format("%Y-%m-%dT%H:%M:%S").to_string()})),
    );
    let created = send(&app, &create).await;
    let id = created["body"]["session_id"].as_str().expect("session id").to_string();
    responses.push(created);

    let first = step(&mut log, "POST", format!("/v1/sessions/{id}/recommend"), Some(json!({"mindset": "me time"})));
    let rec = send(&app, &first).await;
    let pick = rec["body"]["groups"][0]["pois"][0]["id"].as_str().expect("a displayed POI").to_string();
    responses.push(rec);

    let followups = vec![
        step(&mut log, "POST", format!("/v1/sessions/{id}/bookmarks"), Some(json!({"poi_id": pick}))),
        step(
            &mut log,
            "POST",
            format!("/v1/sessions/{id}/recommend"),
            Some(json!({"mindset": "I'm hungry", "overrides": {"k": 3, "k_prime": 4}})),
        ),
        step(
            &mut log,
            "POST",
            format!("/v1/sessions/{id}/recommend"),
            Some(json!({"mindset": {"label": "quiet and big", "priors": {"size": 0.6, "prestige": 0.4}}})),
        ),
        step(&mut log, "GET", format!("/v1/sessions/{id}"), None),
        step(&mut log, "GET", format!("/v1/pois/{pick}"), None),
    ];
    for req in &followups {
        responses.push(send(&app, req).await);
    }
    (log, responses)
}

async fn replay(log: &[Logged]) -> Vec<Value> {
    let app = fresh_app();
    let mut out = Vec::new();
    for req in log {
        out.push(send(&app, req).await);
    }
    out
}

fn replays_identical() -> (bool, String) {
    let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
    let (log, recorded) = rt.block_on(record());

    let path = report_dir().join("replay-log.jsonl");
    let mut file = fs::File::create(&path).unwrap();
    for req in &log {
        writeln!(file, "{}", req.to_json()).unwrap();
    }
    drop(file);
    let loaded: Vec<Logged> = BufReader::new(fs::File::open(&path).unwrap())
        .lines()
        .map(|l| Logged::from_json(&serde_json::from_str(&l.unwrap()).unwrap()))
        .collect();

    let first = rt.block_on(replay(&loaded));
    let second = rt.block_on(replay(&loaded));
    let all_ok = recorded.iter().all(|r| r["status"].as_u64().is_some_and(|s| s < 300));
    let same = first == second && first == recorded;
    (
        same && all_ok,
        format!(
            "{} logged requests replayed twice, responses identical: {same}, all successful: {all_ok}; log {}",
            loaded.len(),
            path.display()
        ),
    )
}

pub fn run() -> Verdict {
    let (csv_ok, csv_detail) = csv_identical();
    let (replay_ok, replay_detail) = replays_identical();
    Verdict::new(csv_ok && replay_ok, format!("{csv_detail}; {replay_detail}"))
}
