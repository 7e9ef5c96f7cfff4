//! HTTP routes.

use std::collections::BTreeMap;
use std::convert::Infallible;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::Deserialize;
use tokio::sync::{broadcast, Mutex};

use saag_core::TileCatalog;

use crate::api::*;
use crate::error::ServiceError;
use crate::session::{ParamStore, Session, StreamMsg};

#[derive(Debug, Clone, Default)]
pub struct ServiceConfig {
    pub params: ParamStore,
    /// When set, each session's event log is appended to `<dir>/<id>.ndjson`.
    pub log_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

struct Inner {
    config: ServiceConfig,
    catalog: Arc<TileCatalog>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: ServiceConfig, catalog: Arc<TileCatalog>) -> AppState {
        AppState(Arc::new(Inner { config, catalog, sessions: RwLock::new(BTreeMap::new()), next_id: AtomicU64::new(1) }))
    }

    pub fn session(&self, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
        self.0.sessions.read().expect("session table").get(id).cloned().ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    pub fn insert(&self, session: Session) -> Arc<Mutex<Session>> {
        let id = session.id().to_string();
        let s = Arc::new(Mutex::new(session));
        self.0.sessions.write().expect("session table").insert(id, s.clone());
        s
    }

    pub fn create(&self, config: SessionConfig) -> Result<Snapshot, ServiceError> {
        let id = format!("s{}", self.0.next_id.fetch_add(1, Ordering::Relaxed));
        let session = Session::create(id, config, self.0.catalog.clone(), &self.0.config.params)?;
        self.persist(&session, 0, true)?;
        let snap = session.snapshot();
        self.insert(session);
        Ok(snap)
    }

    fn persist(&self, session: &Session, from: usize, fresh: bool) -> Result<(), ServiceError> {
        let Some(dir) = &self.0.config.log_dir else { return Ok(()) };
        let io = |e: std::io::Error| ServiceError::Internal(format!("event log: {e}"));
        let path = dir.join(format!("{}.ndjson", session.id()));
        let mut file = std::fs::OpenOptions::new().create(true).append(true).truncate(false).open(path).map_err(io)?;
        let mut text = String::new();
        if fresh {
            text.push_str(&serde_json::to_string(&session.log_header()).expect("serializable"));
            text.push('\n');
        }
        for e in &session.log()[from..] {
            text.push_str(&serde_json::to_string(e).expect("serializable"));
            text.push('\n');
        }
        file.write_all(text.as_bytes()).map_err(io)
    }
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> Result<T, ServiceError> {
    payload.map(|Json(v)| v).map_err(|e| ServiceError::Malformed(e.body_text()))
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> Result<T, ServiceError> {
    q.map(|Query(v)| v).map_err(|e| ServiceError::Malformed(e.body_text()))
}

async fn create_session(
    State(app): State<AppState>,
    payload: Result<Json<SessionConfig>, JsonRejection>,
) -> Result<(StatusCode, Json<Snapshot>), ServiceError> {
    let config = body(payload)?;
    let app2 = app.clone();
    let snap = tokio::task::spawn_blocking(move || app2.create(config))
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(snap)))
}

async fn get_state(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<Snapshot>, ServiceError> {
    Ok(Json(app.session(&id)?.lock().await.snapshot()))
}

async fn get_actions(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<ActionsResponse>, ServiceError> {
    Ok(Json(app.session(&id)?.lock().await.actions()?))
}

async fn act(
    State(app): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<ActRequest>, JsonRejection>,
) -> Result<Json<ActResponse>, ServiceError> {
    let req = body(payload)?;
    let session = app.session(&id)?;
    let mut s = session.lock().await;
    let from = s.log().len();
    let result = s.submit(req.seat, req.action);
    app.persist(&s, from, false)?;
    let events = result?;
    Ok(Json(ActResponse { events, state: s.snapshot() }))
}

#[derive(Debug, Deserialize)]
struct PredictionsQuery {
    #[serde(default = "three")]
    k: usize,
}

fn three() -> usize {
    3
}

async fn get_predictions(
    State(app): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<PredictionsQuery>, QueryRejection>,
) -> Result<Json<PredictionsResponse>, ServiceError> {
    let q = query(q)?;
    Ok(Json(app.session(&id)?.lock().await.predictions(q.k)?))
}

async fn post_gaze(
    State(app): State<AppState>,
    Path(id): Path<String>,
    payload: Result<Json<GazeRequest>, JsonRejection>,
) -> Result<Json<GazeResponse>, ServiceError> {
    let req = body(payload)?;
    Ok(Json(app.session(&id)?.lock().await.post_gaze(req.seat, &req.samples)?))
}

#[derive(Debug, Deserialize)]
struct HeatmapQuery {
    seat: usize,
    half_life_ms: Option<f64>,
}

async fn get_heatmap(
    State(app): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<HeatmapQuery>, QueryRejection>,
) -> Result<Json<HeatmapResponse>, ServiceError> {
    let q = query(q)?;
    Ok(Json(app.session(&id)?.lock().await.heatmap(q.seat, q.half_life_ms)?))
}

async fn get_log(State(app): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ServiceError> {
    let text = app.session(&id)?.lock().await.log_text();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    #[serde(default)]
    since: u64,
}

fn sse_event(e: &SeqEvent) -> Event {
    let kind = serde_json::to_value(&e.event).ok().and_then(|v| v["kind"].as_str().map(String::from)).unwrap_or_default();
    Event::default().event(kind).id(e.seq.to_string()).json_data(e).expect("serializable")
}

fn game_over(scores: &[u32]) -> Event {
    Event::default().event("game_over").json_data(serde_json::json!({ "scores": scores })).expect("serializable")
}

/// Backlog from `since`, then live events; ends after `game_over`.
async fn events(
    State(app): State<AppState>,
    Path(id): Path<String>,
    q: Result<Query<EventsQuery>, QueryRejection>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let q = query(q)?;
    let session = app.session(&id)?;
    let s = session.lock().await;
    let rx = s.subscribe();
    let backlog = s.events_since(q.since);
    let finished = s.state().is_finished().then(|| s.state().scores());
    drop(s);
    let next = backlog.last().map_or(q.since, |e| e.seq + 1);
    let head: Vec<Event> = backlog.iter().map(sse_event).collect();
    let live: futures::stream::BoxStream<'static, Event> = match finished {
        Some(scores) => stream::iter([game_over(&scores)]).boxed(),
        None => stream::unfold(Some((rx, next)), |st| async move {
            let (mut rx, next) = st?;
            loop {
                match rx.recv().await {
                    Ok(StreamMsg::Event(e)) if e.seq < next => continue,
                    Ok(StreamMsg::Event(e)) => {
                        let n = e.seq + 1;
                        return Some((sse_event(&e), Some((rx, n))));
                    }
                    Ok(StreamMsg::GameOver(scores)) => return Some((game_over(&scores), None)),
                    Err(broadcast::error::RecvError::Lagged(_)) => continue,
                    Err(broadcast::error::RecvError::Closed) => return None,
                }
            }
        })
        .boxed(),
    };
    Ok(Sse::new(stream::iter(head).chain(live).map(Ok)).keep_alive(KeepAlive::default()))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/state", get(get_state))
        .route("/sessions/{id}/actions", get(get_actions))
        .route("/sessions/{id}/act", post(act))
        .route("/sessions/{id}/predictions", get(get_predictions))
        .route("/sessions/{id}/gaze", post(post_gaze))
        .route("/sessions/{id}/heatmap", get(get_heatmap))
        .route("/sessions/{id}/events", get(events))
        .route("/sessions/{id}/log", get(get_log))
        .with_state(state)
}

/// Binds `addr` and serves until the process ends.
pub async fn serve(addr: SocketAddr, config: ServiceConfig, catalog: Arc<TileCatalog>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(AppState::new(config, catalog))).await
}
