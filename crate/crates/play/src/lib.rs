//! HTTP play service: people play a rule board by board, and every move,
//! finger slip and guess is recorded in the transcript format used for
//! learning runs.
//!
//! | Method | Path | Body |
//! |---|---|---|
//! | POST | `/sessions` | `{rule \| rules, genParams?, seed?}` |
//! | GET | `/sessions/{id}` | |
//! | POST | `/sessions/{id}/moves` | `{row, col, bucket}` |
//! | POST | `/sessions/{id}/finger-slip` | `{row, col}` |
//! | POST | `/sessions/{id}/guess` | `{text}` |
//! | POST | `/sessions/{id}/episodes` | bonus episode on the current rule |
//! | POST | `/sessions/{id}/next-rule` | |
//! | GET | `/sessions/{id}/transcript` | JSON lines |

pub mod session;

use std::collections::HashMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock, TryLockError};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gohr_core::boardgen::GenParams;
use gohr_core::rng::mix64;
use gohr_core::transcript::{to_jsonl, TranscriptRecord};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

pub use session::{MoveResult, Phase, Session, SessionError, SessionView, MAX_EPISODES, MIN_EPISODES};

/// Shared service state. Sessions are locked individually; a request that
/// finds its session busy is turned away instead of queued.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    data_dir: Option<PathBuf>,
}

impl AppState {
    /// Keeps sessions in memory only.
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Also appends every transcript record to `<dir>/<session>.jsonl`.
    pub fn with_data_dir(dir: impl Into<PathBuf>) -> std::io::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        Ok(Self { data_dir: Some(dir), ..Self::default() })
    }

    pub fn data_dir(&self) -> Option<&Path> {
        self.data_dir.as_deref()
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not-found", format!("no session `{id}`"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let (status, code) = match &e {
            SessionError::UnknownRule(_) => (StatusCode::BAD_REQUEST, "unknown-rule"),
            SessionError::NoRules => (StatusCode::BAD_REQUEST, "no-rules"),
            SessionError::BadGenParams(_) => (StatusCode::BAD_REQUEST, "bad-gen-params"),
            SessionError::OutOfRange(_) => (StatusCode::UNPROCESSABLE_ENTITY, "out-of-range"),
            SessionError::Conflict(_) => (StatusCode::CONFLICT, "wrong-phase"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad-request", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.code, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
struct CreateRequest {
    rule: Option<String>,
    rules: Option<Vec<String>>,
    gen_params: Option<GenParams>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
struct MoveRequest {
    row: i64,
    col: i64,
    bucket: i64,
}

#[derive(Deserialize)]
struct CellRequest {
    row: i64,
    col: i64,
}

#[derive(Deserialize)]
struct GuessRequest {
    #[serde(default)]
    text: String,
}

fn fresh_seed() -> u64 {
    let nanos = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_nanos() as u64);
    mix64(nanos ^ u64::from(std::process::id()))
}

impl AppState {
    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        let map = self.sessions.read().expect("session map poisoned");
        map.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    /// Runs `f` on the session under its lock and persists the records it
    /// appended.
    fn with_session<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> ApiResult<T>) -> ApiResult<T> {
        let handle = self.session(id)?;
        let mut session = match handle.try_lock() {
            Ok(s) => s,
            Err(TryLockError::WouldBlock) => {
                return Err(ApiError::new(StatusCode::CONFLICT, "busy", "another request for this session is in flight"))
            }
            Err(TryLockError::Poisoned(_)) => {
                return Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", "session state is corrupt"))
            }
        };
        let before = session.transcript().len();
        let out = f(&mut session)?;
        self.persist(session.id(), &session.transcript()[before..])?;
        Ok(out)
    }

    fn persist(&self, id: &str, records: &[TranscriptRecord]) -> ApiResult<()> {
        let Some(dir) = &self.data_dir else { return Ok(()) };
        if records.is_empty() {
            return Ok(());
        }
        let io_err = |e: std::io::Error| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "io", e.to_string());
        let mut f = OpenOptions::new().create(true).append(true).open(dir.join(format!("{id}.jsonl"))).map_err(io_err)?;
        f.write_all(to_jsonl(records).as_bytes()).map_err(io_err)
    }
}

async fn create_session(
    State(app): State<AppState>,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let Json(req) = body?;
    let rules = match (req.rule, req.rules) {
        (Some(r), None) => vec![r],
        (None, Some(rs)) => rs,
        (Some(_), Some(_)) => {
            return Err(ApiError::new(StatusCode::BAD_REQUEST, "bad-request", "give either `rule` or `rules`"))
        }
        (None, None) => return Err(SessionError::NoRules.into()),
    };
    let id = uuid::Uuid::new_v4().simple().to_string();
    let session = Session::new(id.clone(), rules, req.gen_params, req.seed.unwrap_or_else(fresh_seed))?;
    let view = session.view();
    app.persist(&id, session.transcript())?;
    app.sessions.write().expect("session map poisoned").insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_session(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    app.with_session(&id, |s| Ok(Json(s.view())))
}

async fn post_move(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<MoveRequest>, JsonRejection>,
) -> ApiResult<Json<MoveResult>> {
    app.session(&id)?;
    let Json(req) = body?;
    app.with_session(&id, |s| {
        let accepted = s.play_move(req.row, req.col, req.bucket)?;
        Ok(Json(MoveResult { accepted, view: s.view() }))
    })
}

async fn post_finger_slip(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<CellRequest>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    app.session(&id)?;
    let Json(req) = body?;
    app.with_session(&id, |s| {
        s.finger_slip(req.row, req.col)?;
        Ok(Json(s.view()))
    })
}

async fn post_guess(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<GuessRequest>, JsonRejection>,
) -> ApiResult<Json<SessionView>> {
    app.session(&id)?;
    let Json(req) = body?;
    app.with_session(&id, |s| {
        s.guess(&req.text)?;
        Ok(Json(s.view()))
    })
}

async fn post_episode(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    app.with_session(&id, |s| {
        s.continue_rule()?;
        Ok(Json(s.view()))
    })
}

async fn post_next_rule(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<SessionView>> {
    app.with_session(&id, |s| {
        s.next_rule()?;
        Ok(Json(s.view()))
    })
}

async fn get_transcript(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let body = app.with_session(&id, |s| Ok(to_jsonl(s.transcript())))?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

/// The API routes with permissive CORS.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/moves", post(post_move))
        .route("/sessions/{id}/finger-slip", post(post_finger_slip))
        .route("/sessions/{id}/guess", post(post_guess))
        .route("/sessions/{id}/episodes", post(post_episode))
        .route("/sessions/{id}/next-rule", post(post_next_rule))
        .route("/sessions/{id}/transcript", get(get_transcript))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

/// Serves the API on `addr`, and the files under `static_dir` (a built web
/// client) for any other path.
pub async fn serve(addr: SocketAddr, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let mut app = router(state);
    if let Some(dir) = static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn busy_session_is_rejected() {
        let app = AppState::in_memory();
        let s = Session::new("a".into(), vec!["SM".into()], None, 1).unwrap();
        app.sessions.write().unwrap().insert("a".into(), Arc::new(Mutex::new(s)));
        let handle = app.session("a").unwrap();
        let _guard = handle.lock().unwrap();
        let err = app.with_session("a", |s| Ok(s.view())).unwrap_err();
        assert_eq!((err.status, err.code), (StatusCode::CONFLICT, "busy"));
    }
}
