//! JSON-over-HTTP API for audit sessions.
//!
//! Mutating requests on one session are serialized: a request that finds
//! the session busy gets `409` with `Retry-After` instead of waiting. Reads
//! are served from the last committed in-memory snapshot.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::{Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use residua_core::Error as CoreError;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::OwnedMutexGuard;

use crate::report::{self, render};
use crate::session::{Session, SessionError, Store};

pub struct AppState {
    store: Store,
    token: Option<String>,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
    writers: Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>,
}

impl AppState {
    pub fn new(store: Store, token: Option<String>) -> Arc<AppState> {
        Arc::new(AppState { store, token, sessions: RwLock::default(), writers: Mutex::default() })
    }

    /// Claims the single writer slot of a session without waiting.
    pub fn try_write(&self, id: &str) -> Result<OwnedMutexGuard<()>, SessionError> {
        let lock = self.writers.lock().expect("writer table").entry(id.to_string()).or_default().clone();
        lock.try_lock_owned().map_err(|_| SessionError::Busy(id.to_string()))
    }

    fn read(&self, id: &str) -> Result<Arc<Session>, SessionError> {
        if let Some(s) = self.sessions.read().expect("session cache").get(id) {
            return Ok(s.clone());
        }
        let s = Arc::new(self.store.load(id)?);
        self.sessions.write().expect("session cache").insert(id.to_string(), s.clone());
        Ok(s)
    }

    fn commit(&self, s: Session) -> Result<Arc<Session>, SessionError> {
        self.store.save(&s)?;
        let s = Arc::new(s);
        self.sessions.write().expect("session cache").insert(s.id.clone(), s.clone());
        Ok(s)
    }

    /// Runs `change` on a private copy and publishes it once saved.
    fn mutate(&self, id: &str, change: impl FnOnce(&mut Session) -> Result<(), SessionError>) -> Result<Arc<Session>, SessionError> {
        let _guard = self.try_write(id)?;
        let mut s = (*self.read(id)?).clone();
        change(&mut s)?;
        self.commit(s)
    }
}

pub struct ApiError(SessionError);

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let message = self.0.to_string();
        let (status, code, extra) = match &self.0 {
            SessionError::Engine(e) => match e {
                CoreError::Parse { span, .. } => (StatusCode::BAD_REQUEST, "parse", json!({"span": span})),
                CoreError::Log { line, .. } => (StatusCode::BAD_REQUEST, "log", json!({"line": line})),
                CoreError::Json(_) => (StatusCode::BAD_REQUEST, "parse", json!({})),
                CoreError::Conflict(lines) => (StatusCode::UNPROCESSABLE_ENTITY, "conflict", json!({"problems": lines})),
                CoreError::Contradiction { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "contradiction", json!({})),
                _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", json!({})),
            },
            SessionError::Modes(d) => (StatusCode::UNPROCESSABLE_ENTITY, "modes", json!({"diagnostics": d})),
            SessionError::NotPending(_) => (StatusCode::UNPROCESSABLE_ENTITY, "not_pending", json!({})),
            SessionError::Justification => (StatusCode::UNPROCESSABLE_ENTITY, "justification", json!({})),
            SessionError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found", json!({})),
            SessionError::Busy(_) => (StatusCode::CONFLICT, "busy", json!({})),
            SessionError::Corrupt(_) | SessionError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal", json!({})),
        };
        let mut body = json!({"error": code, "message": message});
        if let (Some(b), Some(x)) = (body.as_object_mut(), extra.as_object()) {
            b.extend(x.clone());
        }
        let mut resp = pretty(status, &body);
        if status == StatusCode::CONFLICT {
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from_static("1"));
        }
        resp
    }
}

/// Every body is rendered the way the CLI prints it.
fn pretty<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let mut text = serde_json::to_string_pretty(body).expect("responses serialize");
    text.push('\n');
    (status, [(header::CONTENT_TYPE, "application/json")], text).into_response()
}

fn report_response(status: StatusCode, s: &Session) -> Result<Response, ApiError> {
    let r = report::report(s)?;
    Ok((status, [(header::CONTENT_TYPE, "application/json")], render(&r)).into_response())
}

#[derive(Deserialize)]
struct CreateBody {
    policy: String,
    #[serde(default)]
    schema: String,
}

#[derive(Deserialize)]
struct LogBody {
    log: String,
}

#[derive(Deserialize)]
struct AssertBody {
    atom: String,
    value: bool,
    justification: String,
}

async fn create(State(st): State<Arc<AppState>>, Json(b): Json<CreateBody>) -> Result<Response, ApiError> {
    let s = st.store.create(&b.policy, &b.schema)?;
    let s = st.commit(s)?;
    report_response(StatusCode::CREATED, &s)
}

async fn ingest(State(st): State<Arc<AppState>>, Path(id): Path<String>, Json(b): Json<LogBody>) -> Result<Response, ApiError> {
    let s = st.mutate(&id, |s| s.ingest(&b.log))?;
    report_response(StatusCode::OK, &s)
}

async fn iterate(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = st.mutate(&id, Session::iterate)?;
    report_response(StatusCode::OK, &s)
}

async fn assert(State(st): State<Arc<AppState>>, Path(id): Path<String>, Json(b): Json<AssertBody>) -> Result<Response, ApiError> {
    let s = st.mutate(&id, |s| s.assert(&b.atom, b.value, &b.justification))?;
    report_response(StatusCode::OK, &s)
}

async fn residual(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = st.read(&id)?;
    Ok(pretty(StatusCode::OK, &report::residual(&s)?))
}

async fn pending(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = st.read(&id)?;
    Ok(pretty(StatusCode::OK, &json!({"pending": report::pending(&s)?})))
}

async fn get_report(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let s = st.read(&id)?;
    report_response(StatusCode::OK, &s)
}

async fn bearer(State(st): State<Arc<AppState>>, req: Request, next: Next) -> Response {
    if let Some(token) = &st.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == token);
        if !ok {
            return pretty(StatusCode::UNAUTHORIZED, &json!({"error": "unauthorized", "message": "missing or wrong bearer token"}));
        }
    }
    next.run(req).await
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/logs", post(ingest))
        .route("/sessions/{id}/iterate", post(iterate))
        .route("/sessions/{id}/residual", get(residual))
        .route("/sessions/{id}/pending", get(pending))
        .route("/sessions/{id}/assertions", post(assert))
        .route("/sessions/{id}/report", get(get_report))
        .layer(middleware::from_fn_with_state(state.clone(), bearer))
        .with_state(state)
}
