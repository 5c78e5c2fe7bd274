//! HTTP service: compute endpoints, sessions, stored results, health and the OpenAPI document.

use std::fmt;
use std::io;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use powerkit_core::session::{apply, read_input, ModelClient, SessionState, StubClient};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::api::{self, ApiError, ENDPOINTS};
use crate::corpus::{self, CorpusError};
use crate::model::HttpModelClient;
use crate::openapi::{self, PATH_PREFIX};
use crate::store::{Clock, Lookup, ResultStore, SessionStore, SystemClock};

pub const ENV_HOST: &str = "POWERKIT_HOST";
pub const ENV_PORT: &str = "POWERKIT_PORT";
pub const ENV_DATA_DIR: &str = "POWERKIT_DATA_DIR";
pub const ENV_SESSION_TTL: &str = "POWERKIT_SESSION_TTL_SECS";
pub const ENV_MODEL_ENDPOINT: &str = "POWERKIT_MODEL_ENDPOINT";
pub const ENV_MODEL: &str = "POWERKIT_MODEL";
pub const ENV_CORPUS: &str = "POWERKIT_CORPUS";

pub const DEFAULT_HOST: &str = "0.0.0.0";
pub const DEFAULT_PORT: u16 = 5000;
pub const DEFAULT_DATA_DIR: &str = "powerkit-data";
pub const DEFAULT_SESSION_TTL_SECS: u64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub host: String,
    pub port: u16,
    pub data_dir: PathBuf,
    pub session_ttl_secs: u64,
    pub model_endpoint: Option<String>,
    pub model: Option<String>,
    /// Scenario corpus; the bundled one when `None`.
    pub corpus: Option<PathBuf>,
}

impl Config {
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    /// Builds a config from any variable source; unset or empty variables take defaults.
    pub fn from_lookup(var: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let get = |k: &str| var(k).filter(|v| !v.trim().is_empty());
        let port = match get(ENV_PORT) {
            Some(p) => p.trim().parse().map_err(|_| format!("{ENV_PORT} must be a port number, got `{p}`"))?,
            None => DEFAULT_PORT,
        };
        let session_ttl_secs = match get(ENV_SESSION_TTL) {
            Some(t) => match t.trim().parse() {
                Ok(v) if v > 0 => v,
                _ => return Err(format!("{ENV_SESSION_TTL} must be a positive number of seconds, got `{t}`")),
            },
            None => DEFAULT_SESSION_TTL_SECS,
        };
        Ok(Self {
            host: get(ENV_HOST).unwrap_or_else(|| DEFAULT_HOST.into()),
            port,
            data_dir: get(ENV_DATA_DIR).unwrap_or_else(|| DEFAULT_DATA_DIR.into()).into(),
            session_ttl_secs,
            model_endpoint: get(ENV_MODEL_ENDPOINT),
            model: get(ENV_MODEL),
            corpus: get(ENV_CORPUS).map(PathBuf::from),
        })
    }
}

#[derive(Debug)]
pub enum InitError {
    Config(String),
    Corpus(CorpusError),
    Store(io::Error),
    Listen(io::Error),
}

impl InitError {
    pub fn exit_code(&self) -> u8 {
        match self {
            InitError::Corpus(_) => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for InitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitError::Config(m) => write!(f, "configuration: {m}"),
            InitError::Corpus(e) => write!(f, "{e}"),
            InitError::Store(e) => write!(f, "result store: {e}"),
            InitError::Listen(e) => write!(f, "listener: {e}"),
        }
    }
}

impl std::error::Error for InitError {}

pub struct AppState {
    pub results: ResultStore,
    pub sessions: SessionStore,
    pub model: Arc<dyn ModelClient + Send + Sync>,
    pub scenarios: usize,
    openapi: String,
}

/// Loads the corpus, opens the result log and prepares the route data.
pub fn init(config: &Config, clock: Arc<dyn Clock>) -> Result<Arc<AppState>, InitError> {
    let scenarios = corpus::load(config.corpus.as_deref()).map_err(InitError::Corpus)?;
    let results = ResultStore::open(&config.data_dir).map_err(InitError::Store)?;
    let model: Arc<dyn ModelClient + Send + Sync> = match &config.model_endpoint {
        Some(url) => Arc::new(HttpModelClient::new(url.clone(), config.model.clone(), Duration::from_secs(30))),
        None => Arc::new(StubClient),
    };
    Ok(Arc::new(AppState {
        results,
        sessions: SessionStore::new(config.session_ttl_secs, clock),
        model,
        scenarios: scenarios.len(),
        openapi: serde_json::to_string(&openapi::document()).expect("document serializes"),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route(&format!("{PATH_PREFIX}/health"), get(health))
        .route(&format!("{PATH_PREFIX}/openapi.json"), get(openapi_json))
        .route(&format!("{PATH_PREFIX}/sessions"), post(create_session))
        .route(&format!("{PATH_PREFIX}/sessions/{{id}}"), get(get_session))
        .route(&format!("{PATH_PREFIX}/sessions/{{id}}/command"), post(session_command))
        .route(&format!("{PATH_PREFIX}/results/{{id}}"), get(get_result))
        .route(&format!("{PATH_PREFIX}/{{endpoint}}"), post(compute))
        .fallback(|| async { problem(StatusCode::NOT_FOUND, "not_found", "no such route".into()) })
        .with_state(state)
}

/// Initializes everything, then binds. Nothing listens if initialization fails.
pub async fn serve(config: Config) -> Result<(), InitError> {
    let state = init(&config, Arc::new(SystemClock))?;
    let app = router(state);
    let listener =
        tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await.map_err(InitError::Listen)?;
    let addr = listener.local_addr().map_err(InitError::Listen)?;
    eprintln!("powerkit {} listening on http://{addr}", env!("CARGO_PKG_VERSION"));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(InitError::Listen)
}

fn json_text(status: StatusCode, body: String, location: Option<String>) -> Response {
    let mut response = (status, body).into_response();
    let headers = response.headers_mut();
    headers.insert(header::CONTENT_TYPE, HeaderValue::from_static("application/json"));
    if let Some(loc) = location.and_then(|l| HeaderValue::from_str(&l).ok()) {
        headers.insert(header::LOCATION, loc);
    }
    response
}

fn json_value(status: StatusCode, body: &Value) -> Response {
    json_text(status, body.to_string(), None)
}

fn problem(status: StatusCode, error: &str, message: String) -> Response {
    json_value(status, &json!({"error": error, "message": message}))
}

fn api_error(e: &ApiError) -> Response {
    let status = StatusCode::from_u16(e.status()).unwrap_or(StatusCode::BAD_REQUEST);
    json_value(status, &e.body())
}

fn gone(id: &str, at: u64) -> Response {
    json_value(
        StatusCode::GONE,
        &json!({"error": "expired", "message": format!("session {id} expired at {at}"), "expired_at": at}),
    )
}

fn missing(what: &str, id: &str) -> Response {
    problem(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id `{id}`"))
}

fn storage_failure(e: io::Error) -> Response {
    problem(StatusCode::INTERNAL_SERVER_ERROR, "storage", e.to_string())
}

async fn health(State(app): State<Arc<AppState>>) -> Response {
    json_value(
        StatusCode::OK,
        &json!({"status": "ok", "version": env!("CARGO_PKG_VERSION"), "endpoints": ENDPOINTS.len(), "scenarios": app.scenarios}),
    )
}

async fn openapi_json(State(app): State<Arc<AppState>>) -> Response {
    json_text(StatusCode::OK, app.openapi.clone(), None)
}

async fn compute(State(app): State<Arc<AppState>>, Path(name): Path<String>, body: Bytes) -> Response {
    let Some(endpoint) = api::endpoint(&name) else {
        return missing("endpoint", &name);
    };
    let (request, parsed) = match api::parse_body(endpoint.test, &body) {
        Ok(r) => r,
        Err(e) => return api_error(&e),
    };
    let response = match api::solve(endpoint.test, &parsed) {
        Ok(r) => api::response_text(&r),
        Err(e) => return api_error(&e),
    };
    match app.results.append(app.sessions.now(), endpoint.name, None, &request, &response).await {
        Ok(id) => json_text(StatusCode::OK, response, Some(format!("{PATH_PREFIX}/results/{id}"))),
        Err(e) => storage_failure(e),
    }
}

async fn get_result(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    match app.results.get(&id) {
        Some(line) => json_text(StatusCode::OK, line.to_string(), None),
        None => missing("result", &id),
    }
}

fn session_view(app: &AppState, state: &SessionState) -> Value {
    json!({"id": state.id, "expires_at": app.sessions.expires_at(state), "state": state})
}

async fn create_session(State(app): State<Arc<AppState>>) -> Response {
    let state = app.sessions.create();
    let location = format!("{PATH_PREFIX}/sessions/{}", state.id);
    json_text(StatusCode::CREATED, session_view(&app, &state).to_string(), Some(location))
}

async fn get_session(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Response {
    let handle = match app.sessions.lookup(&id) {
        Lookup::Live(h) => h,
        Lookup::Expired { at } => return gone(&id, at),
        Lookup::Missing => return missing("session", &id),
    };
    let state = handle.lock().await;
    if app.sessions.is_expired(&state) {
        let at = app.sessions.expires_at(&state);
        app.sessions.retire(&id, at);
        return gone(&id, at);
    }
    json_value(StatusCode::OK, &session_view(&app, &state))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CommandBody {
    text: String,
}

fn invalid(field: &str, message: String) -> Response {
    api_error(&ApiError::Invalid(vec![powerkit_core::params::FieldError::new(field, message)]))
}

async fn session_command(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: Bytes) -> Response {
    let handle = match app.sessions.lookup(&id) {
        Lookup::Live(h) => h,
        Lookup::Expired { at } => return gone(&id, at),
        Lookup::Missing => return missing("session", &id),
    };
    let body: CommandBody = match serde_json::from_slice(&body) {
        Ok(b) => b,
        Err(e) => return invalid("body", format!("expected {{\"text\": \"...\"}}: {e}")),
    };
    let mut state = handle.lock().await;
    if app.sessions.is_expired(&state) {
        let at = app.sessions.expires_at(&state);
        app.sessions.retire(&id, at);
        return gone(&id, at);
    }
    let (model, snapshot, text) = (Arc::clone(&app.model), state.clone(), body.text.clone());
    let read = tokio::task::spawn_blocking(move || read_input(&snapshot, model.as_ref(), &text)).await;
    let interpretation = match read {
        Ok(Ok(i)) => i,
        Ok(Err(e)) => return invalid("text", e.to_string()),
        Err(e) => return problem(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
    };
    let now = app.sessions.now();
    let (next, reply) = apply(&state, &interpretation.command, now);
    *state = next;
    let mut result_id = None;
    if let Some(result) = &reply.result {
        let request = json!({"text": body.text, "command": interpretation.command.to_string()});
        let response = serde_json::to_string(result).expect("results serialize");
        match app.results.append(now, "sessions", Some(&id), &request, &response).await {
            Ok(rid) => result_id = Some(rid),
            Err(e) => return storage_failure(e),
        }
    }
    json_value(
        StatusCode::OK,
        &json!({
            "session_id": id,
            "command": interpretation.command.to_string(),
            "notice": interpretation.notice,
            "reply": reply,
            "result_id": result_id,
            "expires_at": app.sessions.expires_at(&state),
        }),
    )
}
