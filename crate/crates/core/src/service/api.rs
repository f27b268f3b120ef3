use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use super::{AppState, MAX_TURNS_LIMIT};
use crate::eval::{write_ratings, RatingRecord};
use crate::generation::GeneratorBackend;
use crate::orchestrator::{advance_turn, new_debate, DebateConfig, DebateTranscript, HistoryMode, OrchestratorError};

struct ApiError(StatusCode, String);

impl ApiError {
    fn bad_request(msg: impl Into<String>) -> Self {
        ApiError(StatusCode::BAD_REQUEST, msg.into())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<OrchestratorError> for ApiError {
    fn from(e: OrchestratorError) -> Self {
        let status = match &e {
            OrchestratorError::DebateFull(_) | OrchestratorError::ConsecutiveHuman => StatusCode::CONFLICT,
            OrchestratorError::Backend(_) => StatusCode::BAD_GATEWAY,
            OrchestratorError::Io(_) => StatusCode::INTERNAL_SERVER_ERROR,
            OrchestratorError::EmptySubject | OrchestratorError::EmptyTurn | OrchestratorError::Config(_) => {
                StatusCode::BAD_REQUEST
            }
        };
        ApiError(status, e.to_string())
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

/// Bodies are parsed by hand so that every malformed body is a 400.
fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))
}

fn transcript_response(status: StatusCode, t: &DebateTranscript) -> Response {
    (status, [("content-type", "application/json")], t.to_json()).into_response()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateDebate {
    subject: String,
    #[serde(default)]
    backend: Option<String>,
    #[serde(default = "default_turns")]
    max_turns: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    history: HistoryMode,
    #[serde(default)]
    temperature: Option<f64>,
}

fn default_turns() -> usize {
    10
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct PostTurn {
    #[serde(default)]
    text: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Rating {
    style: i64,
    content: i64,
    strategy: i64,
    overall: i64,
    #[serde(default)]
    rater_id: Option<String>,
}

async fn run_blocking<F, T>(f: F) -> Result<T, ApiError>
where
    F: FnOnce() -> Result<T, OrchestratorError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
        .map_err(ApiError::from)
}

async fn create_debate(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let req: CreateDebate = parse_body(&body)?;
    if req.subject.trim().is_empty() {
        return Err(ApiError::bad_request("subject is empty"));
    }
    if !(1..=MAX_TURNS_LIMIT).contains(&req.max_turns) {
        return Err(ApiError::bad_request(format!("max_turns must be in 1..={MAX_TURNS_LIMIT}")));
    }
    let (name, backend) = state.backend(req.backend.as_deref()).ok_or_else(|| {
        ApiError(StatusCode::UNPROCESSABLE_ENTITY, format!("unknown backend {:?}", req.backend.unwrap_or_default()))
    })?;
    let config = DebateConfig {
        max_turns: req.max_turns,
        backend: name,
        seed: req.seed.unwrap_or_else(rand::random),
        history: req.history,
        temperature: req.temperature.unwrap_or(1.0),
        ..DebateConfig::default()
    };
    let subject = req.subject;
    let mut t = run_blocking(move || new_debate(&subject, backend.as_ref(), config)).await?;
    t.debate_id = uuid::Uuid::new_v4().simple().to_string();
    state.insert(t.clone()).await?;
    Ok(transcript_response(StatusCode::CREATED, &t))
}

async fn get_debate(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let t = state.debate(&id).await.ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no debate {id}")))?;
    Ok(transcript_response(StatusCode::OK, &t))
}

/// With text: the human turn, then the agent's reply if there is room.
/// Without: one agent turn. Nothing is kept if the backend fails.
async fn post_turn(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let req: PostTurn = if body.iter().all(u8::is_ascii_whitespace) { PostTurn::default() } else { parse_body(&body)? };
    let session = state.session(&id).await.ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no debate {id}")))?;
    let mut guard = session.lock().await;
    if guard.is_full() {
        return Err(OrchestratorError::DebateFull(guard.config.max_turns).into());
    }
    let (_, backend): (String, Arc<dyn GeneratorBackend>) = state
        .backend(Some(&guard.config.backend))
        .ok_or_else(|| ApiError(StatusCode::BAD_GATEWAY, format!("backend {} is gone", guard.config.backend)))?;
    let current = guard.clone();
    let next = run_blocking(move || {
        let mut t = current;
        if let Some(text) = req.text.as_deref() {
            t = advance_turn(&t, backend.as_ref(), Some(text))?;
            if t.is_full() {
                return Ok(t);
            }
        }
        advance_turn(&t, backend.as_ref(), None)
    })
    .await?;
    state.append_log(&next)?;
    *guard = next;
    Ok(transcript_response(StatusCode::OK, &guard))
}

async fn submit_rating(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<StatusCode, ApiError> {
    let r: Rating = parse_body(&body)?;
    if state.session(&id).await.is_none() {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("no debate {id}")));
    }
    let record = RatingRecord {
        packet_id: id,
        rater_id: r.rater_id.unwrap_or_else(|| "web".into()),
        style: r.style,
        content: r.content,
        strategy: r.strategy,
        overall: r.overall,
    };
    if !record.in_range() {
        return Err(ApiError::bad_request("scores must be between 1 and 4"));
    }
    let _guard = state.ratings_lock.lock().unwrap_or_else(|p| p.into_inner());
    write_ratings(&[record], state.ratings_path()).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    Ok(StatusCode::NO_CONTENT)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "status": "ok",
        "debates": state.debate_count().await,
        "backends": state.backend_names(),
    }))
}

pub fn router(state: Arc<AppState>) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match state.cors_origin.as_deref().and_then(|o| o.parse::<HeaderValue>().ok()) {
        Some(origin) => cors.allow_origin(origin),
        None => cors.allow_origin(Any),
    };
    Router::new()
        .route("/api/debates", post(create_debate))
        .route("/api/debates/{id}", get(get_debate))
        .route("/api/debates/{id}/turns", post(post_turn))
        .route("/api/debates/{id}/rating", post(submit_rating))
        .route("/api/health", get(health))
        .layer(cors)
        .with_state(state)
}
