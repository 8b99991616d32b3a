//! HTTP routes.

use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::IntoResponse;
use axum::routing::{get, post};
use axum::{Json, Router};
use inoculate_core::engine::Action;
use inoculate_core::pack::{parse_pack, validate_pack, Issue};
use serde::{Deserialize, Serialize};
use tower_http::services::{ServeDir, ServeFile};

use crate::envelope::{ActionResponse, SessionEnvelope};
use crate::error::ApiError;
use crate::simulate::SimulationRequest;
use crate::store::{PackInfo, PackRegistry, RecoveryReport, SessionStore};

#[derive(Debug, Clone)]
pub struct AppState {
    pub packs: Arc<PackRegistry>,
    pub sessions: Arc<SessionStore>,
}

impl AppState {
    pub fn open(packs: PackRegistry, data_dir: &std::path::Path) -> anyhow::Result<(Self, RecoveryReport)> {
        let (sessions, report) = SessionStore::open(data_dir, &packs)?;
        Ok((
            AppState {
                packs: Arc::new(packs),
                sessions: Arc::new(sessions),
            },
            report,
        ))
    }
}

pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/packs", get(list_packs))
        .route("/api/packs/validate", post(validate))
        .route("/api/sessions", post(create_session))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/actions", post(post_action))
        .route("/api/simulations", post(run_simulation))
        .with_state(state);
    match static_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            api.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => api.fallback(not_found),
    }
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route")
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let raw: &[u8] = if body.iter().all(u8::is_ascii_whitespace) { b"{}" } else { body };
    serde_json::from_slice(raw).map_err(ApiError::malformed)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub packs: usize,
    pub sessions: usize,
}

async fn health(State(app): State<AppState>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        packs: app.packs.len(),
        sessions: app.sessions.len(),
    })
}

async fn list_packs(State(app): State<AppState>) -> Json<Vec<PackInfo>> {
    Json(app.packs.infos())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub valid: bool,
    pub errors: Vec<Issue>,
    pub warnings: Vec<Issue>,
}

async fn validate(body: Bytes) -> Json<ValidateResponse> {
    let response = match parse_pack(&body) {
        Err(e) => ValidateResponse {
            valid: false,
            errors: e.issues,
            warnings: vec![],
        },
        Ok(pack) => {
            let report = validate_pack(&pack);
            ValidateResponse {
                valid: report.is_playable(),
                errors: report.errors,
                warnings: report.warnings,
            }
        }
    };
    Json(response)
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    #[serde(default)]
    pub pack_id: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
}

async fn create_session(State(app): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: CreateSession = parse_body(&body)?;
    let pack_id = req.pack_id.as_deref().unwrap_or("default");
    let pack = app.packs.get(pack_id).ok_or_else(|| ApiError::unknown_pack(pack_id))?;
    let seed = req.seed.unwrap_or_else(rand::random);
    let session = app.sessions.create(pack, seed)?;
    let envelope = SessionEnvelope::of(&*session.lock().await);
    tracing::info!(session = %envelope.session_id, pack = %envelope.pack_id, "session created");
    Ok((StatusCode::CREATED, Json(envelope)))
}

async fn get_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<SessionEnvelope>, ApiError> {
    let session = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let envelope = SessionEnvelope::of(&*session.lock().await);
    Ok(Json(envelope))
}

/// An engine action plus the ordinal the client believes comes next.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionRequest {
    pub expected_ordinal: u64,
    #[serde(flatten)]
    pub action: Action,
}

async fn post_action(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<ActionResponse>, ApiError> {
    let session = app.sessions.get(&id).ok_or_else(|| ApiError::unknown_session(&id))?;
    let req: ActionRequest = parse_body(&body)?;
    let mut session = session.lock().await;
    let feedback = session.act(req.expected_ordinal, req.action)?;
    Ok(Json(ActionResponse {
        envelope: SessionEnvelope::of(&session),
        feedback,
    }))
}

async fn run_simulation(State(app): State<AppState>, body: Bytes) -> Result<impl IntoResponse, ApiError> {
    let req: SimulationRequest = parse_body(&body)?;
    let pack_id = req.pack_id.as_deref().unwrap_or("default");
    let pack = app.packs.get(pack_id).ok_or_else(|| ApiError::unknown_pack(pack_id))?;
    let to_api = |e: crate::simulate::ResolveError| {
        let status = match e {
            crate::simulate::ResolveError::UnknownPreset(_) => StatusCode::NOT_FOUND,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        let err = ApiError::new(status, e.code(), e.to_string());
        match e.field() {
            Some(f) => err.with_field(f),
            None => err,
        }
    };
    let resolved = req.resolve(&pack.pack).map_err(to_api)?;
    resolved.check_limits().map_err(to_api)?;
    let output = tokio::task::spawn_blocking(move || resolved.run())
        .await
        .map_err(ApiError::internal)??;
    Ok(Json(output))
}
