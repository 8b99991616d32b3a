use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use inoculate_core::engine::EngineError;
use inoculate_core::sim::SimError;
use serde::{Deserialize, Serialize};

/// Wire shape of every error response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub field: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub body: ErrorBody,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                code: code.to_owned(),
                message: message.into(),
                field: None,
            },
        }
    }

    pub fn with_field(mut self, field: impl Into<String>) -> Self {
        self.body.field = Some(field.into());
        self
    }

    pub fn unknown_pack(pack_id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "UNKNOWN_PACK", format!("no pack with id `{pack_id}`"))
    }

    pub fn unknown_session(session_id: &str) -> Self {
        Self::new(
            StatusCode::NOT_FOUND,
            "UNKNOWN_SESSION",
            format!("no session with id `{session_id}`"),
        )
    }

    pub fn malformed(err: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "MALFORMED_BODY", err.to_string())
    }

    pub fn internal(err: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", err.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        ApiError::new(StatusCode::CONFLICT, e.code(), e.to_string())
    }
}

impl From<SimError> for ApiError {
    fn from(e: SimError) -> Self {
        let err = ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string());
        match e.field() {
            "" => err,
            f => err.with_field(f),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}
