use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

/// Body of every error response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn bad_request(code: &'static str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "session_not_found", format!("no session '{id}'"))
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }

    /// A library error raised while creating a session: everything but
    /// oracle and I/O trouble is the caller's fault.
    pub fn on_create(e: conceptpref::Error) -> Self {
        use conceptpref::Error as E;
        match e {
            E::Oracle(m) => Self::new(StatusCode::BAD_GATEWAY, "oracle_failure", m),
            E::Io(e) => Self::internal(e.to_string()),
            other => Self::bad_request("invalid_config", other.to_string()),
        }
    }

    /// A library error raised by an operation on an existing session.
    pub fn on_session(e: conceptpref::Error) -> Self {
        use conceptpref::Error as E;
        match e {
            E::Contract(m) if m.contains("session stopped") => Self::new(StatusCode::CONFLICT, "session_stopped", m),
            E::Contract(m) => Self::new(StatusCode::CONFLICT, "wrong_state", m),
            E::Oracle(m) => Self::new(StatusCode::BAD_GATEWAY, "oracle_failure", m),
            e @ (E::Domain(_) | E::Parse(_)) => Self::bad_request("invalid_feedback", e.to_string()),
            other => Self::internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { code: self.code.into(), message: self.message };
        (self.status, Json(body)).into_response()
    }
}
