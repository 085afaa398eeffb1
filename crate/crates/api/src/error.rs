use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use serde_json::{json, Value};
use trl_core::error::{AnalyticsError, Error, ErrorCode, ErrorKind, LifecycleError, StoreError};

/// JSON error body returned by every failing endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<Value>,
}

pub fn status_for(kind: ErrorKind) -> StatusCode {
    match kind {
        ErrorKind::Invalid => StatusCode::BAD_REQUEST,
        ErrorKind::NotFound => StatusCode::NOT_FOUND,
        ErrorKind::Conflict => StatusCode::CONFLICT,
        ErrorKind::Unprocessable => StatusCode::UNPROCESSABLE_ENTITY,
        ErrorKind::Storage => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl ApiError {
    pub fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status: status.as_u16(),
            code: code.to_string(),
            message: message.into(),
            details: None,
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "InvalidRequest", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "Unauthorized", "missing or wrong bearer token")
    }
}

fn lifecycle_details(err: &LifecycleError) -> Option<Value> {
    match err {
        LifecycleError::CardIncomplete(missing) => Some(json!({ "missing_sections": missing })),
        LifecycleError::PanelRolesInsufficient(missing) => Some(json!({ "missing_roles": missing })),
        LifecycleError::UnmitigatedFlaggedRisk(ids) => Some(json!({ "risks": ids })),
        LifecycleError::GateUnsatisfied { gate, detail } => Some(json!({ "gate": gate, "detail": detail })),
        LifecycleError::CompositionLevelMismatch { expected } => Some(json!({ "expected": expected })),
        LifecycleError::ChildLevelAboveParent { child, parent } => Some(json!({ "child": child, "parent": parent })),
        _ => None,
    }
}

impl From<Error> for ApiError {
    fn from(err: Error) -> Self {
        let details = match &err {
            Error::Lifecycle(e) => lifecycle_details(e),
            Error::Store(StoreError::SequenceConflict { expected, actual }) => {
                Some(json!({ "expected": expected, "actual": actual }))
            }
            Error::Store(StoreError::CorruptLog { seq, .. }) => Some(json!({ "seq": seq })),
            _ => None,
        };
        ApiError {
            status: status_for(err.kind()).as_u16(),
            code: err.code().to_string(),
            message: err.to_string(),
            details,
        }
    }
}

impl From<LifecycleError> for ApiError {
    fn from(err: LifecycleError) -> Self {
        Error::from(err).into()
    }
}

impl From<AnalyticsError> for ApiError {
    fn from(err: AnalyticsError) -> Self {
        Error::from(err).into()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

impl From<QueryRejection> for ApiError {
    fn from(rejection: QueryRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(self)).into_response()
    }
}
