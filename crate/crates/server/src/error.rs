use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use vanlearn_core::ml::MlError;
use vanlearn_core::{CodecError, ValidationReport, Violation, ViolationCode};
use vanlearn_store::StoreError;

/// Every failure leaves the service as `{code, message, violations?}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: String,
    pub message: String,
    pub violations: Option<Vec<Violation>>,
}

#[derive(Serialize)]
struct Body<'a> {
    code: &'a str,
    message: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    violations: Option<&'a [Violation]>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            status,
            code: code.into(),
            message: message.into(),
            violations: None,
        }
    }

    pub fn bad_request(code: &str, message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, code, message)
    }

    pub fn unauthenticated() -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "E_AUTH", "sign in to continue")
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "E_INTERNAL", message)
    }

    /// A failed validation report. Oversized input answers 413, anything
    /// else 400; the code is the first violation's.
    pub fn rejected(report: ValidationReport) -> Self {
        let status = if report.has(ViolationCode::Bytes) {
            StatusCode::PAYLOAD_TOO_LARGE
        } else {
            StatusCode::BAD_REQUEST
        };
        let code = report
            .violations
            .first()
            .map_or("E_VALIDATION", |v| v.code.as_str())
            .to_owned();
        let message = report
            .violations
            .iter()
            .map(|v| v.message.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        Self {
            status,
            code,
            message,
            violations: Some(report.violations),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body {
            code: &self.code,
            message: &self.message,
            violations: self.violations.as_deref(),
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        let status = match e {
            StoreError::DupUsername => StatusCode::CONFLICT,
            StoreError::WeakPassword | StoreError::BadUsername => StatusCode::BAD_REQUEST,
            StoreError::Auth => StatusCode::UNAUTHORIZED,
            StoreError::NotFound(_) => StatusCode::NOT_FOUND,
            StoreError::Forbidden(_) => StatusCode::FORBIDDEN,
            StoreError::Sqlite(ref inner) => {
                tracing::error!(error = %inner, "storage failure");
                return ApiError::internal("storage failure");
            }
        };
        ApiError::new(status, e.code(), e.to_string())
    }
}

impl From<CodecError> for ApiError {
    fn from(e: CodecError) -> Self {
        ApiError::bad_request(e.code(), e.to_string())
    }
}

impl From<MlError> for ApiError {
    fn from(e: MlError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string())
    }
}
