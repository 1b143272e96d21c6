use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use aaa_core::decision::DecisionError;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEnvelope {
    pub code: String,
    pub message: String,
    pub field: Option<String>,
}

#[derive(Debug, Error)]
pub enum ApiError {
    #[error("{message}")]
    Validation { field: Option<String>, message: String },
    #[error("malformed request body: {0}")]
    BadJson(String),
    #[error("no trial with id {0}")]
    TrialNotFound(String),
    #[error("trial is closed")]
    TrialClosed,
    #[error("{0}")]
    NoOpenCohort(String),
    #[error("{field} = {value} exceeds the cohort size {n}")]
    CountExceedsN { field: &'static str, value: u32, n: u32 },
    #[error("cohort has {enrolled} patients, not {n}")]
    CohortSizeMismatch { enrolled: u32, n: u32 },
    #[error("outcome time {time} precedes the last event at {last}")]
    TimeGoesBackwards { time: f64, last: f64 },
    #[error("model fit failed: {0}")]
    Inference(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error("corrupt event log: {0}")]
    Corrupt(String),
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Validation { .. } => "validation_error",
            ApiError::BadJson(_) => "malformed_json",
            ApiError::TrialNotFound(_) => "trial_not_found",
            ApiError::TrialClosed => "trial_closed",
            ApiError::NoOpenCohort(_) => "no_open_cohort",
            ApiError::CountExceedsN { .. } => "count_exceeds_n",
            ApiError::CohortSizeMismatch { .. } => "cohort_size_mismatch",
            ApiError::TimeGoesBackwards { .. } => "time_goes_backwards",
            ApiError::Inference(_) => "inference_failed",
            ApiError::Storage(_) => "storage_error",
            ApiError::Corrupt(_) => "corrupt_log",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Validation { .. } | ApiError::CountExceedsN { .. } | ApiError::CohortSizeMismatch { .. } => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ApiError::BadJson(_) => StatusCode::BAD_REQUEST,
            ApiError::TrialNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::TrialClosed | ApiError::NoOpenCohort(_) | ApiError::TimeGoesBackwards { .. } => {
                StatusCode::CONFLICT
            }
            ApiError::Inference(_) | ApiError::Storage(_) | ApiError::Corrupt(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn field(&self) -> Option<String> {
        match self {
            ApiError::Validation { field, .. } => field.clone(),
            ApiError::CountExceedsN { field, .. } => Some((*field).to_string()),
            ApiError::CohortSizeMismatch { .. } => Some("n".into()),
            ApiError::TimeGoesBackwards { .. } => Some("time".into()),
            _ => None,
        }
    }

    pub fn envelope(&self) -> ErrorEnvelope {
        ErrorEnvelope {
            code: self.code().into(),
            message: self.to_string(),
            field: self.field(),
        }
    }
}

impl From<DecisionError> for ApiError {
    fn from(e: DecisionError) -> Self {
        match e {
            DecisionError::Closed => ApiError::TrialClosed,
            DecisionError::Bayes(b) => ApiError::Inference(b.to_string()),
            DecisionError::Replay(m) => ApiError::Corrupt(m),
            other => ApiError::Validation {
                field: other.field().map(str::to_string),
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for ApiError {
    fn from(e: std::io::Error) -> Self {
        ApiError::Storage(e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.envelope())).into_response()
    }
}
