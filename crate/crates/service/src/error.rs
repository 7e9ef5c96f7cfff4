use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("bad config: {0}")]
    BadConfig(String),
    #[error("unknown params id {0}")]
    UnknownParams(String),
    #[error("seat {seat} cannot act: it is seat {current}'s turn")]
    NotYourTurn { seat: usize, current: usize },
    #[error("action {action} is not legal")]
    IllegalAction { action: usize, mask: Vec<usize> },
    #[error("no tile is drawn")]
    NoDrawnTile,
    #[error("no situation model is loaded for this session")]
    NoSituationModel,
    #[error("invalid seat {0}")]
    InvalidSeat(usize),
    #[error("malformed request: {0}")]
    Malformed(String),
    #[error("event log replay failed: {0}")]
    Replay(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Serialize)]
struct ErrorBody<'a> {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    mask: Option<&'a [usize]>,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::UnknownSession(_) => "unknown_session",
            ServiceError::BadConfig(_) => "bad_config",
            ServiceError::UnknownParams(_) => "unknown_params",
            ServiceError::NotYourTurn { .. } => "not_your_turn",
            ServiceError::IllegalAction { .. } => "illegal_action",
            ServiceError::NoDrawnTile => "no_drawn_tile",
            ServiceError::NoSituationModel => "no_situation_model",
            ServiceError::InvalidSeat(_) => "invalid_seat",
            ServiceError::Malformed(_) => "malformed",
            ServiceError::Replay(_) => "replay",
            ServiceError::Internal(_) => "internal",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::BadConfig(_)
            | ServiceError::UnknownParams(_)
            | ServiceError::InvalidSeat(_)
            | ServiceError::Malformed(_) => StatusCode::BAD_REQUEST,
            ServiceError::NotYourTurn { .. } | ServiceError::NoDrawnTile | ServiceError::NoSituationModel => {
                StatusCode::CONFLICT
            }
            ServiceError::IllegalAction { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Replay(_) | ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let mask = match &self {
            ServiceError::IllegalAction { mask, .. } => Some(mask.as_slice()),
            _ => None,
        };
        let body = ErrorBody { error: self.code(), message: self.to_string(), mask };
        (self.status(), Json(body)).into_response()
    }
}
