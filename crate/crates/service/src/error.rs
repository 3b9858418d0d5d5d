use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApiError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("malformed request: {0}")]
    BadRequest(String),
    #[error("no game with id {0}")]
    GameNotFound(String),
    #[error("no engine move with token {0}")]
    TokenNotFound(String),
    #[error("it is the engine's turn")]
    NotYourTurn,
    #[error("it is the human's turn")]
    NotEngineTurn,
    #[error("square {0} is occupied")]
    OccupiedSquare(usize),
    #[error("square index {0} is outside 0..9")]
    InvalidSquare(usize),
    #[error("the game is over")]
    GameOver,
    #[error("an engine move is already being computed")]
    MoveInFlight,
    #[error("persistence failed: {0}")]
    Storage(String),
}

#[derive(Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
}

impl ApiError {
    pub fn code(&self) -> &'static str {
        match self {
            ApiError::InvalidConfig(_) => "invalid-config",
            ApiError::BadRequest(_) => "bad-request",
            ApiError::GameNotFound(_) => "game-not-found",
            ApiError::TokenNotFound(_) => "token-not-found",
            ApiError::NotYourTurn => "not-your-turn",
            ApiError::NotEngineTurn => "not-engine-turn",
            ApiError::OccupiedSquare(_) => "occupied-square",
            ApiError::InvalidSquare(_) => "invalid-square",
            ApiError::GameOver => "game-over",
            ApiError::MoveInFlight => "move-in-flight",
            ApiError::Storage(_) => "storage",
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::InvalidConfig(_) | ApiError::BadRequest(_) | ApiError::InvalidSquare(_) => StatusCode::BAD_REQUEST,
            ApiError::GameNotFound(_) | ApiError::TokenNotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::CONFLICT,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(ErrorBody { error: self.code(), message: self.to_string() })).into_response()
    }
}
