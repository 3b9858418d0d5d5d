//! HTTP/JSON front end for live games against the engine.

mod api;
mod config;
mod error;
mod session;

pub use api::{router, AppState};
pub use config::ServiceConfig;
pub use error::ApiError;
pub use session::{
    CreateGameRequest, EngineMoveTicket, GameStatus, GameView, HumanMoveRequest, JobStatus, JobView, PersistedGame, SquareStats,
};

/// JSON schema covering every request and response body.
pub const API_SCHEMA: &str = include_str!("../schema/api.schema.json");

/// Binds `config.port` and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> std::io::Result<()> {
    let state = AppState::new(config.clone())?;
    let listener = tokio::net::TcpListener::bind((config.host.as_str(), config.port)).await?;
    axum::serve(listener, router(state)).await
}
