use std::collections::HashMap;
use std::path::{Path as FsPath, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::routing::{get, post};
use axum::{Json, Router};
use tokio::sync::Semaphore;
use tower_http::cors::{Any, CorsLayer};
use uuid::Uuid;

use crate::config::ServiceConfig;
use crate::error::ApiError;
use crate::session::{
    engine_error_text, CreateGameRequest, EngineJob, EngineMoveTicket, GameView, HumanMoveRequest, JobStatus, JobView, PersistedGame,
    Session,
};

type SessionRef = Arc<Mutex<Session>>;

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    config: ServiceConfig,
    sessions: RwLock<HashMap<String, SessionRef>>,
    workers: Arc<Semaphore>,
}

impl AppState {
    /// Loads persisted games from `config.persist_dir` if one is set.
    pub fn new(config: ServiceConfig) -> std::io::Result<Self> {
        let mut sessions = HashMap::new();
        if let Some(dir) = &config.persist_dir {
            std::fs::create_dir_all(dir)?;
            for entry in std::fs::read_dir(dir)? {
                let path = entry?.path();
                if path.extension().is_some_and(|e| e == "json") {
                    let session = load(&path).map_err(std::io::Error::other)?;
                    sessions.insert(session.id.clone(), Arc::new(Mutex::new(session)));
                }
            }
        }
        let workers = Arc::new(Semaphore::new(config.workers.max(1)));
        Ok(AppState { inner: Arc::new(Inner { config, sessions: RwLock::new(sessions), workers }) })
    }

    fn session(&self, id: &str) -> Result<SessionRef, ApiError> {
        self.inner.sessions.read().unwrap().get(id).cloned().ok_or_else(|| ApiError::GameNotFound(id.to_string()))
    }

    fn persist(&self, game: &PersistedGame) -> Result<(), ApiError> {
        let Some(dir) = &self.inner.config.persist_dir else { return Ok(()) };
        let text = serde_json::to_vec_pretty(game).map_err(|e| ApiError::Storage(e.to_string()))?;
        let tmp = dir.join(format!("{}.json.tmp", game.id));
        std::fs::write(&tmp, text).and_then(|_| std::fs::rename(&tmp, game_path(dir, &game.id))).map_err(|e| ApiError::Storage(e.to_string()))
    }
}

fn game_path(dir: &FsPath, id: &str) -> PathBuf {
    dir.join(format!("{id}.json"))
}

fn load(path: &FsPath) -> Result<Session, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let game: PersistedGame = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    Session::restore(game)
}

pub fn router(state: AppState) -> Router {
    let cors = match &state.inner.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(v),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/games", post(create_game))
        .route("/games/{id}", get(get_game))
        .route("/games/{id}/moves", post(human_move))
        .route("/games/{id}/engine-move", post(request_engine_move))
        .route("/games/{id}/engine-move/{token}", get(get_engine_move))
        .layer(cors)
        .with_state(state)
}

async fn create_game(
    State(app): State<AppState>,
    body: Result<Json<serde_json::Value>, JsonRejection>,
) -> Result<(StatusCode, Json<GameView>), ApiError> {
    let Json(value) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let req: CreateGameRequest = serde_json::from_value(value).map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
    let cfg = &app.inner.config;
    let session = Session::create(Uuid::new_v4().to_string(), req, &cfg.backend, &cfg.options)?;
    app.persist(&session.persisted())?;
    let view = session.view();
    app.inner.sessions.write().unwrap().insert(session.id.clone(), Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_game(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<GameView>, ApiError> {
    let session = app.session(&id)?;
    let view = session.lock().unwrap().view();
    Ok(Json(view))
}

async fn human_move(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<HumanMoveRequest>, JsonRejection>,
) -> Result<Json<GameView>, ApiError> {
    let Json(req) = body.map_err(|e| ApiError::BadRequest(e.body_text()))?;
    let session = app.session(&id)?;
    let mut guard = session.lock().unwrap();
    let mut next = guard.clone();
    next.human_move(req.square)?;
    app.persist(&next.persisted())?;
    *guard = next;
    Ok(Json(guard.view()))
}

async fn request_engine_move(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<(StatusCode, Json<EngineMoveTicket>), ApiError> {
    let session = app.session(&id)?;
    let job = session.lock().unwrap().begin_engine_move(Uuid::new_v4().to_string())?;
    let ticket =
        EngineMoveTicket { token: job.token.clone(), status: JobStatus::Pending, poll: format!("/games/{id}/engine-move/{}", job.token) };
    tokio::spawn(run_job(app, session, job));
    Ok((StatusCode::ACCEPTED, Json(ticket)))
}

async fn run_job(app: AppState, session: SessionRef, job: EngineJob) {
    let permit = app.inner.workers.clone().acquire_owned().await;
    let EngineJob { token, state, backend, options, seed } = job;
    let result = tokio::task::spawn_blocking(move || backend.decide(&state, &options, seed)).await;
    drop(permit);
    let result = match result {
        Ok(r) => r.map_err(|e| engine_error_text(&e)),
        Err(e) => Err(format!("engine task aborted: {e}")),
    };
    let mut guard = session.lock().unwrap();
    let mut next = guard.clone();
    next.finish_engine_move(&token, result);
    match app.persist(&next.persisted()) {
        Ok(()) => *guard = next,
        Err(e) => guard.fail_job(&token, e.to_string()),
    }
}

async fn get_engine_move(State(app): State<AppState>, Path((id, token)): Path<(String, String)>) -> Result<Json<JobView>, ApiError> {
    let session = app.session(&id)?;
    let guard = session.lock().unwrap();
    guard.job(&token).cloned().map(Json).ok_or(ApiError::TokenNotFound(token))
}
