use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use ttt_ising::engine::{CandidateLog, Decision, DecisionLog, EngineError, EngineOptions};
use ttt_ising::game::{GameState, Mark, Outcome, Square};
use ttt_ising::harness::Backend;
use ttt_ising::samplers::split_seed;

use crate::error::ApiError;

pub const PERSIST_VERSION: u32 = 1;

/// Per-square estimates returned with every engine move.
pub type SquareStats = CandidateLog;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateGameRequest {
    pub engine: Mark,
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub options: Option<EngineOptions>,
    #[serde(default)]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanMoveRequest {
    pub square: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameStatus {
    InProgress,
    XWin,
    OWin,
    Draw,
}

impl From<Outcome> for GameStatus {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::InProgress => GameStatus::InProgress,
            Outcome::XWin => GameStatus::XWin,
            Outcome::OWin => GameStatus::OWin,
            Outcome::Draw => GameStatus::Draw,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Turn {
    Human,
    Engine,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameView {
    pub id: String,
    pub engine: Mark,
    pub human: Mark,
    pub transcript: String,
    pub board: Vec<Option<Mark>>,
    pub status: GameStatus,
    pub turn: Turn,
    pub pending_token: Option<String>,
    pub backend: Backend,
    pub decisions: Vec<DecisionLog>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    Pending,
    Done,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EngineMoveTicket {
    pub token: String,
    pub status: JobStatus,
    pub poll: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobView {
    pub token: String,
    pub status: JobStatus,
    /// Transcript the decision was computed for.
    pub transcript: String,
    pub square: Option<Square>,
    pub fallback_used: Option<bool>,
    pub discarded: Option<u64>,
    pub stats: Vec<SquareStats>,
    pub error: Option<String>,
    pub retry_advice: Option<String>,
}

/// On-disk form; the live state is always the replay of `transcript`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistedGame {
    pub version: u32,
    pub id: String,
    pub engine: Mark,
    pub backend: Backend,
    pub options: EngineOptions,
    pub seed: u64,
    pub transcript: String,
    pub decisions: Vec<DecisionLog>,
}

/// Everything an engine decision needs, detached from the session lock.
pub struct EngineJob {
    pub token: String,
    pub state: GameState,
    pub backend: Backend,
    pub options: EngineOptions,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Session {
    pub id: String,
    engine: Mark,
    backend: Backend,
    options: EngineOptions,
    seed: u64,
    state: GameState,
    decisions: Vec<DecisionLog>,
    pending: Option<String>,
    jobs: BTreeMap<String, JobView>,
}

impl Session {
    pub fn create(id: String, req: CreateGameRequest, default_backend: &Backend, default_options: &EngineOptions) -> Result<Self, ApiError> {
        if req.engine == Mark::Empty {
            return Err(ApiError::InvalidConfig("engine must be X or O".into()));
        }
        let backend = req.backend.unwrap_or_else(|| default_backend.clone());
        let options = req.options.unwrap_or(*default_options);
        validate(&backend, &options)?;
        let seed = req.seed.unwrap_or_else(|| seed_from_id(&id));
        Ok(Session {
            id,
            engine: req.engine,
            backend,
            options,
            seed,
            state: GameState::new(),
            decisions: Vec::new(),
            pending: None,
            jobs: BTreeMap::new(),
        })
    }

    pub fn restore(p: PersistedGame) -> Result<Self, String> {
        let state = GameState::from_transcript(&p.transcript).map_err(|e| format!("{}: {e}", p.id))?;
        validate(&p.backend, &p.options).map_err(|e| format!("{}: {e}", p.id))?;
        Ok(Session {
            id: p.id,
            engine: p.engine,
            backend: p.backend,
            options: p.options,
            seed: p.seed,
            state,
            decisions: p.decisions,
            pending: None,
            jobs: BTreeMap::new(),
        })
    }

    pub fn persisted(&self) -> PersistedGame {
        PersistedGame {
            version: PERSIST_VERSION,
            id: self.id.clone(),
            engine: self.engine,
            backend: self.backend.clone(),
            options: self.options,
            seed: self.seed,
            transcript: self.state.transcript(),
            decisions: self.decisions.clone(),
        }
    }

    #[cfg(test)]
    pub fn state(&self) -> &GameState {
        &self.state
    }

    fn turn(&self) -> Turn {
        if self.state.is_terminal() {
            Turn::None
        } else if self.state.to_move() == self.engine {
            Turn::Engine
        } else {
            Turn::Human
        }
    }

    pub fn view(&self) -> GameView {
        GameView {
            id: self.id.clone(),
            engine: self.engine,
            human: self.engine.opponent(),
            transcript: self.state.transcript(),
            board: self.state.board().iter().map(|&m| (m != Mark::Empty).then_some(m)).collect(),
            status: self.state.outcome().into(),
            turn: self.turn(),
            pending_token: self.pending.clone(),
            backend: self.backend.clone(),
            decisions: self.decisions.clone(),
        }
    }

    pub fn job(&self, token: &str) -> Option<&JobView> {
        self.jobs.get(token)
    }

    pub fn human_move(&mut self, index: usize) -> Result<(), ApiError> {
        match self.turn() {
            Turn::None => return Err(ApiError::GameOver),
            Turn::Engine => return Err(ApiError::NotYourTurn),
            Turn::Human => {}
        }
        let sq = Square::from_index(index).map_err(|_| ApiError::InvalidSquare(index))?;
        if self.state.mark_at(sq) != Mark::Empty {
            return Err(ApiError::OccupiedSquare(index));
        }
        self.state = self.state.apply_move(sq).map_err(|e| ApiError::BadRequest(e.to_string()))?;
        Ok(())
    }

    /// Marks a decision as in flight; at most one exists per session.
    pub fn begin_engine_move(&mut self, token: String) -> Result<EngineJob, ApiError> {
        match self.turn() {
            Turn::None => return Err(ApiError::GameOver),
            Turn::Human => return Err(ApiError::NotEngineTurn),
            Turn::Engine => {}
        }
        if self.pending.is_some() {
            return Err(ApiError::MoveInFlight);
        }
        self.pending = Some(token.clone());
        self.jobs.insert(
            token.clone(),
            JobView {
                token: token.clone(),
                status: JobStatus::Pending,
                transcript: self.state.transcript(),
                square: None,
                fallback_used: None,
                discarded: None,
                stats: Vec::new(),
                error: None,
                retry_advice: None,
            },
        );
        Ok(EngineJob {
            token,
            state: self.state.clone(),
            backend: self.backend.clone(),
            options: self.options,
            seed: split_seed(self.seed, self.state.moves_played() as u64),
        })
    }

    /// Applies a finished decision. The state cannot have moved meanwhile:
    /// only the engine may move while a token is pending.
    pub fn finish_engine_move(&mut self, token: &str, result: Result<Decision, String>) {
        if self.pending.as_deref() != Some(token) {
            return;
        }
        self.pending = None;
        let Some(job) = self.jobs.get_mut(token) else { return };
        match result.and_then(|d| self.state.apply_move(d.square).map(|s| (d, s)).map_err(|e| e.to_string())) {
            Ok((decision, next)) => {
                let log = DecisionLog::new(&self.state, &decision);
                job.status = JobStatus::Done;
                job.square = Some(decision.square);
                job.fallback_used = Some(decision.fallback_used);
                job.discarded = Some(log.discarded);
                job.stats = log.candidates.clone();
                self.decisions.push(log);
                self.state = next;
            }
            Err(message) => {
                job.status = JobStatus::Failed;
                job.error = Some(message);
                job.retry_advice = Some("the board is unchanged; request a new engine move".into());
            }
        }
    }

    /// Reverts a decision whose result could not be stored.
    pub fn fail_job(&mut self, token: &str, message: String) {
        self.pending = None;
        if let Some(job) = self.jobs.get_mut(token) {
            *job = JobView {
                status: JobStatus::Failed,
                square: None,
                fallback_used: None,
                discarded: None,
                stats: Vec::new(),
                error: Some(message),
                retry_advice: Some("the board is unchanged; request a new engine move".into()),
                ..job.clone()
            };
        }
    }
}

pub fn engine_error_text(e: &EngineError) -> String {
    format!("sampler failure: {e}")
}

fn validate(backend: &Backend, options: &EngineOptions) -> Result<(), ApiError> {
    options.penalties.validate().map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
    if !(options.smoothing >= 0.0 && options.smoothing.is_finite()) {
        return Err(ApiError::InvalidConfig("smoothing must be a finite non-negative number".into()));
    }
    if let Backend::Sampler { sampler } = backend {
        sampler.build().map_err(|e| ApiError::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

fn seed_from_id(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}
