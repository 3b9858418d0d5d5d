//! Move selection from sampled future game paths.
//!
//! Three models are sampled per decision, biased towards an engine win, an
//! engine loss and a draw. Every valid sample is a full game path; its next
//! move and outcome are tallied per candidate square and the square with the
//! highest estimated win fraction is played.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::{build_model, EncodeError, OutcomeBias, PenaltyConfig, RegisterLayout};
use crate::gates::GateError;
use crate::game::{GameError, GameState, Mark, Outcome, Square};
use crate::ising::Assignment;
use crate::oracle::{exact_move_distribution, StrategyMode};
use crate::samplers::{SampleBatch, SampleError, Sampler};

pub const DECISION_LOG_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("no legal candidate moves")]
    NoCandidates,
    #[error("sample batches must cover all three outcome biases")]
    BiasMismatch,
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    Gate(#[from] GateError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeFlags {
    pub multi_select: bool,
    pub empty_register: bool,
    pub square_reuse: bool,
    pub history_mismatch: bool,
}

impl DecodeFlags {
    pub fn any(&self) -> bool {
        self.multi_select || self.empty_register || self.square_reuse || self.history_mismatch
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "move", rename_all = "snake_case")]
pub enum DecodedOutcome {
    XWin(u8),
    OWin(u8),
    Draw,
    Invalid,
}

impl DecodedOutcome {
    fn relative_to(self, engine: Mark) -> Option<Tally> {
        match (self, engine) {
            (DecodedOutcome::Draw, _) => Some(Tally::Draw),
            (DecodedOutcome::XWin(_), Mark::X) | (DecodedOutcome::OWin(_), Mark::O) => Some(Tally::Win),
            (DecodedOutcome::XWin(_), _) | (DecodedOutcome::OWin(_), _) => Some(Tally::Loss),
            (DecodedOutcome::Invalid, _) => None,
        }
    }
}

enum Tally {
    Win,
    Loss,
    Draw,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecodedGame {
    /// Square per move register; `None` where the register is not one-hot.
    pub squares: Vec<Option<Square>>,
    pub flags: DecodeFlags,
    /// Classical replay of the decoded squares.
    pub outcome: DecodedOutcome,
    /// Outcome read off the win and line registers.
    pub register_outcome: DecodedOutcome,
}

impl DecodedGame {
    pub fn is_valid(&self) -> bool {
        !self.flags.any()
    }
}

pub fn decode_sample(layout: &RegisterLayout, asg: &Assignment, state: &GameState) -> DecodedGame {
    let mut flags = DecodeFlags::default();
    let mut squares = Vec::with_capacity(9);
    for mv in 1..=9 {
        let marked: Vec<Square> = Square::all().filter(|&s| layout.move_lit(mv, s).value(asg)).collect();
        squares.push(match marked.len() {
            0 => {
                flags.empty_register = true;
                None
            }
            1 => Some(marked[0]),
            _ => {
                flags.multi_select = true;
                None
            }
        });
    }
    for (k, &h) in state.history().iter().enumerate() {
        if squares[k] != Some(h) {
            flags.history_mismatch = true;
        }
    }
    let mut seen = [false; 9];
    for s in squares.iter().flatten() {
        if std::mem::replace(&mut seen[s.index()], true) {
            flags.square_reuse = true;
        }
    }
    let outcome = if flags.any() {
        DecodedOutcome::Invalid
    } else {
        let path: Vec<Square> = squares.iter().flatten().copied().collect();
        match GameState::replay_until_terminal(&path) {
            Ok(end) => match (end.outcome(), end.winning_move()) {
                (Outcome::XWin, Some(i)) => DecodedOutcome::XWin(i as u8),
                (Outcome::OWin, Some(i)) => DecodedOutcome::OWin(i as u8),
                (Outcome::Draw, _) => DecodedOutcome::Draw,
                _ => DecodedOutcome::Invalid,
            },
            Err(_) => DecodedOutcome::Invalid,
        }
    };
    DecodedGame { squares, flags, outcome, register_outcome: register_outcome(layout, asg) }
}

fn register_outcome(layout: &RegisterLayout, asg: &Assignment) -> DecodedOutcome {
    for mv in 5..=9 {
        if asg.get(layout.win(mv)) {
            return if mv % 2 == 1 { DecodedOutcome::XWin(mv as u8) } else { DecodedOutcome::OWin(mv as u8) };
        }
    }
    if (5..=9).any(|mv| layout.line(mv).value(asg)) {
        DecodedOutcome::Invalid
    } else {
        DecodedOutcome::Draw
    }
}

/// Which decoded outcome feeds the counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeSource {
    #[default]
    Replay,
    Registers,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineOptions {
    pub smoothing: f64,
    pub fallback: bool,
    pub outcome_source: OutcomeSource,
    pub penalties: PenaltyConfig,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { smoothing: 0.0, fallback: false, outcome_source: OutcomeSource::Replay, penalties: PenaltyConfig::default() }
    }
}

impl EngineOptions {
    /// Loss-minimising fallback on and one pseudo-count per outcome.
    pub fn match_play() -> Self {
        EngineOptions { smoothing: 1.0, fallback: true, ..EngineOptions::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateStats {
    pub square: Square,
    pub raw_win: u64,
    pub raw_loss: u64,
    pub raw_draw: u64,
    pub n_win: f64,
    pub n_loss: f64,
    pub n_draw: f64,
}

fn score(n: f64, total: f64) -> f64 {
    if total == 0.0 {
        0.0
    } else {
        n / total
    }
}

impl CandidateStats {
    pub fn from_counts(square: Square, win: u64, loss: u64, draw: u64, smoothing: f64) -> Self {
        CandidateStats {
            square,
            raw_win: win,
            raw_loss: loss,
            raw_draw: draw,
            n_win: win as f64 + smoothing,
            n_loss: loss as f64 + smoothing,
            n_draw: draw as f64 + smoothing,
        }
    }

    pub fn n_tot(&self) -> f64 {
        self.n_win + self.n_loss + self.n_draw
    }

    pub fn p_win(&self) -> f64 {
        score(self.n_win, self.n_tot())
    }

    pub fn p_loss(&self) -> f64 {
        score(self.n_loss, self.n_tot())
    }

    pub fn p_draw(&self) -> f64 {
        score(self.n_draw, self.n_tot())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub engine: Mark,
    /// Every legal square, in square order.
    pub candidates: Vec<CandidateStats>,
    pub smoothing: f64,
    /// Sampled reads rejected by the decoder.
    pub discarded: u64,
    /// Valid reads whose register outcome disagreed with the replay.
    pub register_disagreements: u64,
}

impl MoveStats {
    pub fn n_tot(&self) -> f64 {
        self.candidates.iter().map(CandidateStats::n_tot).sum()
    }

    pub fn get(&self, sq: Square) -> Option<&CandidateStats> {
        self.candidates.iter().find(|c| c.square == sq)
    }

    /// Counts taken directly from the exhaustive oracle.
    pub fn from_oracle(state: &GameState, mode: StrategyMode, smoothing: f64) -> Result<Self, EngineError> {
        let dist = exact_move_distribution(state, mode)?;
        let candidates = dist
            .moves
            .iter()
            .map(|m| CandidateStats::from_counts(m.square, m.wins, m.losses, m.draws, smoothing))
            .collect();
        Ok(MoveStats { engine: dist.mover, candidates, smoothing, discarded: 0, register_disagreements: 0 })
    }

    /// Every count multiplied by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        let mut out = self.clone();
        for c in &mut out.candidates {
            *c = CandidateStats::from_counts(c.square, c.raw_win * k, c.raw_loss * k, c.raw_draw * k, self.smoothing * k as f64);
        }
        out.smoothing *= k as f64;
        out
    }
}

/// Tallies valid decoded reads per next move. `batches` must contain one
/// batch tagged with each outcome bias.
pub fn estimate_stats(
    batches: &[SampleBatch],
    state: &GameState,
    layout: &RegisterLayout,
    smoothing: f64,
    source: OutcomeSource,
) -> Result<MoveStats, EngineError> {
    if !OutcomeBias::ALL.iter().all(|b| batches.iter().any(|x| x.bias == Some(*b))) {
        return Err(EngineError::BiasMismatch);
    }
    let engine = state.to_move();
    let next = state.moves_played();
    let mut raw = [[0u64; 3]; 9];
    let mut discarded = 0;
    let mut disagreements = 0;
    for batch in batches {
        for s in &batch.samples {
            let game = decode_sample(layout, &s.assignment, state);
            if !game.is_valid() {
                discarded += s.multiplicity;
                continue;
            }
            if game.register_outcome != game.outcome {
                disagreements += s.multiplicity;
            }
            let outcome = match source {
                OutcomeSource::Replay => game.outcome,
                OutcomeSource::Registers => game.register_outcome,
            };
            let (Some(tally), Some(sq)) = (outcome.relative_to(engine), game.squares[next]) else {
                discarded += s.multiplicity;
                continue;
            };
            let slot = match tally {
                Tally::Win => 0,
                Tally::Loss => 1,
                Tally::Draw => 2,
            };
            raw[sq.index()][slot] += s.multiplicity;
        }
    }
    let candidates = state
        .empty_squares()
        .map(|sq| {
            let [w, l, d] = raw[sq.index()];
            CandidateStats::from_counts(sq, w, l, d, smoothing)
        })
        .collect();
    Ok(MoveStats { engine, candidates, smoothing, discarded, register_disagreements: disagreements })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub square: Square,
    pub fallback_used: bool,
}

/// Highest win score, lowest square index on ties. With `fallback`, when no
/// candidate has a single sampled win, the lowest loss score is used
/// instead.
pub fn select_move(stats: &MoveStats, fallback: bool) -> Result<Selection, EngineError> {
    let best_by = |key: &dyn Fn(&CandidateStats) -> f64| {
        stats
            .candidates
            .iter()
            .fold(None::<&CandidateStats>, |best, c| match best {
                Some(b) if key(b) >= key(c) => Some(b),
                _ => Some(c),
            })
            .map(|c| c.square)
            .ok_or(EngineError::NoCandidates)
    };
    if fallback && stats.candidates.iter().all(|c| c.raw_win == 0) {
        return Ok(Selection { square: best_by(&|c| -c.p_loss())?, fallback_used: true });
    }
    Ok(Selection { square: best_by(&|c| c.p_win())?, fallback_used: false })
}

/// Where candidate counts come from.
pub enum CountSource<'a> {
    Sampler(&'a dyn Sampler),
    Oracle(StrategyMode),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decision {
    pub square: Square,
    pub fallback_used: bool,
    pub stats: MoveStats,
    pub qubits: Option<usize>,
}

pub fn engine_move(state: &GameState, source: &CountSource<'_>, options: &EngineOptions) -> Result<Decision, EngineError> {
    if state.is_terminal() {
        return Err(GameError::GameOver.into());
    }
    let (stats, qubits) = match source {
        CountSource::Oracle(mode) => (MoveStats::from_oracle(state, *mode, options.smoothing)?, None),
        CountSource::Sampler(sampler) => {
            let mut batches = Vec::with_capacity(3);
            let mut layout = None;
            for bias in OutcomeBias::ALL {
                let enc = build_model(state, bias, &options.penalties)?;
                batches.push(sampler.sample(&enc.model)?.with_bias(bias));
                layout = Some(enc.layout);
            }
            let layout = layout.expect("three biases were built");
            let stats = estimate_stats(&batches, state, &layout, options.smoothing, options.outcome_source)?;
            (stats, Some(layout.qubit_count()))
        }
    };
    let sel = select_move(&stats, options.fallback)?;
    Ok(Decision { square: sel.square, fallback_used: sel.fallback_used, stats, qubits })
}

/// One row of the per-move decision log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateLog {
    pub square: Square,
    pub n_win: f64,
    pub n_loss: f64,
    pub n_draw: f64,
    pub n_tot: f64,
    pub p_win: f64,
    pub p_loss: f64,
    pub p_draw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub version: u32,
    pub transcript: String,
    pub engine: Mark,
    pub candidates: Vec<CandidateLog>,
    pub discarded: u64,
    pub register_disagreements: u64,
    pub chosen: Square,
    pub fallback_used: bool,
    pub qubits: Option<usize>,
}

impl DecisionLog {
    pub fn new(state: &GameState, d: &Decision) -> Self {
        DecisionLog {
            version: DECISION_LOG_VERSION,
            transcript: state.transcript(),
            engine: d.stats.engine,
            candidates: d
                .stats
                .candidates
                .iter()
                .map(|c| CandidateLog {
                    square: c.square,
                    n_win: c.n_win,
                    n_loss: c.n_loss,
                    n_draw: c.n_draw,
                    n_tot: c.n_tot(),
                    p_win: c.p_win(),
                    p_loss: c.p_loss(),
                    p_draw: c.p_draw(),
                })
                .collect(),
            discarded: d.stats.discarded,
            register_disagreements: d.stats.register_disagreements,
            chosen: d.square,
            fallback_used: d.fallback_used,
            qubits: d.qubits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::build_model;
    use crate::samplers::ExactSampler;

    fn sq(i: usize) -> Square {
        Square::from_index(i).unwrap()
    }

    fn state(ix: &[usize]) -> GameState {
        GameState::from_history(&ix.iter().map(|&i| sq(i)).collect::<Vec<_>>()).unwrap()
    }

    fn stats(rows: &[(usize, u64, u64, u64)], smoothing: f64) -> MoveStats {
        MoveStats {
            engine: Mark::X,
            candidates: rows.iter().map(|&(s, w, l, d)| CandidateStats::from_counts(sq(s), w, l, d, smoothing)).collect(),
            smoothing,
            discarded: 0,
            register_disagreements: 0,
        }
    }

    #[test]
    fn score_arithmetic() {
        assert_eq!(CandidateStats::from_counts(sq(0), 3, 1, 0, 0.0).p_win(), 0.75);
        assert_eq!(CandidateStats::from_counts(sq(0), 0, 0, 0, 0.0).p_win(), 0.0);
        assert!((CandidateStats::from_counts(sq(0), 0, 0, 0, 1.0).p_win() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn selection_rules() {
        assert_eq!(select_move(&stats(&[(0, 3, 1, 0), (1, 1, 1, 0)], 0.0), false).unwrap().square, sq(0));
        assert_eq!(select_move(&stats(&[(2, 1, 1, 0), (5, 1, 1, 0)], 0.0), false).unwrap().square, sq(2));
        let lost = stats(&[(2, 0, 4, 0), (5, 0, 0, 3)], 0.0);
        let pick = select_move(&lost, true).unwrap();
        assert_eq!((pick.square, pick.fallback_used), (sq(5), true));
        assert_eq!(select_move(&lost, false).unwrap().square, sq(2));
        assert_eq!(select_move(&stats(&[], 0.0), true), Err(EngineError::NoCandidates));
    }

    #[test]
    fn fallback_still_fires_with_smoothing() {
        let lost = stats(&[(2, 0, 4, 0), (5, 0, 0, 3)], 1.0);
        assert_eq!(select_move(&lost, true).unwrap(), Selection { square: sq(5), fallback_used: true });
    }

    #[test]
    fn no_samples_picks_lowest_square() {
        let empty = stats(&[(3, 0, 0, 0), (6, 0, 0, 0), (7, 0, 0, 0)], 0.0);
        assert_eq!(select_move(&empty, false).unwrap().square, sq(3));
    }

    #[test]
    fn decode_legal_and_corrupted() {
        let enc = build_model(&GameState::new(), OutcomeBias::Draw, &PenaltyConfig::default()).unwrap();
        let path: Vec<Square> = [0, 1, 4, 2, 8, 3, 5, 6, 7].map(sq).to_vec();
        let mut asg = enc.layout.assignment_from_path(&path).unwrap();
        let game = decode_sample(&enc.layout, &asg, &GameState::new());
        assert!(game.is_valid());
        assert_eq!(game.outcome, DecodedOutcome::XWin(5));
        assert_eq!(game.register_outcome, DecodedOutcome::XWin(5));

        let w5 = enc.layout.win(5);
        asg.set(w5, false);
        let game = decode_sample(&enc.layout, &asg, &GameState::new());
        assert_eq!(game.outcome, DecodedOutcome::XWin(5));
        assert_ne!(game.register_outcome, game.outcome);

        let extra = enc.layout.move_lit(3, sq(7)).var().unwrap();
        asg.set(extra, true);
        let game = decode_sample(&enc.layout, &asg, &GameState::new());
        assert!(game.flags.multi_select);
        assert_eq!(game.outcome, DecodedOutcome::Invalid);
    }

    #[test]
    fn stats_require_all_biases() {
        let s = state(&[0, 1, 2, 4, 3, 5, 7, 6]);
        let enc = build_model(&s, OutcomeBias::Draw, &PenaltyConfig::default()).unwrap();
        let batch = ExactSampler::default().sample(&enc.model).unwrap().with_bias(OutcomeBias::Draw);
        assert_eq!(
            estimate_stats(&[batch], &s, &enc.layout, 0.0, OutcomeSource::Replay),
            Err(EngineError::BiasMismatch)
        );
    }

    #[test]
    fn last_square_with_exact_sampler() {
        // X: 0 2 3 7, O: 1 4 5 6; square 8 remains and draws.
        let s = state(&[0, 1, 2, 4, 3, 5, 7, 6]);
        let sampler = ExactSampler::default();
        let d = engine_move(&s, &CountSource::Sampler(&sampler), &EngineOptions::default()).unwrap();
        assert_eq!(d.square, sq(8));
        assert_eq!(d.stats.candidates.len(), 1);
        assert_eq!(d.qubits, Some(23));
        let c = d.stats.candidates[0];
        assert_eq!(c.raw_win, 0);
        assert!(c.raw_draw > 0);
    }

    #[test]
    fn oracle_counts_open_in_the_centre() {
        let d = engine_move(&GameState::new(), &CountSource::Oracle(StrategyMode::MinimallyStrategic), &EngineOptions::default()).unwrap();
        assert_eq!(d.square, sq(4));
    }

    #[test]
    fn decision_log_serializes() {
        let s = state(&[4]);
        let d = engine_move(&s, &CountSource::Oracle(StrategyMode::MinimallyStrategic), &EngineOptions::match_play()).unwrap();
        let log = DecisionLog::new(&s, &d);
        let text = serde_json::to_string(&log).unwrap();
        let back: DecisionLog = serde_json::from_str(&text).unwrap();
        assert_eq!((back.chosen, back.version, &back.transcript), (log.chosen, log.version, &log.transcript));
        for (a, b) in back.candidates.iter().zip(&log.candidates) {
            assert_eq!((a.square, a.n_win, a.n_tot), (b.square, b.n_win, b.n_tot));
            assert!((a.p_win - b.p_win).abs() < 1e-12);
        }
        assert_eq!(log.candidates.len(), 8);
    }
}
