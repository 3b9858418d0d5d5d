//! Match play, first-move analysis and sub-model audits.

use std::collections::HashSet;
use std::fmt::{self, Write as _};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{build_model, ChainBits, ChainSlot, OutcomeBias, PenaltyConfig, WIN_CHAIN_GATES};
use crate::engine::{engine_move, CountSource, DecisionLog, EngineError, EngineOptions, MoveStats};
use crate::game::{GameState, Mark, Outcome, Square, SquareClass};
use crate::gates::apply_gate;
use crate::ising::{BinaryQuadraticModel, VariableId, ENERGY_TOLERANCE};
use crate::oracle::{exact_move_distribution, StrategyMode};
use crate::samplers::{split_seed, SampleError, SamplerConfig};

pub const REPORT_VERSION: u32 = 1;

/// Variable counts quoted for each move index `1..=9`, as inclusive ranges.
pub const REFERENCE_QUBIT_RANGES: [(usize, usize); 9] =
    [(963, 963), (402, 534), (206, 293), (100, 156), (76, 97), (55, 63), (43, 47), (33, 33), (23, 23)];

const OPPONENT_STREAM: u64 = 0x6f70_706f_6e65_6e74;

/// Where the engine's counts come from during a match.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Backend {
    Sampler { sampler: SamplerConfig },
    Oracle { mode: StrategyMode },
}

impl Backend {
    /// Runs one decision; `seed` reseeds stochastic samplers.
    pub fn decide(&self, state: &GameState, options: &EngineOptions, seed: u64) -> Result<crate::engine::Decision, EngineError> {
        match self {
            Backend::Oracle { mode } => engine_move(state, &CountSource::Oracle(*mode), options),
            Backend::Sampler { sampler } => {
                let sampler = sampler.reseeded(seed).build()?;
                engine_move(state, &CountSource::Sampler(sampler.as_ref()), options)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPolicy {
    Engine,
    Random,
    Alternate,
}

impl std::str::FromStr for StartPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "engine" => Ok(StartPolicy::Engine),
            "random" => Ok(StartPolicy::Random),
            "alternate" => Ok(StartPolicy::Alternate),
            _ => Err(format!("unknown start policy {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Starter {
    Engine,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameResult {
    EngineWin,
    EngineLoss,
    Draw,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub index: usize,
    pub starter: Starter,
    pub engine: Mark,
    pub transcript: String,
    pub outcome: Outcome,
    pub result: GameResult,
    pub fallback_moves: usize,
    pub decisions: Vec<DecisionLog>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchRow {
    pub starter: Starter,
    pub games: usize,
    pub wins: usize,
    pub losses: usize,
    pub draws: usize,
    pub win_pct: f64,
    pub loss_pct: f64,
    pub draw_pct: f64,
}

impl MatchRow {
    fn tally(starter: Starter, games: &[GameRecord]) -> Option<Self> {
        let rows: Vec<&GameRecord> = games.iter().filter(|g| g.starter == starter).collect();
        if rows.is_empty() {
            return None;
        }
        let count = |r: GameResult| rows.iter().filter(|g| g.result == r).count();
        let (wins, losses, draws) = (count(GameResult::EngineWin), count(GameResult::EngineLoss), count(GameResult::Draw));
        let pct = |k: usize| 100.0 * k as f64 / rows.len() as f64;
        Some(MatchRow {
            starter,
            games: rows.len(),
            wins,
            losses,
            draws,
            win_pct: pct(wins),
            loss_pct: pct(losses),
            draw_pct: pct(draws),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub version: u32,
    pub seed: u64,
    pub backend: Backend,
    pub options: EngineOptions,
    pub rows: Vec<MatchRow>,
    pub games: Vec<GameRecord>,
}

impl MatchReport {
    pub fn row(&self, starter: Starter) -> Option<&MatchRow> {
        self.rows.iter().find(|r| r.starter == starter)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("starter,games,wins,losses,draws,win_pct,loss_pct,draw_pct\n");
        for r in &self.rows {
            let name = match r.starter {
                Starter::Engine => "engine",
                Starter::Random => "random",
            };
            let _ = writeln!(
                out,
                "{name},{},{},{},{},{:.2},{:.2},{:.2}",
                r.games, r.wins, r.losses, r.draws, r.win_pct, r.loss_pct, r.draw_pct
            );
        }
        out
    }
}

impl fmt::Display for MatchReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8} {:>5} {:>12} {:>12} {:>12}", "starter", "games", "wins", "losses", "draws")?;
        for r in &self.rows {
            let name = format!("{:?}", r.starter).to_lowercase();
            writeln!(
                f,
                "{name:<8} {:>5} {:>5} ({:>3.0}%) {:>5} ({:>3.0}%) {:>5} ({:>3.0}%)",
                r.games, r.wins, r.win_pct, r.losses, r.loss_pct, r.draws, r.draw_pct
            )?;
        }
        Ok(())
    }
}

fn starter_for(policy: StartPolicy, game: usize) -> Starter {
    match policy {
        StartPolicy::Engine => Starter::Engine,
        StartPolicy::Random => Starter::Random,
        StartPolicy::Alternate if game.is_multiple_of(2) => Starter::Engine,
        StartPolicy::Alternate => Starter::Random,
    }
}

/// Plays one game against a uniformly random opponent.
pub fn play_game(
    index: usize,
    starter: Starter,
    backend: &Backend,
    options: &EngineOptions,
    seed: u64,
) -> Result<GameRecord, EngineError> {
    let game_seed = split_seed(seed, index as u64);
    let mut opponent = ChaCha8Rng::seed_from_u64(split_seed(game_seed, OPPONENT_STREAM));
    let engine = if starter == Starter::Engine { Mark::X } else { Mark::O };
    let mut state = GameState::new();
    let mut decisions = Vec::new();
    let mut fallback_moves = 0;
    while !state.is_terminal() {
        let sq = if state.to_move() == engine {
            let d = backend.decide(&state, options, split_seed(game_seed, state.moves_played() as u64))?;
            fallback_moves += usize::from(d.fallback_used);
            decisions.push(DecisionLog::new(&state, &d));
            d.square
        } else {
            let empty: Vec<Square> = state.empty_squares().collect();
            *empty.choose(&mut opponent).expect("non-terminal state has an empty square")
        };
        state = state.apply_move(sq)?;
    }
    let result = match state.outcome().winner() {
        Some(m) if m == engine => GameResult::EngineWin,
        Some(_) => GameResult::EngineLoss,
        None => GameResult::Draw,
    };
    Ok(GameRecord {
        index,
        starter,
        engine,
        transcript: state.transcript(),
        outcome: state.outcome(),
        result,
        fallback_moves,
        decisions,
    })
}

pub fn run_match(
    n_games: usize,
    policy: StartPolicy,
    backend: &Backend,
    options: &EngineOptions,
    seed: u64,
) -> Result<MatchReport, EngineError> {
    if n_games == 0 {
        return Err(SampleError::InvalidParams("a match needs at least one game".into()).into());
    }
    let play = |g: usize| play_game(g, starter_for(policy, g), backend, options, seed);
    #[cfg(feature = "parallel")]
    let games: Result<Vec<GameRecord>, EngineError> = (0..n_games).into_par_iter().map(play).collect();
    #[cfg(not(feature = "parallel"))]
    let games: Result<Vec<GameRecord>, EngineError> = (0..n_games).map(play).collect();
    let games = games?;
    let rows = [Starter::Engine, Starter::Random].into_iter().filter_map(|s| MatchRow::tally(s, &games)).collect();
    Ok(MatchReport { version: REPORT_VERSION, seed, backend: backend.clone(), options: *options, rows, games })
}

/// Minimum-energy completions of one line pattern in the first-win subsystem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainPattern {
    pub lines: [bool; 5],
    pub min_energy: f64,
    /// `(existing, win)` registers of every minimum-energy completion.
    pub completions: Vec<([bool; 3], [bool; 5])>,
    /// Win registers flagging only the first set line bit.
    pub expected_win: [bool; 5],
    pub first_only: bool,
}

impl ChainPattern {
    pub fn line_count(&self) -> usize {
        self.lines.iter().filter(|&&b| b).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WinChainAudit {
    pub version: u32,
    pub assignments: usize,
    pub patterns: Vec<ChainPattern>,
}

impl WinChainAudit {
    /// Whether every pattern with at most one line bit resolves exactly.
    pub fn single_line_ok(&self) -> bool {
        self.patterns.iter().filter(|p| p.line_count() <= 1).all(|p| p.first_only)
    }

    pub fn divergences(&self) -> impl Iterator<Item = &ChainPattern> {
        self.patterns.iter().filter(|p| !p.first_only)
    }
}

fn bits<const N: usize>(b: &[bool; N]) -> String {
    b.iter().map(|&x| if x { '1' } else { '0' }).collect()
}

impl fmt::Display for WinChainAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<7} {:>6}  {:<9} completions (e7..e9 w5..w9)", "l5..l9", "energy", "first")?;
        for p in &self.patterns {
            let listed: Vec<String> = p.completions.iter().map(|(e, w)| format!("{} {}", bits(e), bits(w))).collect();
            writeln!(
                f,
                "{:<7} {:>6}  {:<9} {}",
                bits(&p.lines),
                p.min_energy,
                if p.first_only { "ok" } else { "DIVERGES" },
                listed.join(", ")
            )?;
        }
        let single = if self.single_line_ok() { "ok" } else { "MISMATCH" };
        write!(f, "single-line patterns: {single}; multi-line divergences: {}", self.divergences().count())
    }
}

/// Exhaustive audit of the first-win subsystem in isolation.
pub fn audit_win_chain(cfg: &PenaltyConfig) -> Result<WinChainAudit, EngineError> {
    cfg.validate()?;
    let mut model = BinaryQuadraticModel::new();
    let mut add = |label: String| model.add_variable(label).map_err(crate::encoder::EncodeError::from);
    let line: Vec<VariableId> = (5..=9).map(|mv| add(format!("l{mv}"))).collect::<Result<_, _>>()?;
    let existing: Vec<VariableId> = (7..=9).map(|mv| add(format!("e{mv}"))).collect::<Result<_, _>>()?;
    let win: Vec<VariableId> = (5..=9).map(|mv| add(format!("w{mv}"))).collect::<Result<_, _>>()?;
    for (kind, slots, penalty) in WIN_CHAIN_GATES {
        let vars: Vec<VariableId> = slots
            .iter()
            .map(|slot| match *slot {
                ChainSlot::Line(mv) => line[mv - 5],
                ChainSlot::Existing(mv) => existing[mv - 7],
                ChainSlot::Win(mv) => win[mv - 5],
            })
            .collect();
        apply_gate(&mut model, kind, &vars, penalty.of(cfg))?;
    }
    let compiled = model.compile();
    let n = model.num_variables();
    let mut patterns = Vec::with_capacity(32);
    for l in 0u64..32 {
        let mut best = f64::INFINITY;
        let mut completions = Vec::new();
        for rest in 0u64..(1 << (n - 5)) {
            let asg: Vec<bool> = (0..n).map(|k| if k < 5 { l >> k & 1 == 1 } else { rest >> (k - 5) & 1 == 1 }).collect();
            let e = compiled.energy_of(&asg);
            let ew = (std::array::from_fn(|k| asg[existing[k].index()]), std::array::from_fn(|k| asg[win[k].index()]));
            if e < best - ENERGY_TOLERANCE {
                best = e;
                completions.clear();
            }
            if (e - best).abs() <= ENERGY_TOLERANCE {
                completions.push(ew);
            }
        }
        let lines: [bool; 5] = std::array::from_fn(|k| l >> k & 1 == 1);
        let expected_win = ChainBits::from_lines(lines).win;
        let first_only = completions.iter().all(|(_, w)| *w == expected_win);
        patterns.push(ChainPattern { lines, min_energy: best, completions, expected_win, first_only });
    }
    Ok(WinChainAudit { version: REPORT_VERSION, assignments: 1 << n, patterns })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMoveRow {
    pub square: Square,
    pub class: SquareClass,
    pub n_win: u64,
    pub n_loss: u64,
    pub n_draw: u64,
    pub p_win: f64,
    pub oracle_p_win: f64,
    pub oracle_unconstrained_p_win: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMoveClassRow {
    pub class: SquareClass,
    pub n_win: u64,
    pub n_tot: u64,
    pub p_win: f64,
    /// Spread of per-square estimates inside the class.
    pub p_win_min: f64,
    pub p_win_max: f64,
    pub oracle_p_win: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstMoveReport {
    pub version: u32,
    pub backend: Backend,
    pub repeats: usize,
    pub samples: u64,
    pub discarded: u64,
    pub squares: Vec<FirstMoveRow>,
    pub classes: Vec<FirstMoveClassRow>,
}

const CLASS_ORDER: [SquareClass; 3] = [SquareClass::Centre, SquareClass::Corner, SquareClass::Edge];

impl FirstMoveReport {
    pub fn class(&self, c: SquareClass) -> &FirstMoveClassRow {
        self.classes.iter().find(|r| r.class == c).expect("every class is reported")
    }

    /// Centre above corner above edge, by pooled win estimate.
    pub fn rank_order_holds(&self) -> bool {
        let p = |c| self.class(c).p_win;
        p(SquareClass::Centre) > p(SquareClass::Corner) && p(SquareClass::Corner) > p(SquareClass::Edge)
    }

    pub fn oracle_rank_order_holds(&self) -> bool {
        let p = |c| self.class(c).oracle_p_win;
        p(SquareClass::Centre) > p(SquareClass::Corner) && p(SquareClass::Corner) > p(SquareClass::Edge)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("square,x,y,class,n_win,n_loss,n_draw,p_win,oracle_p_win,oracle_unconstrained_p_win\n");
        for r in &self.squares {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.6}",
                r.square.index(),
                r.square.x(),
                r.square.y(),
                class_name(r.class),
                r.n_win,
                r.n_loss,
                r.n_draw,
                r.p_win,
                r.oracle_p_win,
                r.oracle_unconstrained_p_win
            );
        }
        out
    }
}

fn class_name(c: SquareClass) -> &'static str {
    match c {
        SquareClass::Corner => "corner",
        SquareClass::Edge => "edge",
        SquareClass::Centre => "centre",
    }
}

impl fmt::Display for FirstMoveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<7} {:>9} {:>9} {:>9} {:>9}", "class", "p_win", "min", "max", "oracle")?;
        for r in &self.classes {
            writeln!(
                f,
                "{:<7} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
                class_name(r.class),
                r.p_win,
                r.p_win_min,
                r.p_win_max,
                r.oracle_p_win
            )?;
        }
        write!(f, "samples {} (discarded {})", self.samples, self.discarded)
    }
}

/// Aggregates `repeats` independent empty-board decisions beside the oracle.
pub fn first_move_analysis(
    backend: &Backend,
    options: &EngineOptions,
    repeats: usize,
    seed: u64,
) -> Result<FirstMoveReport, EngineError> {
    let empty = GameState::new();
    let mut counts = [[0u64; 3]; 9];
    let mut samples = 0;
    let mut discarded = 0;
    let raw = EngineOptions { smoothing: 0.0, ..*options };
    for r in 0..repeats {
        let d = backend.decide(&empty, &raw, split_seed(seed, r as u64))?;
        let s: &MoveStats = &d.stats;
        for c in &s.candidates {
            let slot = &mut counts[c.square.index()];
            slot[0] += c.raw_win;
            slot[1] += c.raw_loss;
            slot[2] += c.raw_draw;
        }
        discarded += s.discarded;
        samples += s.discarded + s.candidates.iter().map(|c| c.raw_win + c.raw_loss + c.raw_draw).sum::<u64>();
    }
    let ms = exact_move_distribution(&empty, StrategyMode::MinimallyStrategic)?;
    let all = exact_move_distribution(&empty, StrategyMode::Unconstrained)?;
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let squares: Vec<FirstMoveRow> = Square::all()
        .map(|sq| {
            let [w, l, d] = counts[sq.index()];
            FirstMoveRow {
                square: sq,
                class: sq.class(),
                n_win: w,
                n_loss: l,
                n_draw: d,
                p_win: ratio(w, w + l + d),
                oracle_p_win: ms.get(sq).map_or(0.0, |m| m.p_win()),
                oracle_unconstrained_p_win: all.get(sq).map_or(0.0, |m| m.p_win()),
            }
        })
        .collect();
    let classes = CLASS_ORDER
        .iter()
        .map(|&class| {
            let rows: Vec<&FirstMoveRow> = squares.iter().filter(|r| r.class == class).collect();
            let n_win = rows.iter().map(|r| r.n_win).sum();
            let n_tot = rows.iter().map(|r| r.n_win + r.n_loss + r.n_draw).sum();
            let (ow, ot) = Square::all().filter(|s| s.class() == class).fold((0, 0), |(w, t), s| {
                let m = ms.get(s).expect("empty board has every square");
                (w + m.wins, t + m.total())
            });
            FirstMoveClassRow {
                class,
                n_win,
                n_tot,
                p_win: ratio(n_win, n_tot),
                p_win_min: rows.iter().map(|r| r.p_win).fold(f64::INFINITY, f64::min),
                p_win_max: rows.iter().map(|r| r.p_win).fold(f64::NEG_INFINITY, f64::max),
                oracle_p_win: ratio(ow, ot),
            }
        })
        .collect();
    Ok(FirstMoveReport { version: REPORT_VERSION, backend: backend.clone(), repeats, samples, discarded, squares, classes })
}

/// A uniformly random line of play with `moves` moves and no finished line,
/// or `None` when the random line ends early.
pub fn random_state<R: Rng>(rng: &mut R, moves: usize) -> Option<GameState> {
    let mut state = GameState::new();
    for _ in 0..moves {
        let empty: Vec<Square> = state.empty_squares().collect();
        state = state.apply_move(*empty.choose(rng)?).ok()?;
        if state.is_terminal() {
            return None;
        }
    }
    Some(state)
}

/// One in-progress state per distinct board with `moves` marks, reached by
/// the lexicographically smallest history.
pub fn reachable_states(moves: usize) -> Vec<GameState> {
    fn walk(state: GameState, moves: usize, seen: &mut HashSet<[Mark; 9]>, out: &mut Vec<GameState>) {
        if state.moves_played() == moves {
            if seen.insert(*state.board()) {
                out.push(state);
            }
            return;
        }
        let empty: Vec<Square> = state.empty_squares().collect();
        for sq in empty {
            let next = state.apply_move(sq).expect("square is empty");
            if !next.is_terminal() {
                walk(next, moves, seen, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(GameState::new(), moves, &mut HashSet::new(), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitRow {
    pub move_index: usize,
    pub reference: (usize, usize),
    pub states: usize,
    pub min: usize,
    pub max: usize,
    pub within: usize,
    /// Distinct counts observed, ascending.
    pub observed: Vec<usize>,
}

impl QubitRow {
    pub fn all_within(&self) -> bool {
        self.within == self.states
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QubitReport {
    pub version: u32,
    pub seed: u64,
    pub rows: Vec<QubitRow>,
}

impl QubitReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("move,reference_min,reference_max,states,min,max,within\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.move_index, r.reference.0, r.reference.1, r.states, r.min, r.max, r.within
            );
        }
        out
    }
}

impl fmt::Display for QubitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>4} {:>11} {:>11} {:>9}", "move", "reference", "observed", "in range")?;
        for r in &self.rows {
            writeln!(
                f,
                "{:>4} {:>11} {:>11} {:>5}/{:<3}",
                r.move_index,
                format!("{}-{}", r.reference.0, r.reference.1),
                format!("{}-{}", r.min, r.max),
                r.within,
                r.states
            )?;
        }
        Ok(())
    }
}

/// Variable counts of `per_move` random in-progress states per move index.
pub fn qubit_report(per_move: usize, seed: u64, cfg: &PenaltyConfig) -> Result<QubitReport, EngineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(9);
    for (k, &reference) in REFERENCE_QUBIT_RANGES.iter().enumerate() {
        let mut counts = Vec::with_capacity(per_move);
        while counts.len() < per_move {
            let Some(state) = random_state(&mut rng, k) else { continue };
            counts.push(build_model(&state, OutcomeBias::Draw, cfg)?.layout.qubit_count());
        }
        let mut observed = counts.clone();
        observed.sort_unstable();
        observed.dedup();
        rows.push(QubitRow {
            move_index: k + 1,
            reference,
            states: counts.len(),
            min: observed[0],
            max: *observed.last().expect("at least one state"),
            within: counts.iter().filter(|&&c| c >= reference.0 && c <= reference.1).count(),
            observed,
        });
    }
    Ok(QubitReport { version: REPORT_VERSION, seed, rows })
}

/// Squares an exact engine should pick: the best winning chance when any
/// exists, otherwise the smallest losing chance.
pub fn oracle_optimal_squares(state: &GameState) -> Result<Vec<Square>, EngineError> {
    let dist = exact_move_distribution(state, StrategyMode::MinimallyStrategic)?;
    let best_win = dist.moves.iter().map(|m| m.p_win()).fold(0.0, f64::max);
    let pick: Vec<Square> = if best_win > 0.0 {
        dist.moves.iter().filter(|m| m.p_win() == best_win).map(|m| m.square).collect()
    } else {
        let best_loss = dist.moves.iter().map(|m| m.p_loss()).fold(f64::INFINITY, f64::min);
        dist.moves.iter().filter(|m| m.p_loss() == best_loss).map(|m| m.square).collect()
    };
    Ok(pick)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndgameMiss {
    pub transcript: String,
    pub chosen: Square,
    pub optimal: Vec<Square>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndgameReport {
    pub moves_played: usize,
    pub states: usize,
    pub agreements: usize,
    pub misses: Vec<EndgameMiss>,
}

/// Engine choice against the oracle on every reachable board with
/// `moves_played` marks.
pub fn endgame_audit(backend: &Backend, options: &EngineOptions, moves_played: usize) -> Result<EndgameReport, EngineError> {
    let states = reachable_states(moves_played);
    let check = |s: &GameState| -> Result<Option<EndgameMiss>, EngineError> {
        let d = backend.decide(s, options, 0)?;
        let optimal = oracle_optimal_squares(s)?;
        Ok((!optimal.contains(&d.square)).then(|| EndgameMiss { transcript: s.transcript(), chosen: d.square, optimal }))
    };
    #[cfg(feature = "parallel")]
    let results: Result<Vec<_>, EngineError> = states.par_iter().map(check).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Result<Vec<_>, EngineError> = states.iter().map(check).collect();
    let misses: Vec<EndgameMiss> = results?.into_iter().flatten().collect();
    Ok(EndgameReport { moves_played, states: states.len(), agreements: states.len() - misses.len(), misses })
}
