//! Exhaustive enumeration of game continuations.
//!
//! Every continuation stops at the first completed line or a full board.
//! Under `MinimallyStrategic`, a player who has at least one winning move
//! only ever plays winning moves (all of them are branched); the rule binds
//! both players.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{Encoding, RuleEnergies};
use crate::game::{GameError, GameState, Mark, Outcome, Square, LINES};
use crate::ising::{Assignment, ENERGY_TOLERANCE};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyMode {
    Unconstrained,
    MinimallyStrategic,
}

type Board = [u8; 9];

fn wins(board: &Board, player: u8) -> bool {
    LINES.iter().any(|l| l.iter().all(|&c| board[c] == player))
}

fn board_of(state: &GameState) -> Board {
    let mut b = [0u8; 9];
    for (k, sq) in state.history().iter().enumerate() {
        b[sq.index()] = if k % 2 == 0 { 1 } else { 2 };
    }
    b
}

fn candidate_moves(board: &mut Board, player: u8, mode: StrategyMode) -> Vec<usize> {
    let empty: Vec<usize> = (0..9).filter(|&s| board[s] == 0).collect();
    if mode == StrategyMode::Unconstrained {
        return empty;
    }
    let winning: Vec<usize> = empty
        .iter()
        .copied()
        .filter(|&s| {
            board[s] = player;
            let w = wins(board, player);
            board[s] = 0;
            w
        })
        .collect();
    if winning.is_empty() {
        empty
    } else {
        winning
    }
}

/// Finished games below `board`, as (X wins, O wins, draws).
fn tally(board: &mut Board, ply: usize, mode: StrategyMode) -> [u64; 3] {
    let player = if ply.is_multiple_of(2) { 1 } else { 2 };
    let mut out = [0u64; 3];
    for s in candidate_moves(board, player, mode) {
        board[s] = player;
        if wins(board, player) {
            out[player as usize - 1] += 1;
        } else if ply == 8 {
            out[2] += 1;
        } else {
            let sub = tally(board, ply + 1, mode);
            for k in 0..3 {
                out[k] += sub[k];
            }
        }
        board[s] = 0;
    }
    out
}

/// Number of finished games reachable from `state`.
pub fn enumerate_games(state: &GameState, mode: StrategyMode) -> u64 {
    if state.is_terminal() {
        return 1;
    }
    let mut b = board_of(state);
    tally(&mut b, state.moves_played(), mode).iter().sum()
}

/// Orderings of the remaining squares, ignoring wins along the way.
pub fn count_raw_sequences(state: &GameState) -> u64 {
    fn rec(board: &mut Board) -> u64 {
        let empty: Vec<usize> = (0..9).filter(|&s| board[s] == 0).collect();
        if empty.is_empty() {
            return 1;
        }
        empty
            .into_iter()
            .map(|s| {
                board[s] = 1;
                let n = rec(board);
                board[s] = 0;
                n
            })
            .sum()
    }
    rec(&mut board_of(state))
}

/// Finished-game counts below one candidate move, from the mover's side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveCounts {
    pub square: Square,
    pub wins: u64,
    pub losses: u64,
    pub draws: u64,
}

impl MoveCounts {
    pub fn total(&self) -> u64 {
        self.wins + self.losses + self.draws
    }

    pub fn p_win(&self) -> f64 {
        ratio(self.wins, self.total())
    }

    pub fn p_loss(&self) -> f64 {
        ratio(self.losses, self.total())
    }

    pub fn p_draw(&self) -> f64 {
        ratio(self.draws, self.total())
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleDistribution {
    pub mode: StrategyMode,
    pub mover: Mark,
    /// One entry per empty square, in square order.
    pub moves: Vec<MoveCounts>,
}

impl OracleDistribution {
    pub fn total(&self) -> u64 {
        self.moves.iter().map(MoveCounts::total).sum()
    }

    pub fn get(&self, sq: Square) -> Option<&MoveCounts> {
        self.moves.iter().find(|m| m.square == sq)
    }
}

pub fn exact_move_distribution(state: &GameState, mode: StrategyMode) -> Result<OracleDistribution, GameError> {
    if state.is_terminal() {
        return Err(GameError::GameOver);
    }
    let mover = state.to_move();
    let player = if mover == Mark::X { 1 } else { 2 };
    let ply = state.moves_played();
    let mut board = board_of(state);
    let allowed = candidate_moves(&mut board, player, mode);
    let empty: Vec<Square> = state.empty_squares().collect();
    let count = |sq: &Square| {
        let s = sq.index();
        if !allowed.contains(&s) {
            return MoveCounts { square: *sq, wins: 0, losses: 0, draws: 0 };
        }
        let mut b = board;
        b[s] = player;
        let t = if wins(&b, player) {
            let mut t = [0; 3];
            t[player as usize - 1] = 1;
            t
        } else if ply == 8 {
            [0, 0, 1]
        } else {
            tally(&mut b, ply + 1, mode)
        };
        let (mine, theirs) = if player == 1 { (t[0], t[1]) } else { (t[1], t[0]) };
        MoveCounts { square: *sq, wins: mine, losses: theirs, draws: t[2] }
    };
    #[cfg(feature = "parallel")]
    let moves = empty.par_iter().map(count).collect();
    #[cfg(not(feature = "parallel"))]
    let moves = empty.iter().map(count).collect();
    Ok(OracleDistribution { mode, mover, moves })
}

/// Whether every move of the game below `path` (up to its end) obeys the
/// minimally-strategic rule.
pub fn is_minimally_strategic(path: &[Square]) -> bool {
    let mut state = GameState::new();
    for &sq in path {
        if state.is_terminal() {
            return true;
        }
        let Ok(winning) = state.winning_moves() else { return false };
        if !winning.is_empty() && !winning.contains(&sq) {
            return false;
        }
        match state.apply_move(sq) {
            Ok(next) => state = next,
            Err(_) => return false,
        }
    }
    true
}

/// Every full nine-square ordering extending `state`, in lexicographic
/// order of square indices.
pub fn full_completions(state: &GameState) -> Vec<Vec<Square>> {
    fn rec(prefix: &mut Vec<Square>, out: &mut Vec<Vec<Square>>) {
        if prefix.len() == 9 {
            out.push(prefix.clone());
            return;
        }
        for sq in Square::all() {
            if !prefix.contains(&sq) {
                prefix.push(sq);
                rec(prefix, out);
                prefix.pop();
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut state.history().to_vec(), &mut out);
    out
}

/// A game (truncated at its end) and its best penalty energy over the full
/// completions examined.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathEnergy {
    pub game: Vec<Square>,
    pub outcome: Outcome,
    pub minimally_strategic: bool,
    pub penalty_energy: f64,
    pub rules: RuleEnergies,
}

/// Comparison of the oracle's minimally-strategic games with the games
/// whose constructed assignments reach the lowest penalty energy. Penalty
/// energy is the model energy minus the outcome-bias contribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub completions_examined: usize,
    pub games_examined: usize,
    pub min_penalty_energy: f64,
    /// Oracle games whose best energy is above the minimum.
    pub excluded_by_encoding: Vec<PathEnergy>,
    /// Non-strategic games that still reach the minimum.
    pub admitted_by_encoding: Vec<PathEnergy>,
}

impl DivergenceReport {
    pub fn is_empty(&self) -> bool {
        self.excluded_by_encoding.is_empty() && self.admitted_by_encoding.is_empty()
    }
}

/// Diagnoses the encoding's ground set against the oracle over the given
/// full completions of the encoded state.
pub fn path_set_diagnostics(
    encoding: &Encoding,
    completions: &[Vec<Square>],
) -> Result<DivergenceReport, crate::encoder::EncodeError> {
    let mut games: Vec<PathEnergy> = Vec::new();
    for full in completions {
        let asg: Assignment = encoding.layout.assignment_from_path(full)?;
        let rules = encoding.energy_audit(&asg)?;
        let energy = rules.total - rules.outcome_bias;
        let end = GameState::replay_until_terminal(full).map_err(|e| crate::encoder::EncodeError::IllegalPath(e.to_string()))?;
        let game = end.history().to_vec();
        match games.iter_mut().find(|g| g.game == game) {
            Some(g) if energy < g.penalty_energy => {
                g.penalty_energy = energy;
                g.rules = rules;
            }
            Some(_) => {}
            None => games.push(PathEnergy {
                minimally_strategic: is_minimally_strategic(&game),
                game,
                outcome: end.outcome(),
                penalty_energy: energy,
                rules,
            }),
        }
    }
    let min = games.iter().map(|g| g.penalty_energy).fold(f64::INFINITY, f64::min);
    let at_min = |g: &PathEnergy| g.penalty_energy <= min + ENERGY_TOLERANCE;
    Ok(DivergenceReport {
        completions_examined: completions.len(),
        games_examined: games.len(),
        min_penalty_energy: min,
        excluded_by_encoding: games.iter().filter(|g| g.minimally_strategic && !at_min(g)).cloned().collect(),
        admitted_by_encoding: games.iter().filter(|g| !g.minimally_strategic && at_min(g)).cloned().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{SquareClass, Symmetry};

    fn sq(i: usize) -> Square {
        Square::from_index(i).unwrap()
    }

    fn state(ix: &[usize]) -> GameState {
        GameState::from_history(&ix.iter().map(|&i| sq(i)).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn unconstrained_total() {
        assert_eq!(enumerate_games(&GameState::new(), StrategyMode::Unconstrained), 255_168);
    }

    #[test]
    fn raw_sequences() {
        assert_eq!(count_raw_sequences(&GameState::new()), 362_880);
        assert_eq!(count_raw_sequences(&state(&[4, 0])), 5040);
    }

    #[test]
    fn strategic_prunes() {
        let ms = enumerate_games(&GameState::new(), StrategyMode::MinimallyStrategic);
        assert!(ms < 255_168);
        assert_eq!(ms, 55_648);
    }

    #[test]
    fn eight_moves_leave_one_game() {
        let s = state(&[0, 1, 2, 4, 3, 5, 7, 6]);
        assert_eq!(enumerate_games(&s, StrategyMode::Unconstrained), 1);
        assert_eq!(enumerate_games(&s, StrategyMode::MinimallyStrategic), 1);
    }

    #[test]
    fn first_move_rank_order_and_symmetry() {
        let d = exact_move_distribution(&GameState::new(), StrategyMode::MinimallyStrategic).unwrap();
        let by_class = |c: SquareClass| -> Vec<MoveCounts> { d.moves.iter().filter(|m| m.square.class() == c).copied().collect() };
        let corners = by_class(SquareClass::Corner);
        let edges = by_class(SquareClass::Edge);
        let centre = by_class(SquareClass::Centre)[0];
        assert!(corners.windows(2).all(|w| (w[0].wins, w[0].losses, w[0].draws) == (w[1].wins, w[1].losses, w[1].draws)));
        assert!(edges.windows(2).all(|w| (w[0].wins, w[0].losses, w[0].draws) == (w[1].wins, w[1].losses, w[1].draws)));
        assert!(centre.p_win() > corners[0].p_win());
        assert!(corners[0].p_win() > edges[0].p_win());
        assert_eq!((corners[0].wins, corners[0].losses, corners[0].draws), (2696, 1208, 1668));
        assert_eq!(d.total(), 55_648);
    }

    #[test]
    fn forced_win_is_the_only_branch() {
        // X: 0, 4; O: 1, 2. X to move wins at 8.
        let s = state(&[0, 1, 4, 2]);
        let d = exact_move_distribution(&s, StrategyMode::MinimallyStrategic).unwrap();
        for m in &d.moves {
            if m.square == sq(8) {
                assert_eq!((m.wins, m.losses, m.draws), (1, 0, 0));
            } else {
                assert_eq!(m.total(), 0);
            }
        }
    }

    #[test]
    fn distributions_commute_with_symmetry() {
        let s = state(&[0, 4, 5]);
        for mode in [StrategyMode::Unconstrained, StrategyMode::MinimallyStrategic] {
            let base = exact_move_distribution(&s, mode).unwrap();
            for sym in Symmetry::ALL {
                let moved = exact_move_distribution(&s.transform(sym), mode).unwrap();
                for m in &base.moves {
                    let img = moved.get(sym.apply(m.square)).unwrap();
                    assert_eq!((m.wins, m.losses, m.draws), (img.wins, img.losses, img.draws));
                }
            }
        }
    }

    #[test]
    fn strategic_path_check() {
        // X could win at 8 on move 5 but plays 3.
        assert!(!is_minimally_strategic(&[0, 1, 4, 2, 3].map(sq)));
        assert!(is_minimally_strategic(&[0, 1, 4, 2, 8].map(sq)));
    }

    #[test]
    fn completions_of_late_state() {
        let s = state(&[0, 1, 2, 4, 3, 5, 7]);
        let c = full_completions(&s);
        assert_eq!(c.len(), 2);
        assert!(c.iter().all(|p| p[..7] == *s.history()));
    }
}
