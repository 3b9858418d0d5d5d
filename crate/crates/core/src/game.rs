//! Classical tic-tac-toe: board, move legality, outcome detection and the
//! dihedral symmetry group of the 3x3 grid.
//!
//! Squares use 1-based `(x, y)` coordinates where `x` is the row and `y` the
//! column. The linear index is row-major, `(x - 1) * 3 + (y - 1)`, so `(1, 1)`
//! is 0 and `(3, 3)` is 8. Lower linear index is what "lowest-index square"
//! means throughout the crate.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GameError {
    #[error("square ({0}, {1}) is outside the 3x3 board")]
    OutOfRange(u8, u8),
    #[error("square index {0} is outside 0..9")]
    BadIndex(usize),
    #[error("square {0} is already occupied")]
    Occupied(Square),
    #[error("the game is already over")]
    GameOver,
    #[error("malformed transcript: {0}")]
    Transcript(String),
}

/// A cell of the board.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct Square(u8);

impl Square {
    pub fn new(x: u8, y: u8) -> Result<Self, GameError> {
        if !(1..=3).contains(&x) || !(1..=3).contains(&y) {
            return Err(GameError::OutOfRange(x, y));
        }
        Ok(Square((x - 1) * 3 + (y - 1)))
    }

    pub fn from_index(index: usize) -> Result<Self, GameError> {
        if index < 9 {
            Ok(Square(index as u8))
        } else {
            Err(GameError::BadIndex(index))
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Row coordinate in `1..=3`.
    pub fn x(self) -> u8 {
        self.0 / 3 + 1
    }

    /// Column coordinate in `1..=3`.
    pub fn y(self) -> u8 {
        self.0 % 3 + 1
    }

    pub fn all() -> impl Iterator<Item = Square> {
        (0..9u8).map(Square)
    }

    pub fn class(self) -> SquareClass {
        match self.0 {
            4 => SquareClass::Centre,
            0 | 2 | 6 | 8 => SquareClass::Corner,
            _ => SquareClass::Edge,
        }
    }
}

impl TryFrom<usize> for Square {
    type Error = GameError;
    fn try_from(value: usize) -> Result<Self, Self::Error> {
        Square::from_index(value)
    }
}

impl From<Square> for usize {
    fn from(sq: Square) -> usize {
        sq.index()
    }
}

impl fmt::Display for Square {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x(), self.y())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SquareClass {
    Corner,
    Edge,
    Centre,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mark {
    Empty,
    X,
    O,
}

impl Mark {
    /// Mark placed on 1-based move `i`: odd moves are X, even moves are O.
    pub fn for_move(i: usize) -> Mark {
        if i % 2 == 1 {
            Mark::X
        } else {
            Mark::O
        }
    }

    pub fn opponent(self) -> Mark {
        match self {
            Mark::X => Mark::O,
            Mark::O => Mark::X,
            Mark::Empty => Mark::Empty,
        }
    }
}

impl fmt::Display for Mark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mark::Empty => ".",
            Mark::X => "X",
            Mark::O => "O",
        })
    }
}

impl FromStr for Mark {
    type Err = GameError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "X" | "x" => Ok(Mark::X),
            "O" | "o" => Ok(Mark::O),
            other => Err(GameError::Transcript(format!("unknown mark {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    InProgress,
    XWin,
    OWin,
    Draw,
}

impl Outcome {
    pub fn is_terminal(self) -> bool {
        self != Outcome::InProgress
    }

    pub fn winner(self) -> Option<Mark> {
        match self {
            Outcome::XWin => Some(Mark::X),
            Outcome::OWin => Some(Mark::O),
            _ => None,
        }
    }
}

/// The eight winning lines as linear indices: rows, columns, diagonals.
pub const LINES: [[usize; 3]; 8] = [
    [0, 1, 2],
    [3, 4, 5],
    [6, 7, 8],
    [0, 3, 6],
    [1, 4, 7],
    [2, 5, 8],
    [0, 4, 8],
    [2, 4, 6],
];

/// Lines through `sq`, each with the two other cells in ascending order.
pub fn lines_through(sq: Square) -> impl Iterator<Item = (usize, [Square; 2])> {
    LINES.iter().enumerate().filter_map(move |(li, line)| {
        if !line.contains(&sq.index()) {
            return None;
        }
        let mut others = line.iter().filter(|&&c| c != sq.index()).map(|&c| Square(c as u8));
        Some((li, [others.next()?, others.next()?]))
    })
}

fn completes_line(board: &[Mark; 9], sq: Square, mark: Mark) -> bool {
    lines_through(sq).any(|(_, [a, b])| board[a.index()] == mark && board[b.index()] == mark)
}

/// Immutable snapshot of a game: the board is always the replay of `history`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GameState {
    board: [Mark; 9],
    history: Vec<Square>,
    outcome: Outcome,
    winning_move: Option<u8>,
}

impl Default for GameState {
    fn default() -> Self {
        Self::new()
    }
}

impl GameState {
    pub fn new() -> Self {
        GameState {
            board: [Mark::Empty; 9],
            history: Vec::new(),
            outcome: Outcome::InProgress,
            winning_move: None,
        }
    }

    pub fn from_history(history: &[Square]) -> Result<Self, GameError> {
        history.iter().try_fold(GameState::new(), |state, &sq| state.apply_move(sq))
    }

    /// Plays `path` in order and stops at the first completed line; squares
    /// after that point are ignored.
    pub fn replay_until_terminal(path: &[Square]) -> Result<Self, GameError> {
        let mut state = GameState::new();
        for &sq in path {
            if state.is_terminal() {
                break;
            }
            state = state.apply_move(sq)?;
        }
        Ok(state)
    }

    /// Parses the canonical transcript: comma-separated linear indices.
    pub fn from_transcript(text: &str) -> Result<Self, GameError> {
        let text = text.trim();
        if text.is_empty() {
            return Ok(GameState::new());
        }
        let squares = text
            .split(',')
            .map(|tok| {
                let idx: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| GameError::Transcript(format!("bad index {tok:?}")))?;
                Square::from_index(idx)
            })
            .collect::<Result<Vec<_>, _>>()?;
        GameState::from_history(&squares)
    }

    pub fn transcript(&self) -> String {
        self.history.iter().map(|s| s.index().to_string()).collect::<Vec<_>>().join(",")
    }

    pub fn board(&self) -> &[Mark; 9] {
        &self.board
    }

    pub fn mark_at(&self, sq: Square) -> Mark {
        self.board[sq.index()]
    }

    pub fn history(&self) -> &[Square] {
        &self.history
    }

    pub fn moves_played(&self) -> usize {
        self.history.len()
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn is_terminal(&self) -> bool {
        self.outcome.is_terminal()
    }

    /// 1-based index of the move that completed the first line.
    pub fn winning_move(&self) -> Option<usize> {
        self.winning_move.map(usize::from)
    }

    /// Player who places the next mark.
    pub fn to_move(&self) -> Mark {
        Mark::for_move(self.history.len() + 1)
    }

    pub fn empty_squares(&self) -> impl Iterator<Item = Square> + '_ {
        Square::all().filter(move |s| self.board[s.index()] == Mark::Empty)
    }

    pub fn apply_move(&self, sq: Square) -> Result<GameState, GameError> {
        if self.is_terminal() {
            return Err(GameError::GameOver);
        }
        if self.board[sq.index()] != Mark::Empty {
            return Err(GameError::Occupied(sq));
        }
        let mark = self.to_move();
        let mut next = self.clone();
        next.board[sq.index()] = mark;
        next.history.push(sq);
        if completes_line(&next.board, sq, mark) {
            next.outcome = if mark == Mark::X { Outcome::XWin } else { Outcome::OWin };
            next.winning_move = Some(next.history.len() as u8);
        } else if next.history.len() == 9 {
            next.outcome = Outcome::Draw;
        }
        Ok(next)
    }

    /// Empty squares that complete a line for the player to move.
    pub fn winning_moves(&self) -> Result<Vec<Square>, GameError> {
        if self.is_terminal() {
            return Err(GameError::GameOver);
        }
        let mark = self.to_move();
        Ok(self.empty_squares().filter(|&s| completes_line(&self.board, s, mark)).collect())
    }

    pub fn transform(&self, sym: Symmetry) -> GameState {
        let history: Vec<Square> = self.history.iter().map(|&s| sym.apply(s)).collect();
        let mut board = [Mark::Empty; 9];
        for (i, s) in self.history.iter().enumerate() {
            board[sym.apply(*s).index()] = Mark::for_move(i + 1);
        }
        GameState { board, history, outcome: self.outcome, winning_move: self.winning_move }
    }
}

impl fmt::Display for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in 0..3 {
            for col in 0..3 {
                write!(f, "{}", self.board[row * 3 + col])?;
            }
            if row < 2 {
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// The dihedral group of the square, acting on `(x, y)` = (row, column).
///
/// `Rot90` is a clockwise quarter turn: `(x, y) -> (y, 4 - x)`, so the top-left
/// corner `(1,1)` goes to the top-right corner `(1,3)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    Identity,
    Rot90,
    Rot180,
    Rot270,
    /// `(x, y) -> (4 - x, y)`: top and bottom rows swap.
    FlipRows,
    /// `(x, y) -> (x, 4 - y)`: left and right columns swap.
    FlipColumns,
    /// `(x, y) -> (y, x)`.
    Transpose,
    /// `(x, y) -> (4 - y, 4 - x)`.
    AntiTranspose,
}

impl Symmetry {
    pub const ALL: [Symmetry; 8] = [
        Symmetry::Identity,
        Symmetry::Rot90,
        Symmetry::Rot180,
        Symmetry::Rot270,
        Symmetry::FlipRows,
        Symmetry::FlipColumns,
        Symmetry::Transpose,
        Symmetry::AntiTranspose,
    ];

    pub fn apply(self, sq: Square) -> Square {
        let (x, y) = (sq.x(), sq.y());
        let (nx, ny) = match self {
            Symmetry::Identity => (x, y),
            Symmetry::Rot90 => (y, 4 - x),
            Symmetry::Rot180 => (4 - x, 4 - y),
            Symmetry::Rot270 => (4 - y, x),
            Symmetry::FlipRows => (4 - x, y),
            Symmetry::FlipColumns => (x, 4 - y),
            Symmetry::Transpose => (y, x),
            Symmetry::AntiTranspose => (4 - y, 4 - x),
        };
        Square((nx - 1) * 3 + (ny - 1))
    }

    pub fn inverse(self) -> Symmetry {
        match self {
            Symmetry::Rot90 => Symmetry::Rot270,
            Symmetry::Rot270 => Symmetry::Rot90,
            other => other,
        }
    }

    /// `self` applied after `first`.
    pub fn compose(self, first: Symmetry) -> Symmetry {
        let probe = [Square(0), Square(1)];
        let target = probe.map(|s| self.apply(first.apply(s)));
        Symmetry::ALL
            .into_iter()
            .find(|cand| probe.map(|s| cand.apply(s)) == target)
            .expect("dihedral group is closed")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: u8, y: u8) -> Square {
        Square::new(x, y).unwrap()
    }

    fn play(moves: &[(u8, u8)]) -> GameState {
        moves.iter().fold(GameState::new(), |s, &(x, y)| s.apply_move(sq(x, y)).unwrap())
    }

    #[test]
    fn centre_on_empty_board() {
        let s = GameState::new().apply_move(sq(2, 2)).unwrap();
        assert_eq!(s.history(), &[sq(2, 2)]);
        assert_eq!(s.mark_at(sq(2, 2)), Mark::X);
        assert_eq!(s.outcome(), Outcome::InProgress);
        assert_eq!(s.transcript(), "4");
    }

    #[test]
    fn diagonal_win_on_move_five() {
        let s = play(&[(1, 1), (1, 2), (2, 2), (1, 3), (3, 3)]);
        assert_eq!(s.outcome(), Outcome::XWin);
        assert_eq!(s.winning_move(), Some(5));
        assert_eq!(s.apply_move(sq(2, 1)), Err(GameError::GameOver));
    }

    #[test]
    fn occupied_square_is_rejected() {
        let s = play(&[(1, 1)]);
        assert_eq!(s.apply_move(sq(1, 1)), Err(GameError::Occupied(sq(1, 1))));
    }

    #[test]
    fn out_of_range_coordinates() {
        assert!(Square::new(0, 1).is_err());
        assert!(Square::new(2, 4).is_err());
        assert!(Square::from_index(9).is_err());
    }

    #[test]
    fn winning_moves_single_diagonal() {
        let s = play(&[(1, 1), (1, 2), (2, 2), (1, 3)]);
        assert_eq!(s.winning_moves().unwrap(), vec![sq(3, 3)]);
        assert!(GameState::new().winning_moves().unwrap().is_empty());
    }

    /// Brute-force oracle: place the mover's mark on each empty square and
    /// scan all 8 lines.
    fn winning_by_enumeration(s: &GameState) -> Vec<Square> {
        let me = s.to_move();
        s.empty_squares()
            .filter(|&c| {
                let mut board = *s.board();
                board[c.index()] = me;
                LINES.iter().any(|l| l.iter().all(|&k| board[k] == me))
            })
            .collect()
    }

    #[test]
    fn winning_moves_two_threats() {
        // X: (1,1),(1,2),(2,2); O: (1,3),(2,1),(2,3). Row 1 is blocked, the
        // main diagonal and column 2 are open.
        let s = play(&[(1, 1), (1, 3), (1, 2), (2, 1), (2, 2), (2, 3)]);
        assert_eq!(s.to_move(), Mark::X);
        let expected = winning_by_enumeration(&s);
        assert_eq!(expected, vec![sq(3, 2), sq(3, 3)]);
        assert_eq!(s.winning_moves().unwrap(), expected);
    }

    #[test]
    fn winning_moves_match_enumeration_on_all_short_games() {
        fn walk(s: &GameState) {
            if s.is_terminal() {
                return;
            }
            assert_eq!(s.winning_moves().unwrap(), winning_by_enumeration(s));
            if s.moves_played() < 4 {
                assert!(s.winning_moves().unwrap().is_empty());
            }
            if s.moves_played() < 6 {
                for c in s.empty_squares() {
                    walk(&s.apply_move(c).unwrap());
                }
            }
        }
        walk(&GameState::new());
    }

    #[test]
    fn rotation_convention() {
        assert_eq!(Symmetry::Rot90.apply(sq(1, 1)), sq(1, 3));
        let s = play(&[(1, 1)]);
        assert_eq!(s.transform(Symmetry::Rot90).history(), &[sq(1, 3)]);
        assert_eq!(s.transform(Symmetry::Identity), s);
    }

    #[test]
    fn symmetries_form_a_group() {
        for a in Symmetry::ALL {
            assert_eq!(a.compose(a.inverse()), Symmetry::Identity);
            let image: std::collections::BTreeSet<_> = Square::all().map(|s| a.apply(s)).collect();
            assert_eq!(image.len(), 9);
            for b in Symmetry::ALL {
                let c = a.compose(b);
                for s in Square::all() {
                    assert_eq!(c.apply(s), a.apply(b.apply(s)));
                }
            }
        }
    }

    #[test]
    fn transcript_round_trip() {
        let s = GameState::from_transcript("4,0,8").unwrap();
        assert_eq!(s.transcript(), "4,0,8");
        assert_eq!(s.mark_at(Square::from_index(0).unwrap()), Mark::O);
        assert!(GameState::from_transcript("4,4").is_err());
        assert!(GameState::from_transcript("4,x").is_err());
        assert_eq!(GameState::from_transcript("").unwrap(), GameState::new());
    }

    #[test]
    fn draw_after_nine_moves() {
        let s = GameState::from_transcript("0,4,8,1,7,6,2,5,3").unwrap();
        assert_eq!(s.outcome(), Outcome::Draw);
        assert_eq!(s.winning_move(), None);
    }
}
