//! The tic-tac-toe Hamiltonian for an in-progress game.
//!
//! Nine move registers of nine qubits each hold one square per move. Line,
//! no-line, existing-line and win registers sit on top, tied together by
//! penalty gates so that legal game paths are the low-energy states and a
//! small outcome bias splits them by winner.
//!
//! Registers for moves already played are not variables: they are literal
//! constants and every term touching them is folded into biases or the
//! offset. A future move register keeps all nine qubits, but gate inputs on
//! occupied squares are folded as 0 because no legal continuation sets them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{lines_through, GameState, Mark, Square};
use crate::gates::GateKind;
use crate::ising::{Assignment, BinaryQuadraticModel, IsingError, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EncodeError {
    #[error("cannot encode a finished game")]
    Terminal,
    #[error("penalty {name} must be positive and finite, got {value}")]
    InvalidPenalty { name: &'static str, value: f64 },
    #[error("illegal path: {0}")]
    IllegalPath(String),
    #[error(transparent)]
    Model(#[from] IsingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub p_ms: f64,
    pub p_o: f64,
    pub p_line: f64,
    pub p_noline: f64,
    pub p_ex: f64,
    pub p_win: f64,
    pub p_wb: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        PenaltyConfig { p_ms: 1.0, p_o: 1.0, p_line: 1.0, p_noline: 1.0, p_ex: 1.0, p_win: 1.0, p_wb: 1.0 }
    }
}

impl PenaltyConfig {
    pub fn named(&self) -> [(&'static str, f64); 7] {
        [
            ("p_ms", self.p_ms),
            ("p_o", self.p_o),
            ("p_line", self.p_line),
            ("p_noline", self.p_noline),
            ("p_ex", self.p_ex),
            ("p_win", self.p_win),
            ("p_wb", self.p_wb),
        ]
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<(), String> {
        let slot = match name {
            "p_ms" => &mut self.p_ms,
            "p_o" => &mut self.p_o,
            "p_line" => &mut self.p_line,
            "p_noline" => &mut self.p_noline,
            "p_ex" => &mut self.p_ex,
            "p_win" => &mut self.p_win,
            "p_wb" => &mut self.p_wb,
            _ => return Err(format!("unknown penalty {name:?}")),
        };
        *slot = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), EncodeError> {
        for (name, value) in self.named() {
            if !(value.is_finite() && value > 0.0) {
                return Err(EncodeError::InvalidPenalty { name, value });
            }
        }
        Ok(())
    }
}

/// Outcome the sampler is nudged towards, relative to the engine.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeBias {
    EngineWins,
    EngineLoses,
    Draw,
}

impl OutcomeBias {
    pub const ALL: [OutcomeBias; 3] = [OutcomeBias::EngineWins, OutcomeBias::EngineLoses, OutcomeBias::Draw];

    pub fn resolve(self, engine: Mark) -> WinBias {
        match (self, engine) {
            (OutcomeBias::Draw, _) => WinBias::Draw,
            (OutcomeBias::EngineWins, Mark::O) | (OutcomeBias::EngineLoses, Mark::X) => WinBias::OWin,
            _ => WinBias::XWin,
        }
    }
}

/// Outcome bias expressed on the win registers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WinBias {
    XWin,
    OWin,
    Draw,
}

/// A variable or a folded constant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Lit {
    Const(bool),
    Var(VariableId),
}

impl Lit {
    pub fn value(self, asg: &Assignment) -> bool {
        match self {
            Lit::Const(b) => b,
            Lit::Var(v) => asg.get(v),
        }
    }

    pub fn var(self) -> Option<VariableId> {
        match self {
            Lit::Var(v) => Some(v),
            Lit::Const(_) => None,
        }
    }
}

/// Provenance of one line-detection ancilla. Layer 1 watches
/// `m[earlier_move][earlier_square]` and `m[mv - 2][recent_square]`; layer 2
/// adds `m[mv][target]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct AncillaRecord {
    pub layer: u8,
    pub mv: u8,
    pub target: Square,
    pub line: u8,
    pub earlier_move: u8,
    pub earlier_square: Square,
    pub recent_square: Square,
}

impl AncillaRecord {
    /// Value the ancilla takes on the given full path.
    pub fn propagated(&self, path: &[Square]) -> bool {
        let inputs = path[self.earlier_move as usize - 1] == self.earlier_square
            && path[self.mv as usize - 3] == self.recent_square;
        match self.layer {
            1 => inputs,
            _ => inputs && path[self.mv as usize - 1] == self.target,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Role {
    Move { mv: u8, square: Square },
    Line { mv: u8 },
    NoLine { mv: u8 },
    ExistingLine { mv: u8 },
    Win { mv: u8 },
    Ancilla(AncillaRecord),
}

impl Role {
    pub fn label(&self) -> String {
        match *self {
            Role::Move { mv, square } => format!("m{mv}_{}{}", square.x(), square.y()),
            Role::Line { mv } => format!("l{mv}"),
            Role::NoLine { mv } => format!("n{mv}"),
            Role::ExistingLine { mv } => format!("e{mv}"),
            Role::Win { mv } => format!("w{mv}"),
            Role::Ancilla(r) => format!(
                "a{}_m{}_t{}_L{}_j{}_s{}_r{}",
                r.layer,
                r.mv,
                r.target.index(),
                r.line,
                r.earlier_move,
                r.earlier_square.index(),
                r.recent_square.index()
            ),
        }
    }

    pub fn is_ancilla(&self) -> bool {
        matches!(self, Role::Ancilla(_))
    }
}

/// Encoding rule that produced a term, for energy attribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RuleGroup {
    OneHot,
    NoReuse,
    History,
    LineDetection,
    WinChain,
    OutcomeBias,
}

#[derive(Clone, Copy, Debug)]
struct Term {
    group: RuleGroup,
    coef: f64,
    vars: [Option<VariableId>; 2],
}

/// Per-rule split of a model energy. The fields sum to `total`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RuleEnergies {
    pub one_hot: f64,
    pub no_reuse: f64,
    pub history: f64,
    pub line_detection: f64,
    pub win_chain: f64,
    pub outcome_bias: f64,
    pub total: f64,
}

impl RuleEnergies {
    fn slot(&mut self, g: RuleGroup) -> &mut f64 {
        match g {
            RuleGroup::OneHot => &mut self.one_hot,
            RuleGroup::NoReuse => &mut self.no_reuse,
            RuleGroup::History => &mut self.history,
            RuleGroup::LineDetection => &mut self.line_detection,
            RuleGroup::WinChain => &mut self.win_chain,
            RuleGroup::OutcomeBias => &mut self.outcome_bias,
        }
    }
}

/// Where each semantic register lives in a built model.
#[derive(Clone, Debug)]
pub struct RegisterLayout {
    history: Vec<Square>,
    moves: [[Lit; 9]; 9],
    line: [Lit; 5],
    no_line: [VariableId; 5],
    existing: [VariableId; 3],
    win: [VariableId; 5],
    roles: Vec<Role>,
    bias: WinBias,
}

impl RegisterLayout {
    pub fn qubit_count(&self) -> usize {
        self.roles.len()
    }

    pub fn ancilla_count(&self) -> usize {
        self.roles.iter().filter(|r| r.is_ancilla()).count()
    }

    pub fn history(&self) -> &[Square] {
        &self.history
    }

    pub fn moves_played(&self) -> usize {
        self.history.len()
    }

    pub fn bias(&self) -> WinBias {
        self.bias
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, v: VariableId) -> Role {
        self.roles[v.index()]
    }

    /// Literal for `m[mv][sq]`, `mv` in `1..=9`.
    pub fn move_lit(&self, mv: usize, sq: Square) -> Lit {
        self.moves[mv - 1][sq.index()]
    }

    /// Literal for the line register of move `mv` in `5..=9`.
    pub fn line(&self, mv: usize) -> Lit {
        self.line[mv - 5]
    }

    pub fn no_line(&self, mv: usize) -> VariableId {
        self.no_line[mv - 5]
    }

    /// Existing-line register, `mv` in `7..=9`.
    pub fn existing_line(&self, mv: usize) -> VariableId {
        self.existing[mv - 7]
    }

    pub fn win(&self, mv: usize) -> VariableId {
        self.win[mv - 5]
    }

    /// Sets every variable to its intended value for a full nine-square path
    /// that extends the encoded history.
    pub fn assignment_from_path(&self, path: &[Square]) -> Result<Assignment, EncodeError> {
        check_full_path(path)?;
        if path[..self.history.len()] != self.history[..] {
            return Err(EncodeError::IllegalPath("path does not extend the encoded history".into()));
        }
        let lines: [bool; 5] = std::array::from_fn(|k| line_register_value(path, k + 5));
        let chain = ChainBits::from_lines(lines);
        let mut asg = Assignment::zeros(self.roles.len());
        for (k, role) in self.roles.iter().enumerate() {
            let bit = match *role {
                Role::Move { mv, square } => path[mv as usize - 1] == square,
                Role::Line { mv } => lines[mv as usize - 5],
                Role::NoLine { mv } => !lines[mv as usize - 5],
                Role::ExistingLine { mv } => chain.existing[mv as usize - 7],
                Role::Win { mv } => chain.win[mv as usize - 5],
                Role::Ancilla(rec) => rec.propagated(path),
            };
            asg.set(VariableId(k as u32), bit);
        }
        Ok(asg)
    }
}

fn check_full_path(path: &[Square]) -> Result<(), EncodeError> {
    if path.len() != 9 {
        return Err(EncodeError::IllegalPath(format!("expected 9 squares, got {}", path.len())));
    }
    let mut seen = [false; 9];
    for sq in path {
        if std::mem::replace(&mut seen[sq.index()], true) {
            return Err(EncodeError::IllegalPath(format!("square {sq} used twice")));
        }
    }
    Ok(())
}

/// Intended line-register value for move `mv` in `5..=9`: the move completes
/// a line together with move `mv - 2` and some earlier move of the same
/// player.
pub fn line_register_value(path: &[Square], mv: usize) -> bool {
    let target = path[mv - 1];
    let recent = path[mv - 3];
    lines_through(target).any(|(_, [c1, c2])| {
        let partner = if recent == c1 {
            c2
        } else if recent == c2 {
            c1
        } else {
            return false;
        };
        (1..mv - 2).filter(|j| j % 2 == mv % 2).any(|j| path[j - 1] == partner)
    })
}

/// Register slot of the first-win subsystem, by move index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainSlot {
    Line(usize),
    Existing(usize),
    Win(usize),
}

/// Which penalty weight a first-win gate uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainPenalty {
    Existing,
    Win,
}

impl ChainPenalty {
    pub fn of(self, cfg: &PenaltyConfig) -> f64 {
        match self {
            ChainPenalty::Existing => cfg.p_ex,
            ChainPenalty::Win => cfg.p_win,
        }
    }
}

/// Gates of the first-win subsystem over `l5..l9`, `e7..e9` and `w5..w9`.
pub const WIN_CHAIN_GATES: [(GateKind, &[ChainSlot], ChainPenalty); 8] = {
    use ChainSlot::{Existing as E, Line as L, Win as W};
    [
        (GateKind::Or, &[L(5), L(6), E(7)], ChainPenalty::Existing),
        (GateKind::Or, &[L(7), E(7), E(8)], ChainPenalty::Existing),
        (GateKind::Or, &[L(8), E(8), E(9)], ChainPenalty::Existing),
        (GateKind::Equal, &[L(5), W(5)], ChainPenalty::Win),
        (GateKind::Pw, &[L(5), L(6), W(5), W(6)], ChainPenalty::Win),
        (GateKind::Pw, &[E(7), L(7), W(6), W(7)], ChainPenalty::Win),
        (GateKind::Pw, &[E(8), L(8), W(7), W(8)], ChainPenalty::Win),
        (GateKind::Pw, &[E(9), L(9), W(8), W(9)], ChainPenalty::Win),
    ]
};

/// Existing-line and win registers implied by a line pattern `l5..l9`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainBits {
    pub existing: [bool; 3],
    pub win: [bool; 5],
}

impl ChainBits {
    pub fn from_lines(lines: [bool; 5]) -> Self {
        let e7 = lines[0] || lines[1];
        let e8 = lines[2] || e7;
        let e9 = lines[3] || e8;
        let seen_before = [false, lines[0], e7, e8, e9];
        let win = std::array::from_fn(|k| lines[k] && !seen_before[k]);
        ChainBits { existing: [e7, e8, e9], win }
    }
}

/// A built model together with its layout and per-rule term ledger.
#[derive(Clone, Debug)]
pub struct Encoding {
    pub model: BinaryQuadraticModel,
    pub layout: RegisterLayout,
    ledger: Vec<Term>,
}

impl Encoding {
    pub fn energy_audit(&self, asg: &Assignment) -> Result<RuleEnergies, IsingError> {
        if asg.len() != self.model.num_variables() {
            return Err(IsingError::MissingVariable { expected: self.model.num_variables(), got: asg.len() });
        }
        let mut out = RuleEnergies::default();
        for t in &self.ledger {
            if t.vars.iter().flatten().all(|&v| asg.get(v)) {
                *out.slot(t.group) += t.coef;
            }
        }
        out.total = self.model.energy(asg)?;
        Ok(out)
    }
}

struct Builder {
    model: BinaryQuadraticModel,
    roles: Vec<Role>,
    ledger: Vec<Term>,
    group: RuleGroup,
}

impl Builder {
    fn var(&mut self, role: Role) -> Result<VariableId, EncodeError> {
        let id = self.model.add_variable(role.label())?;
        self.roles.push(role);
        Ok(id)
    }

    /// Adds `coef` times the product of `lits`, folding constants and
    /// repeated variables.
    fn term(&mut self, coef: f64, lits: &[Lit]) -> Result<(), EncodeError> {
        let mut vars: [Option<VariableId>; 2] = [None, None];
        let mut n = 0;
        for lit in lits {
            match *lit {
                Lit::Const(false) => return Ok(()),
                Lit::Const(true) => {}
                Lit::Var(v) if vars[..n].contains(&Some(v)) => {}
                Lit::Var(v) => {
                    vars[n] = Some(v);
                    n += 1;
                }
            }
        }
        match vars {
            [None, _] => self.model.add_offset(coef)?,
            [Some(a), None] => self.model.add_bias(a, coef)?,
            [Some(a), Some(b)] => self.model.add_coupling(a, b, coef)?,
        }
        self.ledger.push(Term { group: self.group, coef, vars });
        Ok(())
    }

    fn gate(&mut self, kind: GateKind, lits: &[Lit], p: f64) -> Result<(), EncodeError> {
        let terms = kind.terms();
        for &(r, c) in terms.linear {
            self.term(c * p, &[lits[r]])?;
        }
        for &(r, s, c) in terms.quadratic {
            self.term(c * p, &[lits[r], lits[s]])?;
        }
        Ok(())
    }
}

/// Builds the model for `state` with the bias resolved against the player to
/// move.
pub fn build_model(state: &GameState, bias: OutcomeBias, cfg: &PenaltyConfig) -> Result<Encoding, EncodeError> {
    build_model_with(state, bias.resolve(state.to_move()), cfg)
}

pub fn build_model_with(state: &GameState, bias: WinBias, cfg: &PenaltyConfig) -> Result<Encoding, EncodeError> {
    if state.is_terminal() {
        return Err(EncodeError::Terminal);
    }
    cfg.validate()?;
    let history = state.history().to_vec();
    let played = history.len();
    let occupied: [bool; 9] = std::array::from_fn(|k| history.iter().any(|s| s.index() == k));

    let mut b = Builder {
        model: BinaryQuadraticModel::new(),
        roles: Vec::new(),
        ledger: Vec::new(),
        group: RuleGroup::OneHot,
    };

    let mut moves = [[Lit::Const(false); 9]; 9];
    for mv in 1..=9 {
        for sq in Square::all() {
            moves[mv - 1][sq.index()] = if mv <= played {
                Lit::Const(history[mv - 1] == sq)
            } else {
                Lit::Var(b.var(Role::Move { mv: mv as u8, square: sq })?)
            };
        }
    }
    let mut line = [Lit::Const(false); 5];
    for mv in 5..=9 {
        if mv > played {
            line[mv - 5] = Lit::Var(b.var(Role::Line { mv: mv as u8 })?);
        }
    }
    let mut no_line = [VariableId(0); 5];
    for mv in 5..=9 {
        no_line[mv - 5] = b.var(Role::NoLine { mv: mv as u8 })?;
    }
    let mut existing = [VariableId(0); 3];
    for mv in 7..=9 {
        existing[mv - 7] = b.var(Role::ExistingLine { mv: mv as u8 })?;
    }
    let mut win = [VariableId(0); 5];
    for mv in 5..=9 {
        win[mv - 5] = b.var(Role::Win { mv: mv as u8 })?;
    }

    b.group = RuleGroup::OneHot;
    for reg in &moves {
        for s in 0..9 {
            b.term(-cfg.p_ms / 2.0, &[reg[s]])?;
            for t in s + 1..9 {
                b.term(cfg.p_ms, &[reg[s], reg[t]])?;
            }
        }
    }

    b.group = RuleGroup::NoReuse;
    for sq in 0..9 {
        for i in 0..9 {
            b.term(-cfg.p_o / 2.0, &[moves[i][sq]])?;
            for j in i + 1..9 {
                b.term(cfg.p_o, &[moves[i][sq], moves[j][sq]])?;
            }
        }
    }

    b.group = RuleGroup::History;
    for (k, sq) in history.iter().enumerate() {
        for j in (0..9).filter(|&j| j != k) {
            b.term(cfg.p_o, &[moves[j][sq.index()]])?;
        }
    }

    b.group = RuleGroup::LineDetection;
    // Gate input on an occupied square: zero on every legal continuation.
    let input = |mv: usize, sq: Square| match moves[mv - 1][sq.index()] {
        Lit::Var(_) if occupied[sq.index()] => Lit::Const(false),
        lit => lit,
    };
    for mv in 5..=9usize {
        let l = line[mv - 5];
        let n = Lit::Var(no_line[mv - 5]);
        for target in Square::all() {
            for (li, [c1, c2]) in lines_through(target) {
                for (earlier_square, recent_square) in [(c1, c2), (c2, c1)] {
                    for j in (1..mv - 2).filter(|j| j % 2 == mv % 2) {
                        let rec = AncillaRecord {
                            layer: 1,
                            mv: mv as u8,
                            target,
                            line: li as u8,
                            earlier_move: j as u8,
                            earlier_square,
                            recent_square,
                        };
                        let in1 = input(j, earlier_square);
                        let in2 = input(mv - 2, recent_square);
                        if in1 == Lit::Const(false) || in2 == Lit::Const(false) {
                            continue;
                        }
                        let out = input(mv, target);
                        if out == Lit::Const(false) {
                            // Ancillas sit at a1 = in1 AND in2 and a2 = 0; only
                            // the layer-1 (a, o) = (1, 0) penalty survives.
                            b.term(cfg.p_line, &[in1, in2])?;
                            continue;
                        }
                        let a1 = match (in1, in2) {
                            (Lit::Var(_), Lit::Var(_)) => Lit::Var(b.var(Role::Ancilla(rec))?),
                            (Lit::Const(true), other) | (other, Lit::Const(true)) => other,
                            _ => unreachable!("zero inputs skipped above"),
                        };
                        b.gate(GateKind::Wand, &[in1, in2, a1, out], cfg.p_line)?;
                        let a2 = match (a1, out) {
                            (Lit::Var(_), Lit::Var(_)) => Lit::Var(b.var(Role::Ancilla(AncillaRecord { layer: 2, ..rec }))?),
                            (Lit::Const(true), other) | (other, Lit::Const(true)) => other,
                            _ => unreachable!("zero inputs skipped above"),
                        };
                        b.gate(GateKind::Wand, &[a1, out, a2, l], cfg.p_line)?;
                        b.gate(GateKind::Wnot, &[a2, n], cfg.p_noline)?;
                    }
                }
            }
        }
        b.term(cfg.p_noline, &[l, n])?;
        b.term(-cfg.p_noline, &[n])?;
    }

    b.group = RuleGroup::WinChain;
    for (kind, slots, penalty) in WIN_CHAIN_GATES {
        let lits: Vec<Lit> = slots
            .iter()
            .map(|slot| match *slot {
                ChainSlot::Line(mv) => line[mv - 5],
                ChainSlot::Existing(mv) => Lit::Var(existing[mv - 7]),
                ChainSlot::Win(mv) => Lit::Var(win[mv - 5]),
            })
            .collect();
        b.gate(kind, &lits, penalty.of(cfg))?;
    }
    let w = |mv: usize| Lit::Var(win[mv - 5]);

    b.group = RuleGroup::OutcomeBias;
    for mv in 5..=9 {
        let x_move = mv % 2 == 1;
        let coef = match (bias, x_move) {
            (WinBias::Draw, _) => cfg.p_wb,
            (WinBias::XWin, true) | (WinBias::OWin, false) => -cfg.p_wb,
            _ => cfg.p_wb,
        };
        b.term(coef, &[w(mv)])?;
    }

    let layout = RegisterLayout { history, moves, line, no_line, existing, win, roles: b.roles, bias };
    Ok(Encoding { model: b.model, layout, ledger: b.ledger })
}

impl fmt::Display for RuleEnergies {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "one-hot {} | no-reuse {} | history {} | lines {} | win-chain {} | bias {} | total {}",
            self.one_hot, self.no_reuse, self.history, self.line_detection, self.win_chain, self.outcome_bias, self.total
        )
    }
}
