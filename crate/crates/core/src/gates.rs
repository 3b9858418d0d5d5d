//! Penalty gates: small additive gadgets whose zero-penalty assignments
//! encode a logical relation between their variables.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{Assignment, BinaryQuadraticModel, IsingError, VariableId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GateError {
    #[error("penalty must be positive and finite, got {0}")]
    NonPositivePenalty(f64),
    #[error("variable {0} appears twice in one gate")]
    DuplicateVariable(VariableId),
    #[error("{kind} takes {expected} variables, got {got}")]
    Arity { kind: GateKind, expected: usize, got: usize },
    #[error(transparent)]
    Model(#[from] IsingError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Or,
    Wnot,
    Wand,
    Pw,
    Equal,
}

/// Unit-penalty coefficients of a gate over its role slots.
#[derive(Clone, Copy, Debug)]
pub struct GateTerms {
    pub linear: &'static [(usize, f64)],
    pub quadratic: &'static [(usize, usize, f64)],
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [GateKind::And, GateKind::Or, GateKind::Wnot, GateKind::Wand, GateKind::Pw, GateKind::Equal];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Or => "OR",
            GateKind::Wnot => "WNOT",
            GateKind::Wand => "WAND",
            GateKind::Pw => "PW",
            GateKind::Equal => "EQUAL",
        }
    }

    pub fn roles(self) -> &'static [&'static str] {
        match self {
            GateKind::And | GateKind::Or => &["i1", "i2", "o"],
            GateKind::Wnot => &["i", "o"],
            GateKind::Wand => &["i1", "i2", "a", "o"],
            GateKind::Pw => &["i1", "i2", "o1", "o2"],
            GateKind::Equal => &["a", "b"],
        }
    }

    pub fn arity(self) -> usize {
        self.roles().len()
    }

    /// The one place each construction is written down; multiply by the
    /// penalty to apply.
    pub fn terms(self) -> GateTerms {
        match self {
            GateKind::And => GateTerms {
                linear: &[(2, 3.0)],
                quadratic: &[(0, 1, 1.0), (0, 2, -2.0), (1, 2, -2.0)],
            },
            GateKind::Or => GateTerms {
                linear: &[(0, 1.0), (1, 1.0), (2, 1.0)],
                quadratic: &[(0, 1, 1.0), (0, 2, -2.0), (1, 2, -2.0)],
            },
            GateKind::Wnot => GateTerms { linear: &[], quadratic: &[(0, 1, 1.0)] },
            // AND onto the ancilla, plus a penalty on (a, o) = (1, 0).
            GateKind::Wand => GateTerms {
                linear: &[(2, 3.0), (2, 1.0)],
                quadratic: &[(0, 1, 1.0), (0, 2, -2.0), (1, 2, -2.0), (2, 3, -1.0)],
            },
            GateKind::Pw => GateTerms {
                linear: &[(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)],
                quadratic: &[(2, 3, 1.0), (0, 3, 1.0), (0, 2, -2.0), (1, 3, -2.0), (1, 2, -1.0)],
            },
            GateKind::Equal => GateTerms {
                linear: &[(0, 1.0), (1, 1.0)],
                quadratic: &[(0, 1, -2.0)],
            },
        }
    }

    /// Reference penalty table in units of the gate penalty, rows in the
    /// reference order. Each row is (local bits, penalty multiple).
    pub fn reference_table(self) -> &'static [(&'static [u8], f64)] {
        match self {
            GateKind::And => &[
                (&[0, 0, 0], 0.0),
                (&[1, 0, 0], 0.0),
                (&[0, 1, 0], 0.0),
                (&[1, 1, 1], 0.0),
                (&[1, 1, 0], 1.0),
                (&[0, 0, 1], 3.0),
                (&[1, 0, 1], 1.0),
                (&[0, 1, 1], 1.0),
            ],
            GateKind::Or => &[
                (&[0, 0, 0], 0.0),
                (&[1, 0, 1], 0.0),
                (&[0, 1, 1], 0.0),
                (&[1, 1, 1], 0.0),
                (&[1, 0, 0], 1.0),
                (&[0, 1, 0], 1.0),
                (&[0, 0, 1], 1.0),
                (&[1, 1, 0], 3.0),
            ],
            GateKind::Wnot => &[(&[0, 0], 0.0), (&[0, 1], 0.0), (&[1, 0], 0.0), (&[1, 1], 1.0)],
            GateKind::Wand => &[
                (&[0, 0, 0, 0], 0.0),
                (&[1, 0, 0, 0], 0.0),
                (&[0, 1, 0, 0], 0.0),
                (&[0, 0, 0, 1], 0.0),
                (&[1, 0, 0, 1], 0.0),
                (&[0, 1, 0, 1], 0.0),
                (&[1, 1, 1, 1], 0.0),
                (&[1, 1, 0, 0], 1.0),
                (&[0, 0, 1, 0], 4.0),
                (&[1, 0, 1, 0], 2.0),
                (&[0, 1, 1, 0], 2.0),
                (&[1, 1, 1, 0], 1.0),
                (&[1, 1, 0, 1], 1.0),
                (&[0, 0, 1, 1], 3.0),
                (&[1, 0, 1, 1], 1.0),
                (&[0, 1, 1, 1], 1.0),
            ],
            GateKind::Pw => &[
                (&[0, 0, 0, 0], 0.0),
                (&[0, 1, 0, 1], 0.0),
                (&[1, 0, 1, 0], 0.0),
                (&[1, 1, 1, 0], 0.0),
                (&[0, 0, 0, 1], 1.0),
                (&[0, 0, 1, 0], 1.0),
                (&[0, 1, 0, 0], 1.0),
                (&[1, 0, 0, 0], 1.0),
                (&[0, 0, 1, 1], 3.0),
                (&[0, 1, 1, 1], 1.0),
                (&[1, 0, 1, 1], 3.0),
                (&[1, 1, 1, 1], 1.0),
                (&[1, 1, 0, 1], 2.0),
                (&[1, 1, 0, 0], 2.0),
                (&[0, 1, 1, 0], 1.0),
                (&[1, 0, 0, 1], 3.0),
            ],
            GateKind::Equal => &[(&[0, 0], 0.0), (&[1, 1], 0.0), (&[1, 0], 1.0), (&[0, 1], 1.0)],
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown gate {s:?}"))
    }
}

fn check_penalty(p: f64) -> Result<(), GateError> {
    if p.is_finite() && p > 0.0 {
        Ok(())
    } else {
        Err(GateError::NonPositivePenalty(p))
    }
}

/// Adds `kind` over `vars` (in role order) with penalty `p`.
pub fn apply_gate(model: &mut BinaryQuadraticModel, kind: GateKind, vars: &[VariableId], p: f64) -> Result<(), GateError> {
    check_penalty(p)?;
    if vars.len() != kind.arity() {
        return Err(GateError::Arity { kind, expected: kind.arity(), got: vars.len() });
    }
    for (k, v) in vars.iter().enumerate() {
        if vars[..k].contains(v) {
            return Err(GateError::DuplicateVariable(*v));
        }
    }
    let terms = kind.terms();
    for &(r, c) in terms.linear {
        model.add_bias(vars[r], c * p)?;
    }
    for &(r, s, c) in terms.quadratic {
        model.add_coupling(vars[r], vars[s], c * p)?;
    }
    Ok(())
}

pub fn apply_and(m: &mut BinaryQuadraticModel, i1: VariableId, i2: VariableId, o: VariableId, p: f64) -> Result<(), GateError> {
    apply_gate(m, GateKind::And, &[i1, i2, o], p)
}

pub fn apply_or(m: &mut BinaryQuadraticModel, i1: VariableId, i2: VariableId, o: VariableId, p: f64) -> Result<(), GateError> {
    apply_gate(m, GateKind::Or, &[i1, i2, o], p)
}

pub fn apply_wnot(m: &mut BinaryQuadraticModel, i: VariableId, o: VariableId, p: f64) -> Result<(), GateError> {
    apply_gate(m, GateKind::Wnot, &[i, o], p)
}

pub fn apply_wand(
    m: &mut BinaryQuadraticModel,
    i1: VariableId,
    i2: VariableId,
    a: VariableId,
    o: VariableId,
    p: f64,
) -> Result<(), GateError> {
    apply_gate(m, GateKind::Wand, &[i1, i2, a, o], p)
}

pub fn apply_pw(
    m: &mut BinaryQuadraticModel,
    i1: VariableId,
    i2: VariableId,
    o1: VariableId,
    o2: VariableId,
    p: f64,
) -> Result<(), GateError> {
    apply_gate(m, GateKind::Pw, &[i1, i2, o1, o2], p)
}

pub fn apply_equal(m: &mut BinaryQuadraticModel, a: VariableId, b: VariableId, p: f64) -> Result<(), GateError> {
    apply_gate(m, GateKind::Equal, &[a, b], p)
}

/// One row of an audited penalty table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TableRow {
    pub bits: Vec<u8>,
    pub penalty: f64,
    pub expected: f64,
}

impl TableRow {
    pub fn matches(&self) -> bool {
        self.penalty == self.expected
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateAudit {
    pub kind: GateKind,
    pub penalty: f64,
    pub roles: Vec<&'static str>,
    pub rows: Vec<TableRow>,
}

impl GateAudit {
    pub fn mismatches(&self) -> usize {
        self.rows.iter().filter(|r| !r.matches()).count()
    }

    pub fn ground_rows(&self) -> Vec<Vec<u8>> {
        self.rows.iter().filter(|r| r.penalty == 0.0).map(|r| r.bits.clone()).collect()
    }
}

impl fmt::Display for GateAudit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} (p = {})", self.kind, self.penalty)?;
        writeln!(f, "  {}  | penalty  expected", self.roles.iter().map(|r| format!("{r:>2}")).collect::<Vec<_>>().join(" "))?;
        for row in &self.rows {
            let bits: Vec<String> = row.bits.iter().map(|b| format!("{b:>2}")).collect();
            let mark = if row.matches() { "" } else { "  MISMATCH" };
            writeln!(f, "  {}  | {:>7}  {:>8}{mark}", bits.join(" "), row.penalty, row.expected)?;
        }
        Ok(())
    }
}

/// Builds `kind` alone and evaluates every local assignment, in the
/// reference table's row order.
pub fn audit_gate(kind: GateKind, p: f64) -> Result<GateAudit, GateError> {
    let mut m = BinaryQuadraticModel::new();
    let vars: Vec<VariableId> = kind.roles().iter().map(|r| m.add_variable(*r)).collect::<Result<_, _>>()?;
    apply_gate(&mut m, kind, &vars, p)?;
    let rows = kind
        .reference_table()
        .iter()
        .map(|(bits, mult)| {
            let asg = Assignment::from_bits(bits.iter().map(|&b| b == 1));
            Ok(TableRow { bits: bits.to_vec(), penalty: m.energy(&asg)?, expected: mult * p })
        })
        .collect::<Result<_, IsingError>>()?;
    Ok(GateAudit { kind, penalty: p, roles: kind.roles().to_vec(), rows })
}
