//! Binary quadratic models over 0/1 variables.
//!
//! Energy of an assignment `x` is `offset + sum_i h_i x_i + sum_{i<j} J_ij x_i x_j`.
//! Biases and couplings only ever accumulate: every constructor in the crate
//! adds into an existing model, it never overwrites.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used whenever two energies are compared for equality.
pub const ENERGY_TOLERANCE: f64 = 1e-9;

/// Default cap on the number of variables enumerated by brute force.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("self-coupling on variable {0}")]
    SelfCoupling(VariableId),
    #[error("duplicate variable label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("non-finite coefficient {0}")]
    NonFinite(f64),
    #[error("assignment covers {got} variables, model has {expected}")]
    MissingVariable { expected: usize, got: usize },
    #[error("{count} variables exceed the enumeration limit of {limit}")]
    TooManyVariables { count: usize, limit: usize },
    #[error("malformed model json: {0}")]
    Json(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VariableId(pub u32);

impl VariableId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VariableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// Dense bit vector indexed by `VariableId`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    len: usize,
    words: Vec<u64>,
}

impl Assignment {
    pub fn zeros(len: usize) -> Self {
        Assignment { len, words: vec![0; len.div_ceil(64)] }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut out = Assignment::zeros(0);
        for b in bits {
            if out.len.is_multiple_of(64) {
                out.words.push(0);
            }
            out.len += 1;
            if b {
                out.set(VariableId((out.len - 1) as u32), true);
            }
        }
        out
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Assignment::from_bits)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, v: VariableId) -> bool {
        let i = v.index();
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, v: VariableId, value: bool) {
        let i = v.index();
        debug_assert!(i < self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn flip(&mut self, v: VariableId) {
        let i = v.index();
        self.words[i / 64] ^= 1 << (i % 64);
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(VariableId(i as u32)))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bitstring(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }
}

impl fmt::Debug for Assignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Assignment({})", self.to_bitstring())
    }
}

fn check_finite(x: f64) -> Result<(), IsingError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(IsingError::NonFinite(x))
    }
}

fn pair_key(a: VariableId, b: VariableId) -> (u32, u32) {
    if a.0 < b.0 {
        (a.0, b.0)
    } else {
        (b.0, a.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinaryQuadraticModel {
    labels: Vec<String>,
    by_label: HashMap<String, VariableId>,
    linear: Vec<f64>,
    quadratic: BTreeMap<(u32, u32), f64>,
    offset: f64,
}

impl BinaryQuadraticModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, label: impl Into<String>) -> Result<VariableId, IsingError> {
        let label = label.into();
        if self.by_label.contains_key(&label) {
            return Err(IsingError::DuplicateLabel(label));
        }
        let id = VariableId(self.labels.len() as u32);
        self.by_label.insert(label.clone(), id);
        self.labels.push(label);
        self.linear.push(0.0);
        Ok(id)
    }

    pub fn num_variables(&self) -> usize {
        self.labels.len()
    }

    pub fn variables(&self) -> impl Iterator<Item = VariableId> {
        (0..self.labels.len() as u32).map(VariableId)
    }

    pub fn variable(&self, label: &str) -> Option<VariableId> {
        self.by_label.get(label).copied()
    }

    pub fn label(&self, v: VariableId) -> &str {
        &self.labels[v.index()]
    }

    fn check(&self, v: VariableId) -> Result<(), IsingError> {
        if v.index() < self.labels.len() {
            Ok(())
        } else {
            Err(IsingError::UnknownVariable(v))
        }
    }

    pub fn add_bias(&mut self, v: VariableId, delta: f64) -> Result<(), IsingError> {
        self.check(v)?;
        check_finite(delta)?;
        self.linear[v.index()] += delta;
        Ok(())
    }

    pub fn add_coupling(&mut self, a: VariableId, b: VariableId, delta: f64) -> Result<(), IsingError> {
        if a == b {
            return Err(IsingError::SelfCoupling(a));
        }
        self.check(a)?;
        self.check(b)?;
        check_finite(delta)?;
        *self.quadratic.entry(pair_key(a, b)).or_insert(0.0) += delta;
        Ok(())
    }

    pub fn add_offset(&mut self, delta: f64) -> Result<(), IsingError> {
        check_finite(delta)?;
        self.offset += delta;
        Ok(())
    }

    pub fn bias(&self, v: VariableId) -> f64 {
        self.linear.get(v.index()).copied().unwrap_or(0.0)
    }

    pub fn coupling(&self, a: VariableId, b: VariableId) -> f64 {
        self.quadratic.get(&pair_key(a, b)).copied().unwrap_or(0.0)
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    /// Stored couplings in ascending `(smaller id, larger id)` order. Entries
    /// that cancelled to zero are still listed.
    pub fn couplings(&self) -> impl Iterator<Item = (VariableId, VariableId, f64)> + '_ {
        self.quadratic.iter().map(|(&(a, b), &j)| (VariableId(a), VariableId(b), j))
    }

    pub fn num_couplings(&self) -> usize {
        self.quadratic.len()
    }

    pub fn energy(&self, asg: &Assignment) -> Result<f64, IsingError> {
        if asg.len() != self.num_variables() {
            return Err(IsingError::MissingVariable { expected: self.num_variables(), got: asg.len() });
        }
        let mut e = self.offset;
        for (i, &h) in self.linear.iter().enumerate() {
            if asg.get(VariableId(i as u32)) {
                e += h;
            }
        }
        for (&(a, b), &j) in &self.quadratic {
            if asg.get(VariableId(a)) && asg.get(VariableId(b)) {
                e += j;
            }
        }
        Ok(e)
    }

    /// Adds every term of `other` into `self`, matching variables by label and
    /// creating the ones `self` lacks.
    pub fn add_model(&mut self, other: &BinaryQuadraticModel) -> Result<(), IsingError> {
        let map: Vec<VariableId> = other
            .labels
            .iter()
            .map(|l| match self.variable(l) {
                Some(v) => Ok(v),
                None => self.add_variable(l.clone()),
            })
            .collect::<Result<_, _>>()?;
        for (i, &h) in other.linear.iter().enumerate() {
            self.add_bias(map[i], h)?;
        }
        for (a, b, j) in other.couplings() {
            self.add_coupling(map[a.index()], map[b.index()], j)?;
        }
        self.add_offset(other.offset)
    }

    /// Renumbers variables so that old id `i` becomes `perm[i]`.
    pub fn relabeled(&self, perm: &[VariableId]) -> Result<BinaryQuadraticModel, IsingError> {
        let n = self.num_variables();
        if perm.len() != n {
            return Err(IsingError::MissingVariable { expected: n, got: perm.len() });
        }
        let mut labels = vec![String::new(); n];
        let mut seen = vec![false; n];
        for (i, &p) in perm.iter().enumerate() {
            if p.index() >= n || seen[p.index()] {
                return Err(IsingError::UnknownVariable(p));
            }
            seen[p.index()] = true;
            labels[p.index()] = self.labels[i].clone();
        }
        let mut out = BinaryQuadraticModel::new();
        for l in labels {
            out.add_variable(l)?;
        }
        for (i, &h) in self.linear.iter().enumerate() {
            out.add_bias(perm[i], h)?;
        }
        for (a, b, j) in self.couplings() {
            out.add_coupling(perm[a.index()], perm[b.index()], j)?;
        }
        out.add_offset(self.offset)?;
        Ok(out)
    }

    pub fn compile(&self) -> CompiledModel {
        CompiledModel::new(self)
    }

    pub fn to_json(&self) -> ModelJson {
        ModelJson {
            variables: self
                .labels
                .iter()
                .enumerate()
                .map(|(i, l)| VariableJson { id: i as u32, label: l.clone() })
                .collect(),
            h: self.linear.iter().enumerate().filter(|(_, h)| **h != 0.0).map(|(i, &h)| (i as u32, h)).collect(),
            j: self.quadratic.iter().filter(|(_, j)| **j != 0.0).map(|(&(a, b), &j)| (a, b, j)).collect(),
            offset: self.offset,
        }
    }

    pub fn from_json(json: &ModelJson) -> Result<BinaryQuadraticModel, IsingError> {
        let mut vars = json.variables.clone();
        vars.sort_by_key(|v| v.id);
        let mut out = BinaryQuadraticModel::new();
        for (i, v) in vars.iter().enumerate() {
            if v.id as usize != i {
                return Err(IsingError::Json(format!("variable ids must be contiguous from 0, found {}", v.id)));
            }
            out.add_variable(v.label.clone())?;
        }
        for &(id, h) in &json.h {
            out.add_bias(VariableId(id), h)?;
        }
        for &(a, b, j) in &json.j {
            out.add_coupling(VariableId(a), VariableId(b), j)?;
        }
        out.add_offset(json.offset)?;
        Ok(out)
    }
}

/// JSON form of a model: `{variables:[{id,label}], h:[[id,bias]], J:[[id,id,coupling]], offset}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelJson {
    pub variables: Vec<VariableJson>,
    pub h: Vec<(u32, f64)>,
    #[serde(rename = "J")]
    pub j: Vec<(u32, u32, f64)>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariableJson {
    pub id: u32,
    pub label: String,
}

/// Adjacency-list view of a frozen model, built for repeated local-field
/// queries by samplers and solvers.
#[derive(Clone, Debug)]
pub struct CompiledModel {
    pub linear: Vec<f64>,
    pub offset: f64,
    starts: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

impl CompiledModel {
    fn new(model: &BinaryQuadraticModel) -> Self {
        let n = model.num_variables();
        let mut adj: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (a, b, j) in model.couplings() {
            if j != 0.0 {
                adj[a.index()].push((b.0, j));
                adj[b.index()].push((a.0, j));
            }
        }
        let mut starts = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        let mut weights = Vec::new();
        starts.push(0);
        for row in adj {
            for (k, w) in row {
                neighbors.push(k);
                weights.push(w);
            }
            starts.push(neighbors.len());
        }
        CompiledModel { linear: model.linear.clone(), offset: model.offset, starts, neighbors, weights }
    }

    pub fn num_variables(&self) -> usize {
        self.linear.len()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.starts[i]..self.starts[i + 1];
        self.neighbors[r.clone()].iter().zip(&self.weights[r]).map(|(&k, &w)| (k as usize, w))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.starts[i + 1] - self.starts[i]
    }

    pub fn energy_of(&self, bits: &[bool]) -> f64 {
        let mut e = self.offset;
        for i in 0..bits.len() {
            if bits[i] {
                e += self.linear[i];
                for (k, w) in self.neighbors(i) {
                    if k > i && bits[k] {
                        e += w;
                    }
                }
            }
        }
        e
    }

    /// `h_i + sum_k J_ik x_k`: the energy change from turning `x_i` on.
    pub fn local_fields(&self, bits: &[bool]) -> Vec<f64> {
        let mut fields = self.linear.clone();
        for (i, &b) in bits.iter().enumerate() {
            if b {
                for (k, w) in self.neighbors(i) {
                    fields[k] += w;
                }
            }
        }
        fields
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    pub assignments: Vec<Assignment>,
}

/// Exact minimum energy and every assignment attaining it, by visiting all
/// `2^n` assignments in Gray-code order.
pub fn ground_states_exhaustive(model: &BinaryQuadraticModel, limit: usize) -> Result<GroundStates, IsingError> {
    let n = model.num_variables();
    if n > limit || n >= 64 {
        return Err(IsingError::TooManyVariables { count: n, limit });
    }
    let cm = model.compile();
    let mut bits = vec![false; n];
    let mut fields = cm.linear.clone();
    let mut energy = cm.offset;
    let mut best = energy;
    let mut winners: Vec<Vec<bool>> = vec![bits.clone()];
    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        let turning_on = !bits[i];
        let sign = if turning_on { 1.0 } else { -1.0 };
        energy += sign * fields[i];
        bits[i] = turning_on;
        for (k, w) in cm.neighbors(i) {
            fields[k] += sign * w;
        }
        if energy < best - ENERGY_TOLERANCE {
            best = energy;
            winners.clear();
            winners.push(bits.clone());
        } else if (energy - best).abs() <= ENERGY_TOLERANCE {
            winners.push(bits.clone());
        }
    }
    let mut assignments: Vec<Assignment> = winners.into_iter().map(Assignment::from_bits).collect();
    assignments.sort();
    // Recompute from scratch so accumulated rounding never leaks out.
    let energy = assignments.first().map(|a| model.energy(a)).transpose()?.unwrap_or(model.offset());
    Ok(GroundStates { energy, assignments })
}
