//! Exact ground-state enumeration.
//!
//! Variables are split into an independent set `I` (no couplings inside it)
//! and the remainder `S`. Only `S` is enumerated, in Gray-code order; with
//! `S` fixed every member of `I` sees a constant local field and is
//! minimised on its own, taking both values when its field is zero. The
//! enumeration limit applies to `|S|`.

use crate::ising::{Assignment, BinaryQuadraticModel, IsingError, VariableId, ENERGY_TOLERANCE};

use super::{SampleBatch, SampleError, Sampler, SamplerKind};

/// Default cap on `|S|`. Two-square endgame models need 23.
pub const DEFAULT_SPLIT_LIMIT: usize = 24;

/// Cap on the number of distinct ground states one call may return.
pub const MAX_GROUND_STATES: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactSampler {
    pub limit: usize,
}

impl Default for ExactSampler {
    fn default() -> Self {
        ExactSampler { limit: DEFAULT_SPLIT_LIMIT }
    }
}

impl Sampler for ExactSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Exact
    }

    fn sample(&self, model: &BinaryQuadraticModel) -> Result<SampleBatch, SampleError> {
        sample_exact(model, self.limit)
    }
}

fn split_independent(model: &BinaryQuadraticModel) -> (Vec<usize>, Vec<usize>) {
    // Greedy maximum independent set: repeatedly take a vertex of minimum
    // remaining degree and delete its neighbourhood.
    let cm = model.compile();
    let n = cm.num_variables();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| cm.degree(i)).collect();
    let mut in_set = vec![false; n];
    while let Some(i) = (0..n).filter(|&i| alive[i]).min_by_key(|&i| (degree[i], i)) {
        in_set[i] = true;
        alive[i] = false;
        let removed: Vec<usize> = cm.neighbors(i).map(|(k, _)| k).filter(|&k| alive[k]).collect();
        for k in removed {
            alive[k] = false;
            for (m, _) in cm.neighbors(k) {
                degree[m] = degree[m].saturating_sub(1);
            }
        }
    }
    // (1,2)-swaps: trade one member for two non-adjacent outsiders whose
    // only neighbour in the set is that member.
    let adjacent = |a: usize, b: usize| cm.neighbors(a).any(|(k, _)| k == b);
    let mut improved = true;
    while improved {
        improved = false;
        for u in (0..n).filter(|&u| in_set[u]) {
            let solo: Vec<usize> = cm
                .neighbors(u)
                .map(|(k, _)| k)
                .filter(|&k| !in_set[k] && cm.neighbors(k).all(|(m, _)| m == u || !in_set[m]))
                .collect();
            let pair = solo
                .iter()
                .enumerate()
                .find_map(|(x, &a)| solo[x + 1..].iter().find(|&&b| !adjacent(a, b)).map(|&b| (a, b)));
            if let Some((a, b)) = pair {
                in_set[u] = false;
                in_set[a] = true;
                in_set[b] = true;
                improved = true;
                break;
            }
        }
    }
    (0..n).partition(|&i| in_set[i])
}

/// Size of the enumerated part for `model`; compare against the limit.
pub fn enumerated_size(model: &BinaryQuadraticModel) -> usize {
    split_independent(model).1.len()
}

/// All minimum-energy assignments of `model`, each with multiplicity 1.
pub fn sample_exact(model: &BinaryQuadraticModel, limit: usize) -> Result<SampleBatch, SampleError> {
    let cm = model.compile();
    let n = cm.num_variables();
    let (free, enumerated) = split_independent(model);
    if enumerated.len() > limit || enumerated.len() >= 64 {
        return Err(IsingError::TooManyVariables { count: enumerated.len(), limit }.into());
    }
    let mut is_free = vec![false; n];
    for &i in &free {
        is_free[i] = true;
    }

    let mut bits = vec![false; n];
    let mut fields = cm.linear.clone();
    let mut e_enum = cm.offset;
    let mut free_min: f64 = free.iter().map(|&i| fields[i].min(0.0)).sum();
    let mut best = e_enum + free_min;
    let mut winners: Vec<u64> = vec![0];
    let mut mask = 0u64;

    for step in 1u64..(1u64 << enumerated.len()) {
        let pos = step.trailing_zeros() as usize;
        let i = enumerated[pos];
        let on = !bits[i];
        let sign = if on { 1.0 } else { -1.0 };
        e_enum += sign * fields[i];
        bits[i] = on;
        mask ^= 1 << pos;
        for (k, w) in cm.neighbors(i) {
            if is_free[k] {
                free_min -= fields[k].min(0.0);
                fields[k] += sign * w;
                free_min += fields[k].min(0.0);
            } else {
                fields[k] += sign * w;
            }
        }
        let total = e_enum + free_min;
        if total < best - ENERGY_TOLERANCE {
            best = total;
            winners.clear();
            winners.push(mask);
        } else if (total - best).abs() <= ENERGY_TOLERANCE {
            winners.push(mask);
        }
    }

    let mut reads = Vec::new();
    for mask in winners {
        let mut base = Assignment::zeros(n);
        for (pos, &i) in enumerated.iter().enumerate() {
            if mask >> pos & 1 == 1 {
                base.set(VariableId(i as u32), true);
            }
        }
        let base_bits: Vec<bool> = base.iter().collect();
        let f = cm.local_fields(&base_bits);
        let mut ties = Vec::new();
        for &i in &free {
            if f[i] < -ENERGY_TOLERANCE {
                base.set(VariableId(i as u32), true);
            } else if f[i].abs() <= ENERGY_TOLERANCE {
                ties.push(i);
            }
        }
        if ties.len() >= 20 || reads.len() + (1usize << ties.len()) > MAX_GROUND_STATES {
            return Err(SampleError::InvalidParams(format!(
                "ground-state degeneracy exceeds {MAX_GROUND_STATES} assignments"
            )));
        }
        for combo in 0u32..(1u32 << ties.len()) {
            let mut asg = base.clone();
            for (t, &i) in ties.iter().enumerate() {
                if combo >> t & 1 == 1 {
                    asg.set(VariableId(i as u32), true);
                }
            }
            let e = model.energy(&asg)?;
            reads.push((asg, e));
        }
    }
    let exact_best = reads.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    reads.retain(|r| r.1 <= exact_best + ENERGY_TOLERANCE);
    Ok(SampleBatch::from_reads(reads, SamplerKind::Exact, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{apply_gate, GateKind};
    use crate::ising::ground_states_exhaustive;

    #[test]
    fn single_variable() {
        let mut m = BinaryQuadraticModel::new();
        let v = m.add_variable("v").unwrap();
        m.add_bias(v, -1.0).unwrap();
        let b = sample_exact(&m, 22).unwrap();
        assert_eq!(b.samples.len(), 1);
        assert_eq!(b.samples[0].energy, -1.0);
        assert!(b.samples[0].assignment.get(v));
    }

    #[test]
    fn and_gate_has_four_ground_states() {
        let mut m = BinaryQuadraticModel::new();
        let vs: Vec<_> = ["i1", "i2", "o"].iter().map(|l| m.add_variable(*l).unwrap()).collect();
        apply_gate(&mut m, GateKind::And, &vs, 1.0).unwrap();
        let b = sample_exact(&m, 22).unwrap();
        assert_eq!(b.samples.len(), 4);
        assert!(b.samples.iter().all(|s| s.multiplicity == 1 && s.energy == 0.0));
    }

    #[test]
    fn agrees_with_plain_enumeration_on_gate_chains() {
        let mut m = BinaryQuadraticModel::new();
        let v: Vec<_> = (0..10).map(|i| m.add_variable(format!("x{i}")).unwrap()).collect();
        apply_gate(&mut m, GateKind::Wand, &[v[0], v[1], v[2], v[3]], 1.0).unwrap();
        apply_gate(&mut m, GateKind::Pw, &[v[3], v[4], v[5], v[6]], 0.5).unwrap();
        apply_gate(&mut m, GateKind::Or, &[v[6], v[7], v[8]], 2.0).unwrap();
        apply_gate(&mut m, GateKind::Wnot, &[v[8], v[9]], 1.0).unwrap();
        m.add_bias(v[9], -0.25).unwrap();
        m.add_bias(v[0], 0.5).unwrap();
        let plain = ground_states_exhaustive(&m, 22).unwrap();
        let split = sample_exact(&m, 22).unwrap();
        assert_eq!(split.min_energy(), Some(plain.energy));
        let got: Vec<_> = split.samples.iter().map(|s| s.assignment.clone()).collect();
        assert_eq!(got, plain.assignments);
    }

    #[test]
    fn limit_applies_to_enumerated_part() {
        let mut m = BinaryQuadraticModel::new();
        for i in 0..30 {
            let v = m.add_variable(format!("x{i}")).unwrap();
            m.add_bias(v, if i % 2 == 0 { -1.0 } else { 1.0 }).unwrap();
        }
        // No couplings: everything is free, nothing is enumerated.
        assert_eq!(enumerated_size(&m), 0);
        let b = sample_exact(&m, 22).unwrap();
        assert_eq!(b.samples.len(), 1);
        assert_eq!(b.samples[0].energy, -15.0);

        let mut chain = BinaryQuadraticModel::new();
        let v: Vec<_> = (0..60).map(|i| chain.add_variable(format!("x{i}")).unwrap()).collect();
        for w in v.windows(2) {
            chain.add_coupling(w[0], w[1], 1.0).unwrap();
        }
        assert!(matches!(sample_exact(&chain, 22), Err(SampleError::Model(IsingError::TooManyVariables { .. }))));
    }
}
