//! Single-flip Metropolis simulated annealing.
//!
//! Each read starts from a uniformly random assignment and performs
//! `sweeps` sweeps; sweep `k` visits every variable once in a fresh random
//! order at inverse temperature `beta_start * (beta_end / beta_start)^(k / (sweeps - 1))`.
//!
//! Seeds: set `s` of a run with base seed `b` uses `split_seed(b, s)`, and
//! read `r` of that set uses `split_seed(split_seed(b, s), r)`. Every read
//! owns its generator, so parallel and sequential runs agree bit for bit.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ising::{Assignment, BinaryQuadraticModel, CompiledModel};

use super::{SampleBatch, SampleError, SamplerKind};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealParams {
    pub reads: usize,
    pub sets: usize,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
}

impl Default for AnnealParams {
    fn default() -> Self {
        AnnealParams { reads: 5000, sets: 5, sweeps: 1000, beta_start: 0.1, beta_end: 10.0, seed: 0 }
    }
}

impl AnnealParams {
    /// Reduced read budget for a single desk machine.
    pub fn desk() -> Self {
        AnnealParams { reads: 100, sets: 1, ..AnnealParams::default() }
    }

    pub fn validate(&self) -> Result<(), SampleError> {
        let bad = |m: &str| Err(SampleError::InvalidParams(m.to_string()));
        if self.reads == 0 || self.sets == 0 || self.sweeps == 0 {
            return bad("reads, sets and sweeps must all be at least 1");
        }
        if !(self.beta_start > 0.0 && self.beta_end.is_finite() && self.beta_start < self.beta_end) {
            return bad("inverse temperatures must satisfy 0 < beta_start < beta_end");
        }
        Ok(())
    }

    pub fn total_reads(&self) -> usize {
        self.reads * self.sets
    }

    fn betas(&self) -> Vec<f64> {
        if self.sweeps == 1 {
            return vec![self.beta_end];
        }
        let ratio = self.beta_end / self.beta_start;
        (0..self.sweeps)
            .map(|k| self.beta_start * ratio.powf(k as f64 / (self.sweeps - 1) as f64))
            .collect()
    }
}

/// SplitMix64 finaliser applied to `base + (index + 1) * golden`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn anneal_read(cm: &CompiledModel, betas: &[f64], seed: u64) -> Vec<bool> {
    let n = cm.num_variables();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
    let mut fields = cm.local_fields(&bits);
    let mut order: Vec<usize> = (0..n).collect();
    for &beta in betas {
        order.shuffle(&mut rng);
        for &i in &order {
            // Energy change of flipping i.
            let delta = if bits[i] { -fields[i] } else { fields[i] };
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                let sign = if bits[i] { -1.0 } else { 1.0 };
                bits[i] = !bits[i];
                for (k, w) in cm.neighbors(i) {
                    fields[k] += sign * w;
                }
            }
        }
    }
    bits
}

/// Raw reads of one set, in read order.
pub fn sample_anneal_set(
    model: &BinaryQuadraticModel,
    params: &AnnealParams,
    set: usize,
) -> Result<Vec<(Assignment, f64)>, SampleError> {
    params.validate()?;
    let cm = model.compile();
    let betas = params.betas();
    let set_seed = split_seed(params.seed, set as u64);
    let run = |r: usize| {
        let bits = anneal_read(&cm, &betas, split_seed(set_seed, r as u64));
        let energy = cm.energy_of(&bits);
        (Assignment::from_bits(bits), energy)
    };
    #[cfg(feature = "parallel")]
    let reads = (0..params.reads).into_par_iter().map(run).collect();
    #[cfg(not(feature = "parallel"))]
    let reads = (0..params.reads).map(run).collect();
    Ok(reads)
}

pub fn sample_anneal(model: &BinaryQuadraticModel, params: &AnnealParams) -> Result<SampleBatch, SampleError> {
    let mut reads = Vec::with_capacity(params.total_reads());
    for set in 0..params.sets {
        reads.extend(sample_anneal_set(model, params, set)?);
    }
    Ok(SampleBatch::from_reads(reads, SamplerKind::Sa, Some(*params)))
}
