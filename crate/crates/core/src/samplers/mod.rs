//! Low-energy samplers over binary quadratic models.

mod anneal;
mod exact;
mod remote;

pub use anneal::{sample_anneal, sample_anneal_set, split_seed, AnnealParams};
pub use exact::{enumerated_size, sample_exact, ExactSampler, DEFAULT_SPLIT_LIMIT};
pub use remote::{sample_remote, RemoteRequest, RemoteResponse, RemoteSample, RemoteSampler};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encoder::OutcomeBias;
use crate::ising::{Assignment, BinaryQuadraticModel, IsingError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("invalid sampler parameters: {0}")]
    InvalidParams(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed sampler response: {0}")]
    Schema(String),
    #[error(transparent)]
    Model(#[from] IsingError),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    #[serde(serialize_with = "as_bitstring")]
    pub assignment: Assignment,
    pub energy: f64,
    pub multiplicity: u64,
}

fn as_bitstring<S: serde::Serializer>(a: &Assignment, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&a.to_bitstring())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exact,
    Sa,
    Remote,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SamplerKind::Exact => "exact",
            SamplerKind::Sa => "sa",
            SamplerKind::Remote => "remote",
        })
    }
}

impl FromStr for SamplerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SamplerKind::Exact),
            "sa" => Ok(SamplerKind::Sa),
            "remote" => Ok(SamplerKind::Remote),
            _ => Err(format!("unknown sampler {s:?}; expected exact, sa or remote")),
        }
    }
}

/// Deduplicated sampler output. Samples are sorted by energy, then by
/// assignment, and every energy is the locally evaluated model energy.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleBatch {
    pub samples: Vec<Sample>,
    pub sampler: SamplerKind,
    pub bias: Option<OutcomeBias>,
    pub params: Option<AnnealParams>,
    /// Remote samples whose reported energy disagreed with the local one.
    pub energy_mismatches: usize,
}

impl SampleBatch {
    pub fn from_reads(reads: Vec<(Assignment, f64)>, sampler: SamplerKind, params: Option<AnnealParams>) -> Self {
        let mut reads = reads;
        reads.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
        let mut samples: Vec<Sample> = Vec::new();
        for (assignment, energy) in reads {
            match samples.last_mut() {
                Some(last) if last.assignment == assignment => last.multiplicity += 1,
                _ => samples.push(Sample { assignment, energy, multiplicity: 1 }),
            }
        }
        SampleBatch { samples, sampler, bias: None, params, energy_mismatches: 0 }
    }

    pub fn with_bias(mut self, bias: OutcomeBias) -> Self {
        self.bias = Some(bias);
        self
    }

    pub fn total_reads(&self) -> u64 {
        self.samples.iter().map(|s| s.multiplicity).sum()
    }

    pub fn min_energy(&self) -> Option<f64> {
        self.samples.iter().map(|s| s.energy).min_by(f64::total_cmp)
    }
}

/// Anything that turns a model into a batch of low-energy assignments.
pub trait Sampler: Send + Sync {
    fn kind(&self) -> SamplerKind;
    fn sample(&self, model: &BinaryQuadraticModel) -> Result<SampleBatch, SampleError>;
}

/// Serializable sampler choice shared by the CLI and the service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SamplerConfig {
    Exact {
        #[serde(default = "default_exact_limit")]
        limit: usize,
    },
    Sa {
        #[serde(default)]
        params: AnnealParams,
    },
    Remote {
        endpoint: String,
        #[serde(default)]
        params: AnnealParams,
    },
}

fn default_exact_limit() -> usize {
    exact::DEFAULT_SPLIT_LIMIT
}

impl SamplerConfig {
    pub fn build(&self) -> Result<Box<dyn Sampler>, SampleError> {
        Ok(match self {
            SamplerConfig::Exact { limit } => Box::new(ExactSampler { limit: *limit }),
            SamplerConfig::Sa { params } => {
                params.validate()?;
                Box::new(*params)
            }
            SamplerConfig::Remote { endpoint, params } => {
                params.validate()?;
                Box::new(RemoteSampler::new(endpoint.clone(), *params))
            }
        })
    }

    /// Same sampler with its stream seed replaced; exact sampling ignores it.
    pub fn reseeded(&self, seed: u64) -> SamplerConfig {
        let mut out = self.clone();
        if let SamplerConfig::Sa { params } | SamplerConfig::Remote { params, .. } = &mut out {
            params.seed = seed;
        }
        out
    }

    pub fn kind(&self) -> SamplerKind {
        match self {
            SamplerConfig::Exact { .. } => SamplerKind::Exact,
            SamplerConfig::Sa { .. } => SamplerKind::Sa,
            SamplerConfig::Remote { .. } => SamplerKind::Remote,
        }
    }
}

impl Sampler for AnnealParams {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Sa
    }

    fn sample(&self, model: &BinaryQuadraticModel) -> Result<SampleBatch, SampleError> {
        sample_anneal(model, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_are_deduplicated_and_sorted() {
        let a = Assignment::from_bits([true, false]);
        let b = Assignment::from_bits([false, false]);
        let batch = SampleBatch::from_reads(vec![(a.clone(), -1.0), (b.clone(), 0.0), (a.clone(), -1.0)], SamplerKind::Sa, None);
        assert_eq!(batch.samples.len(), 2);
        assert_eq!(batch.samples[0].assignment, a);
        assert_eq!(batch.samples[0].multiplicity, 2);
        assert_eq!(batch.total_reads(), 3);
        assert_eq!(batch.min_energy(), Some(-1.0));
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SamplerConfig::Sa { params: AnnealParams { reads: 7, ..AnnealParams::default() } };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SamplerConfig>(&text).unwrap(), cfg);
        let exact: SamplerConfig = serde_json::from_str(r#"{"kind":"exact"}"#).unwrap();
        assert_eq!(exact, SamplerConfig::Exact { limit: exact::DEFAULT_SPLIT_LIMIT });
        assert!(serde_json::from_str::<SamplerConfig>(r#"{"kind":"quantum"}"#).is_err());
    }
}
