//! Client for an external sampler speaking the model JSON wire format.
//!
//! Request: `POST {model, params}`. Response:
//! `{samples: [{assignment, energy, multiplicity}]}` where `assignment` is a
//! bitstring in variable-id order. Energies are always recomputed locally;
//! disagreements are counted, not trusted.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ising::{Assignment, BinaryQuadraticModel, ModelJson, ENERGY_TOLERANCE};

use super::{AnnealParams, Sample, SampleBatch, SampleError, Sampler, SamplerKind};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemoteRequest {
    pub model: ModelJson,
    pub params: AnnealParams,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemoteSample {
    pub assignment: String,
    pub energy: f64,
    #[serde(default = "one")]
    pub multiplicity: u64,
}

fn one() -> u64 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RemoteResponse {
    pub samples: Vec<RemoteSample>,
}

#[derive(Clone, Debug)]
pub struct RemoteSampler {
    pub endpoint: String,
    pub params: AnnealParams,
    pub timeout: Duration,
}

impl RemoteSampler {
    pub fn new(endpoint: impl Into<String>, params: AnnealParams) -> Self {
        RemoteSampler { endpoint: endpoint.into(), params, timeout: Duration::from_secs(300) }
    }
}

impl Sampler for RemoteSampler {
    fn kind(&self) -> SamplerKind {
        SamplerKind::Remote
    }

    fn sample(&self, model: &BinaryQuadraticModel) -> Result<SampleBatch, SampleError> {
        sample_remote(model, &self.endpoint, &self.params, self.timeout)
    }
}

pub fn sample_remote(
    model: &BinaryQuadraticModel,
    endpoint: &str,
    params: &AnnealParams,
    timeout: Duration,
) -> Result<SampleBatch, SampleError> {
    let client = reqwest::blocking::Client::builder()
        .timeout(timeout)
        .build()
        .map_err(|e| SampleError::Transport(e.to_string()))?;
    let request = RemoteRequest { model: model.to_json(), params: *params };
    let response = client
        .post(endpoint)
        .json(&request)
        .send()
        .and_then(|r| r.error_for_status())
        .map_err(|e| SampleError::Transport(e.to_string()))?;
    let body = response.text().map_err(|e| SampleError::Transport(e.to_string()))?;
    let parsed: RemoteResponse = serde_json::from_str(&body).map_err(|e| SampleError::Schema(e.to_string()))?;
    verify_response(model, parsed, params)
}

/// Checks shapes and replaces reported energies with local ones.
pub fn verify_response(
    model: &BinaryQuadraticModel,
    response: RemoteResponse,
    params: &AnnealParams,
) -> Result<SampleBatch, SampleError> {
    let mut mismatches = 0;
    let mut reads = Vec::new();
    for s in response.samples {
        let asg = Assignment::from_bitstring(&s.assignment)
            .ok_or_else(|| SampleError::Schema(format!("assignment {:?} is not a bitstring", s.assignment)))?;
        if asg.len() != model.num_variables() {
            return Err(SampleError::Schema(format!(
                "assignment has {} bits, model has {} variables",
                asg.len(),
                model.num_variables()
            )));
        }
        if s.multiplicity == 0 {
            return Err(SampleError::Schema("multiplicity must be at least 1".into()));
        }
        let energy = model.energy(&asg)?;
        if !s.energy.is_finite() || (s.energy - energy).abs() > ENERGY_TOLERANCE {
            mismatches += 1;
        }
        for _ in 0..s.multiplicity {
            reads.push((asg.clone(), energy));
        }
    }
    let mut batch = SampleBatch::from_reads(reads, SamplerKind::Remote, Some(*params));
    batch.energy_mismatches = mismatches;
    Ok(batch)
}

impl From<&Sample> for RemoteSample {
    fn from(s: &Sample) -> Self {
        RemoteSample { assignment: s.assignment.to_bitstring(), energy: s.energy, multiplicity: s.multiplicity }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    /// Serves exactly one request with `body`, returning the endpoint URL.
    fn one_shot_server(body: &'static str) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut request = vec![0; length];
            reader.read_exact(&mut request).unwrap();
            let parsed: RemoteRequest = serde_json::from_slice(&request).unwrap();
            assert_eq!(parsed.model.variables.len(), 2);
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 200 OK\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                body.len(),
                body
            )
            .unwrap();
        });
        format!("http://{addr}/sample")
    }

    fn model() -> BinaryQuadraticModel {
        let mut m = BinaryQuadraticModel::new();
        let a = m.add_variable("a").unwrap();
        m.add_variable("b").unwrap();
        m.add_bias(a, 2.0).unwrap();
        m.add_offset(0.5).unwrap();
        m
    }

    #[test]
    fn echoed_zero_assignment_is_rescored() {
        let url = one_shot_server(r#"{"samples":[{"assignment":"00","energy":0.5,"multiplicity":3}]}"#);
        let b = sample_remote(&model(), &url, &AnnealParams::default(), Duration::from_secs(10)).unwrap();
        assert_eq!(b.samples.len(), 1);
        assert_eq!(b.samples[0].energy, 0.5);
        assert_eq!(b.samples[0].multiplicity, 3);
        assert_eq!(b.energy_mismatches, 0);
    }

    #[test]
    fn malformed_response_is_schema_error() {
        let url = one_shot_server(r#"{"result":"nope"}"#);
        let err = sample_remote(&model(), &url, &AnnealParams::default(), Duration::from_secs(10)).unwrap_err();
        assert!(matches!(err, SampleError::Schema(_)));
    }

    #[test]
    fn wrong_energy_is_recomputed_and_counted() {
        let url = one_shot_server(r#"{"samples":[{"assignment":"10","energy":-4.0}]}"#);
        let b = sample_remote(&model(), &url, &AnnealParams::default(), Duration::from_secs(10)).unwrap();
        assert_eq!(b.samples[0].energy, 2.5);
        assert_eq!(b.energy_mismatches, 1);
    }

    #[test]
    fn wrong_width_rejected() {
        let r = RemoteResponse { samples: vec![RemoteSample { assignment: "1".into(), energy: 0.0, multiplicity: 1 }] };
        assert!(matches!(verify_response(&model(), r, &AnnealParams::default()), Err(SampleError::Schema(_))));
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let err = sample_remote(&model(), &url, &AnnealParams::default(), Duration::from_secs(5)).unwrap_err();
        assert!(matches!(err, SampleError::Transport(_)));
    }
}
