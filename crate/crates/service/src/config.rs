use std::path::PathBuf;

use ttt_ising::engine::EngineOptions;
use ttt_ising::harness::Backend;
use ttt_ising::samplers::{AnnealParams, SamplerConfig};

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub host: String,
    pub port: u16,
    /// Upper bound on engine decisions computed at once.
    pub workers: usize,
    /// Backend used when a create request names none.
    pub backend: Backend,
    pub options: EngineOptions,
    /// `None` allows any origin.
    pub cors_origin: Option<String>,
    /// Transcripts are mirrored here as `<id>.json` when set.
    pub persist_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            host: "127.0.0.1".into(),
            port: 8080,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            backend: Backend::Sampler { sampler: SamplerConfig::Sa { params: AnnealParams::desk() } },
            options: EngineOptions::match_play(),
            cors_origin: None,
            persist_dir: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `TTT_HOST`, `TTT_PORT`, `TTT_WORKERS`,
    /// `TTT_CORS_ORIGIN` and `TTT_PERSIST_DIR`.
    pub fn from_env() -> Result<Self, String> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    pub fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self, String> {
        let mut cfg = ServiceConfig::default();
        if let Some(h) = get("TTT_HOST") {
            cfg.host = h;
        }
        if let Some(p) = get("TTT_PORT") {
            cfg.port = p.parse().map_err(|_| format!("TTT_PORT: not a port: {p}"))?;
        }
        if let Some(w) = get("TTT_WORKERS") {
            cfg.workers = w.parse().map_err(|_| format!("TTT_WORKERS: not a count: {w}"))?;
        }
        if let Some(o) = get("TTT_CORS_ORIGIN") {
            cfg.cors_origin = Some(o);
        }
        if let Some(d) = get("TTT_PERSIST_DIR") {
            cfg.persist_dir = Some(d.into());
        }
        if cfg.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        Ok(cfg)
    }
}
