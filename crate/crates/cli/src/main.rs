use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ttt_ising::encoder::{build_model, OutcomeBias, PenaltyConfig};
use ttt_ising::engine::{DecisionLog, EngineOptions};
use ttt_ising::game::{GameState, Mark, Square, SquareClass};
use ttt_ising::gates::{audit_gate, GateKind};
use ttt_ising::harness::{audit_win_chain, first_move_analysis, qubit_report, run_match, Backend, StartPolicy};
use ttt_ising::oracle::{exact_move_distribution, StrategyMode};
use ttt_ising::samplers::{split_seed, AnnealParams, SamplerConfig, DEFAULT_SPLIT_LIMIT};
use ttt_ising_service::ServiceConfig;

#[derive(Parser)]
#[command(name = "ttt-ising", version, about = "Tic-tac-toe engine driven by low-energy samples of a QUBO encoding")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum SamplerName {
    Exact,
    Sa,
    Remote,
    /// Exact game-tree counts in place of samples (test mode).
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OracleMode {
    MinimallyStrategic,
    Unconstrained,
}

#[derive(Args, Clone, Debug)]
struct Global {
    #[arg(long, global = true, value_enum, default_value = "sa")]
    sampler: SamplerName,
    #[arg(long, global = true, default_value_t = 100)]
    reads: usize,
    #[arg(long, global = true, default_value_t = 1)]
    sets: usize,
    #[arg(long, global = true, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Pseudo-count added to every outcome count.
    #[arg(long, global = true, default_value_t = 1.0)]
    smoothing: f64,
    /// Loss-minimising fallback when no candidate has a winning sample.
    #[arg(long, global = true, default_value_t = true, action = clap::ArgAction::Set)]
    fallback: bool,
    /// Penalty override such as `p_ms=3`; repeatable.
    #[arg(long = "penalty", global = true, value_name = "NAME=VALUE")]
    penalties: Vec<String>,
    /// Remote sampler URL.
    #[arg(long, global = true)]
    endpoint: Option<String>,
    /// Largest model the exact sampler enumerates.
    #[arg(long, global = true, default_value_t = DEFAULT_SPLIT_LIMIT)]
    exact_limit: usize,
    #[arg(long, global = true, value_enum, default_value = "minimally-strategic")]
    oracle_mode: OracleMode,
}

#[derive(Subcommand)]
enum Command {
    /// Play against the engine in the terminal; squares are 0-8 row-major.
    Play {
        #[arg(long, default_value = "O")]
        engine: Mark,
        /// Moves already played, e.g. "4,0".
        #[arg(long, default_value = "")]
        start: String,
    },
    /// Engine against a uniformly random opponent.
    Selfplay {
        #[arg(long, default_value_t = 30)]
        games: usize,
        #[arg(long, default_value = "alternate")]
        start: StartPolicy,
        #[arg(long)]
        json: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Per-square win estimates for the opening move.
    AnalyzeFirstMove {
        #[arg(long, value_enum, default_value = "both")]
        mode: AnalysisMode,
        #[arg(long, default_value_t = 1)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Prints every gate table; exits nonzero on any mismatch.
    AuditGates {
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
    /// Ground states of the isolated win-chain subsystem.
    AuditWinChain {
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Logical variable counts per move over random positions.
    QubitReport {
        #[arg(long, default_value_t = 100)]
        states: usize,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Writes one model in the JSON interchange form.
    ExportModel {
        #[arg(long, default_value = "")]
        transcript: String,
        #[arg(long, value_enum, default_value = "engine-wins")]
        bias: BiasName,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// HTTP/JSON game service.
    Serve {
        #[arg(long, env = "TTT_HOST")]
        host: Option<String>,
        #[arg(long, env = "TTT_PORT")]
        port: Option<u16>,
        #[arg(long, env = "TTT_WORKERS")]
        workers: Option<usize>,
        #[arg(long, env = "TTT_CORS_ORIGIN")]
        cors_origin: Option<String>,
        #[arg(long, env = "TTT_PERSIST_DIR")]
        persist_dir: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AnalysisMode {
    Oracle,
    Sa,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BiasName {
    EngineWins,
    EngineLoses,
    Draw,
}

impl Global {
    fn options(&self) -> Result<EngineOptions> {
        let mut penalties = PenaltyConfig::default();
        for spec in &self.penalties {
            let (name, value) = spec.split_once('=').ok_or_else(|| anyhow!("penalty override {spec:?} is not NAME=VALUE"))?;
            let value: f64 = value.trim().parse().with_context(|| format!("penalty {name}"))?;
            penalties.set(name.trim(), value).map_err(|e| anyhow!(e))?;
        }
        penalties.validate()?;
        if !(self.smoothing >= 0.0 && self.smoothing.is_finite()) {
            bail!("--smoothing must be a finite non-negative number");
        }
        Ok(EngineOptions { smoothing: self.smoothing, fallback: self.fallback, penalties, ..EngineOptions::default() })
    }

    fn anneal(&self) -> AnnealParams {
        AnnealParams { reads: self.reads, sets: self.sets, sweeps: self.sweeps, seed: self.seed, ..AnnealParams::default() }
    }

    fn backend(&self) -> Result<Backend> {
        let sampler = match self.sampler {
            SamplerName::Oracle => {
                let mode = match self.oracle_mode {
                    OracleMode::MinimallyStrategic => StrategyMode::MinimallyStrategic,
                    OracleMode::Unconstrained => StrategyMode::Unconstrained,
                };
                return Ok(Backend::Oracle { mode });
            }
            SamplerName::Exact => SamplerConfig::Exact { limit: self.exact_limit },
            SamplerName::Sa => SamplerConfig::Sa { params: self.anneal() },
            SamplerName::Remote => {
                let endpoint = self.endpoint.clone().ok_or_else(|| anyhow!("--sampler remote needs --endpoint"))?;
                SamplerConfig::Remote { endpoint, params: self.anneal() }
            }
        };
        sampler.build()?;
        Ok(Backend::Sampler { sampler })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match cli.command {
        Command::Play { engine, start } => {
            let stdin = std::io::stdin();
            play(g, engine, &start, &mut stdin.lock(), &mut std::io::stdout())?;
        }
        Command::Selfplay { games, start, json, csv } => {
            let report = run_match(games, start, &g.backend()?, &g.options()?, g.seed)?;
            print!("{report}");
            write_opt(json, || Ok(serde_json::to_string_pretty(&report)?))?;
            write_opt(csv, || Ok(report.to_csv()))?;
        }
        Command::AnalyzeFirstMove { mode, repeats, out, json } => {
            let csv = analyze_first_move(g, mode, repeats, json)?;
            match out {
                Some(path) => std::fs::write(&path, csv).with_context(|| path.display().to_string())?,
                None => print!("{csv}"),
            }
        }
        Command::AuditGates { p } => {
            let mut mismatches = 0;
            for kind in GateKind::ALL {
                let audit = audit_gate(kind, p)?;
                mismatches += audit.mismatches();
                println!("{audit}");
            }
            println!("{mismatches} mismatching rows");
            if mismatches > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::AuditWinChain { json } => {
            let audit = audit_win_chain(&g.options()?.penalties)?;
            println!("{audit}");
            write_opt(json, || Ok(serde_json::to_string_pretty(&audit)?))?;
        }
        Command::QubitReport { states, csv } => {
            let report = qubit_report(states, g.seed, &g.options()?.penalties)?;
            print!("{report}");
            write_opt(csv, || Ok(report.to_csv()))?;
        }
        Command::ExportModel { transcript, bias, out } => {
            let state = GameState::from_transcript(&transcript)?;
            let bias = match bias {
                BiasName::EngineWins => OutcomeBias::EngineWins,
                BiasName::EngineLoses => OutcomeBias::EngineLoses,
                BiasName::Draw => OutcomeBias::Draw,
            };
            let enc = build_model(&state, bias, &g.options()?.penalties)?;
            let text = serde_json::to_string_pretty(&enc.model.to_json())?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| path.display().to_string())?,
                None => println!("{text}"),
            }
            eprintln!("{} variables", enc.layout.qubit_count());
        }
        Command::Serve { host, port, workers, cors_origin, persist_dir } => {
            let mut cfg = ServiceConfig { backend: g.backend()?, options: g.options()?, ..ServiceConfig::default() };
            cfg.host = host.unwrap_or(cfg.host);
            cfg.port = port.unwrap_or(cfg.port);
            cfg.workers = workers.unwrap_or(cfg.workers).max(1);
            cfg.cors_origin = cors_origin;
            cfg.persist_dir = persist_dir;
            eprintln!("listening on {}:{}", cfg.host, cfg.port);
            tokio::runtime::Runtime::new()?.block_on(ttt_ising_service::serve(cfg))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_opt(path: Option<PathBuf>, body: impl FnOnce() -> Result<String>) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(&path, body()?).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

fn class_name(c: SquareClass) -> &'static str {
    match c {
        SquareClass::Corner => "corner",
        SquareClass::Edge => "edge",
        SquareClass::Centre => "centre",
    }
}

/// Long-form CSV, one row per (source, square).
fn analyze_first_move(g: &Global, mode: AnalysisMode, repeats: usize, json: Option<PathBuf>) -> Result<String> {
    let mut csv = String::from("source,square,x,y,class,n_win,n_loss,n_draw,p_win,p_loss,p_draw\n");
    let mut row = |source: &str, sq: Square, w: u64, l: u64, d: u64| {
        let t = (w + l + d).max(1) as f64;
        let _ = writeln!(
            csv,
            "{source},{},{},{},{},{w},{l},{d},{:.6},{:.6},{:.6}",
            sq.index(),
            sq.x(),
            sq.y(),
            class_name(sq.class()),
            w as f64 / t,
            l as f64 / t,
            d as f64 / t
        );
    };
    if mode != AnalysisMode::Sa {
        for (source, m) in [("oracle", StrategyMode::MinimallyStrategic), ("oracle_unconstrained", StrategyMode::Unconstrained)] {
            for c in exact_move_distribution(&GameState::new(), m)?.moves {
                row(source, c.square, c.wins, c.losses, c.draws);
            }
        }
    }
    if mode != AnalysisMode::Oracle {
        let backend = g.backend()?;
        let source = match &backend {
            Backend::Oracle { .. } => "oracle_fed".to_string(),
            Backend::Sampler { sampler } => format!("{:?}", sampler.kind()).to_lowercase(),
        };
        let report = first_move_analysis(&backend, &g.options()?, repeats, g.seed)?;
        for r in &report.squares {
            row(&source, r.square, r.n_win, r.n_loss, r.n_draw);
        }
        eprintln!("{report}");
        write_opt(json, || Ok(serde_json::to_string_pretty(&report)?))?;
    }
    Ok(csv)
}

fn render(state: &GameState) -> String {
    let mut out = String::new();
    for y in 0..3 {
        let cells: Vec<String> = (0..3)
            .map(|x| {
                let i = 3 * y + x;
                match state.board()[i] {
                    Mark::Empty => i.to_string(),
                    m => m.to_string(),
                }
            })
            .collect();
        let _ = writeln!(out, " {}", cells.join(" | "));
    }
    out
}

fn play(g: &Global, engine: Mark, start: &str, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<()> {
    if engine == Mark::Empty {
        bail!("--engine must be X or O");
    }
    let backend = g.backend()?;
    let options = g.options()?;
    let mut state = GameState::from_transcript(start)?;
    let mut line = String::new();
    while !state.is_terminal() {
        write!(out, "{}", render(&state))?;
        if state.to_move() == engine {
            let d = backend.decide(&state, &options, split_seed(g.seed, state.moves_played() as u64))?;
            let log = DecisionLog::new(&state, &d);
            for c in &log.candidates {
                writeln!(out, "  square {}: win {:.3} loss {:.3} draw {:.3} (n={})", c.square.index(), c.p_win, c.p_loss, c.p_draw, c.n_tot)?;
            }
            let note = if d.fallback_used { " (fallback)" } else { "" };
            writeln!(out, "engine {engine} plays {}{note}", d.square.index())?;
            state = state.apply_move(d.square)?;
            continue;
        }
        write!(out, "your move ({}): ", state.to_move())?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(());
        }
        let parsed = line.trim().parse::<usize>().ok().and_then(|i| Square::from_index(i).ok());
        match parsed.map(|sq| state.apply_move(sq)) {
            Some(Ok(next)) => state = next,
            Some(Err(e)) => writeln!(out, "illegal move: {e}")?,
            None => writeln!(out, "enter a square index 0-8")?,
        }
    }
    write!(out, "{}", render(&state))?;
    writeln!(out, "result: {:?} ({})", state.outcome(), state.transcript())?;
    Ok(())
}
