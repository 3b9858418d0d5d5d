//! One test per acceptance criterion. Each writes a single
//! `ACCEPT <name>: PASS|FAIL <detail>` line before asserting.

use std::collections::HashSet;
use std::io::Write;
use std::time::{Duration, Instant};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ttt_ising::encoder::{build_model, build_model_with, OutcomeBias, PenaltyConfig, Role, WinBias};
use ttt_ising::engine::{select_move, CandidateStats, EngineOptions, MoveStats};
use ttt_ising::game::{GameState, Mark, Square, SquareClass, LINES};
use ttt_ising::gates::{apply_gate, GateKind};
use ttt_ising::harness::{
    audit_win_chain, endgame_audit, first_move_analysis, qubit_report, reachable_states, run_match, Backend, StartPolicy,
    Starter,
};
use ttt_ising::ising::{BinaryQuadraticModel, VariableId, ENERGY_TOLERANCE};
use ttt_ising::oracle::{count_raw_sequences, enumerate_games, exact_move_distribution, StrategyMode};
use ttt_ising::samplers::{AnnealParams, SamplerConfig};

const GATE_PENALTIES: [f64; 3] = [0.5, 1.0, 2.0];
const GATE_TIME_LIMIT: Duration = Duration::from_secs(1);
const ORACLE_TIME_LIMIT: Duration = Duration::from_secs(10);
const MID_MOVE_STATES: usize = 100;
const FIRST_MOVE_SAMPLES: u64 = 150_000;
const MATCH_GAMES: usize = 30;
const ENGINE_START_MIN_WINS: usize = 27;
const RANDOM_START_MIN_NON_LOSSES: usize = 24;
const ORDERING_PATHS: usize = 1_000;
const ORDERING_VARIANTS: usize = 1_000;
const ARGMAX_STATES: usize = 50;
const SEED: u64 = 20_240_601;

/// Writes through the stdout handle so the line survives output capture.
fn report(name: &str, pass: bool, detail: impl std::fmt::Display) {
    let line = format!("ACCEPT {name}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
}

fn sq(i: usize) -> Square {
    Square::from_index(i).unwrap()
}

/// Reference penalty rows, transcribed independently of the gate builders, as
/// multiples of the gate penalty; unlisted rows are zero.
fn transcribed_rows(kind: GateKind) -> &'static [(&'static [u8], f64)] {
    match kind {
        GateKind::And => &[(&[1, 1, 0], 1.0), (&[0, 0, 1], 3.0), (&[1, 0, 1], 1.0), (&[0, 1, 1], 1.0)],
        GateKind::Or => &[(&[1, 0, 0], 1.0), (&[0, 1, 0], 1.0), (&[0, 0, 1], 1.0), (&[1, 1, 0], 3.0)],
        GateKind::Wnot => &[(&[1, 1], 1.0)],
        GateKind::Wand => &[
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
        GateKind::Equal => unreachable!("no reference table"),
    }
}

#[test]
fn gate_tables() {
    let start = Instant::now();
    let mut mismatches = Vec::new();
    let mut rows = 0;
    for kind in [GateKind::And, GateKind::Or, GateKind::Wnot, GateKind::Wand, GateKind::Pw] {
        for p in GATE_PENALTIES {
            let mut m = BinaryQuadraticModel::new();
            let vars: Vec<VariableId> = (0..kind.arity()).map(|i| m.add_variable(format!("v{i}")).unwrap()).collect();
            apply_gate(&mut m, kind, &vars, p).unwrap();
            for code in 0..1u32 << kind.arity() {
                let bits: Vec<u8> = (0..kind.arity()).map(|k| (code >> (kind.arity() - 1 - k) & 1) as u8).collect();
                let expected = transcribed_rows(kind).iter().find(|(r, _)| *r == bits.as_slice()).map_or(0.0, |(_, k)| k * p);
                let asg = ttt_ising::ising::Assignment::from_bits(bits.iter().map(|&b| b == 1));
                let got = m.energy(&asg).unwrap();
                rows += 1;
                if got != expected {
                    mismatches.push(format!("{kind} p={p} {bits:?}: {got} vs {expected}"));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < GATE_TIME_LIMIT;
    report("gate-tables", pass, format!("{rows} rows, {} mismatches, {elapsed:.2?}", mismatches.len()));
    assert!(pass, "{mismatches:?}");
}

#[test]
fn qubit_counts() {
    let cfg = PenaltyConfig::default();
    let count = |s: &GameState| build_model(s, OutcomeBias::Draw, &cfg).unwrap().layout.qubit_count();
    let empty = count(&GameState::new());
    let seven: HashSet<usize> = reachable_states(7).iter().map(count).collect();
    let eight: HashSet<usize> = reachable_states(8).iter().map(count).collect();
    let anchors = empty == 963 && seven == HashSet::from([33]) && eight == HashSet::from([23]);
    let mid = qubit_report(MID_MOVE_STATES, SEED, &cfg).unwrap();
    let outside: Vec<String> = mid
        .rows
        .iter()
        .filter(|r| !r.all_within())
        .map(|r| format!("move {} {}/{} in {}-{} (saw {}-{})", r.move_index, r.within, r.states, r.reference.0, r.reference.1, r.min, r.max))
        .collect();
    let pass = anchors && outside.is_empty();
    report(
        "qubit-counts",
        pass,
        format!("empty={empty} seven={seven:?} eight={eight:?}; mid-move misses: [{}]", outside.join("; ")),
    );
    assert!(anchors, "anchor counts");
    assert!(outside.is_empty(), "{mid}");
}

#[test]
fn oracle_counts() {
    let start = Instant::now();
    let games = enumerate_games(&GameState::new(), StrategyMode::Unconstrained);
    let raw = count_raw_sequences(&GameState::new());
    let elapsed = start.elapsed();
    let pass = games == 255_168 && raw == 362_880 && elapsed < ORACLE_TIME_LIMIT;
    report("oracle-counts", pass, format!("games={games} sequences={raw} in {elapsed:.2?}"));
    assert!(pass);
}

#[test]
fn first_move_rank_order() {
    let mut oracle_ok = true;
    let mut oracle_detail = Vec::new();
    for mode in [StrategyMode::MinimallyStrategic, StrategyMode::Unconstrained] {
        let d = exact_move_distribution(&GameState::new(), mode).unwrap();
        let mut class_p = |c: SquareClass| {
            let rows: Vec<_> = d.moves.iter().filter(|m| m.square.class() == c).collect();
            let first = rows[0].p_win();
            oracle_ok &= rows.iter().all(|m| (m.wins, m.losses, m.draws) == (rows[0].wins, rows[0].losses, rows[0].draws));
            first
        };
        let (centre, corner, edge) = (class_p(SquareClass::Centre), class_p(SquareClass::Corner), class_p(SquareClass::Edge));
        oracle_ok &= centre > corner && corner > edge;
        oracle_detail.push(format!("{mode:?} {centre:.4}/{corner:.4}/{edge:.4}"));
    }

    // Shortened schedule so that the sample budget fits a desk run.
    let params = AnnealParams { reads: 1_000, sets: 1, sweeps: 100, seed: SEED, ..AnnealParams::default() };
    let per_repeat = 3 * params.total_reads() as u64;
    let repeats = FIRST_MOVE_SAMPLES.div_ceil(per_repeat) as usize;
    let backend = Backend::Sampler { sampler: SamplerConfig::Sa { params } };
    let sa = first_move_analysis(&backend, &EngineOptions::default(), repeats, SEED).unwrap();
    let sa_ok = sa.samples >= FIRST_MOVE_SAMPLES && sa.rank_order_holds();
    let classes: Vec<String> = sa
        .classes
        .iter()
        .map(|c| format!("{:?} {:.4} [{:.4}, {:.4}] n={}", c.class, c.p_win, c.p_win_min, c.p_win_max, c.n_tot))
        .collect();
    report(
        "first-move-rank-order",
        oracle_ok && sa_ok,
        format!(
            "oracle {} ({}); annealer {} over {} samples, {} discarded: {}",
            if oracle_ok { "ok" } else { "wrong" },
            oracle_detail.join(", "),
            if sa_ok { "ok" } else { "wrong" },
            sa.samples,
            sa.discarded,
            classes.join(", ")
        ),
    );
    assert!(oracle_ok, "oracle rank order or symmetry");
    assert!(sa_ok, "{sa}");
}

#[test]
fn match_performance() {
    let params = AnnealParams { seed: SEED, ..AnnealParams::desk() };
    let backend = Backend::Sampler { sampler: SamplerConfig::Sa { params } };
    let options = EngineOptions::match_play();
    let start = Instant::now();
    let first = run_match(MATCH_GAMES, StartPolicy::Engine, &backend, &options, SEED).unwrap();
    let second = run_match(MATCH_GAMES, StartPolicy::Random, &backend, &options, SEED + 1).unwrap();
    let e = first.row(Starter::Engine).unwrap();
    let r = second.row(Starter::Random).unwrap();
    let pass = e.wins >= ENGINE_START_MIN_WINS && r.wins + r.draws >= RANDOM_START_MIN_NON_LOSSES;
    report(
        "match-performance",
        pass,
        format!(
            "engine starts {}/{}/{} (W/L/D), random starts {}/{}/{}; {:.0?}",
            e.wins,
            e.losses,
            e.draws,
            r.wins,
            r.losses,
            r.draws,
            start.elapsed()
        ),
    );
    assert!(pass, "{first}{second}");
}

/// Local fields let single-bit corruptions be scored without re-evaluating the model.
struct Scorer {
    model: ttt_ising::ising::CompiledModel,
    bits: Vec<bool>,
    fields: Vec<f64>,
}

impl Scorer {
    fn new(model: &BinaryQuadraticModel, bits: Vec<bool>) -> Self {
        let model = model.compile();
        let fields = model.local_fields(&bits);
        Scorer { model, bits, fields }
    }

    /// Energy change from flipping every variable in `flips` (distinct).
    fn delta(&self, flips: &[usize]) -> f64 {
        let mut total = 0.0;
        for (k, &v) in flips.iter().enumerate() {
            let mut field = self.fields[v];
            for &u in &flips[..k] {
                if let Some((_, w)) = self.model.neighbors(u).find(|&(n, _)| n == v) {
                    field += if self.bits[u] { -w } else { w };
                }
            }
            total += if self.bits[v] { -field } else { field };
        }
        total
    }
}

fn random_full_path(rng: &mut ChaCha8Rng) -> Vec<Square> {
    let mut path: Vec<Square> = Square::all().collect();
    path.shuffle(rng);
    path
}

/// A full filling whose game follows the minimally-strategic rule.
fn strategic_path(rng: &mut ChaCha8Rng) -> Vec<Square> {
    let mut state = GameState::new();
    while !state.is_terminal() {
        let wins = state.winning_moves().unwrap();
        let pool: Vec<Square> = if wins.is_empty() { state.empty_squares().collect() } else { wins };
        state = state.apply_move(*pool.choose(rng).unwrap()).unwrap();
    }
    let mut path = state.history().to_vec();
    let mut rest: Vec<Square> = Square::all().filter(|s| !path.contains(s)).collect();
    rest.shuffle(rng);
    path.extend(rest);
    path
}

#[test]
fn energy_ordering() {
    let cfg = PenaltyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    // Violations per corruption kind: extra bit, occupied square, ancilla flip.
    let mut violations = [0usize; 3];
    let mut ties = [0usize; 3];
    let mut tried = [0usize; 3];
    for _ in 0..ORDERING_PATHS {
        let path = random_full_path(&mut rng);
        let cut = loop {
            let k = rng.random_range(1..=6);
            if !GameState::replay_until_terminal(&path[..k]).unwrap().is_terminal()
                && GameState::replay_until_terminal(&path[..k]).unwrap().moves_played() == k
            {
                break k;
            }
        };
        let state = GameState::from_history(&path[..cut]).unwrap();
        let bias = *OutcomeBias::ALL.choose(&mut rng).unwrap();
        let enc = build_model(&state, bias, &cfg).unwrap();
        let asg = enc.layout.assignment_from_path(&path).unwrap();
        let scorer = Scorer::new(&enc.model, asg.iter().collect());
        let ancillas: Vec<usize> =
            enc.layout.roles().iter().enumerate().filter(|(_, r)| r.is_ancilla()).map(|(i, _)| i).collect();
        for v in 0..ORDERING_VARIANTS {
            let kind = v % 3;
            let mv = rng.random_range(cut + 1..=9);
            let flips: Vec<usize> = match kind {
                0 => {
                    let s = *Square::all().filter(|&s| s != path[mv - 1]).collect::<Vec<_>>().choose(&mut rng).unwrap();
                    vec![enc.layout.move_lit(mv, s).var().unwrap().index()]
                }
                1 => {
                    let s = path[rng.random_range(0..cut)];
                    vec![
                        enc.layout.move_lit(mv, path[mv - 1]).var().unwrap().index(),
                        enc.layout.move_lit(mv, s).var().unwrap().index(),
                    ]
                }
                _ => match ancillas.choose(&mut rng) {
                    Some(&a) => vec![a],
                    None => continue,
                },
            };
            tried[kind] += 1;
            let d = scorer.delta(&flips);
            if d <= ENERGY_TOLERANCE {
                violations[kind] += 1;
                if d.abs() <= ENERGY_TOLERANCE {
                    ties[kind] += 1;
                }
            }
        }
    }

    let enc = build_model_with(&GameState::new(), WinBias::XWin, &cfg).unwrap();
    let (mut x_max, mut o_min) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..ORDERING_PATHS {
        let path = strategic_path(&mut rng);
        let e = enc.model.energy(&enc.layout.assignment_from_path(&path).unwrap()).unwrap();
        match GameState::replay_until_terminal(&path).unwrap().outcome().winner() {
            Some(Mark::X) => x_max = x_max.max(e),
            Some(Mark::O) => o_min = o_min.min(e),
            _ => {}
        }
    }
    let separated = x_max <= o_min + ENERGY_TOLERANCE;
    let pass = violations == [0, 0, 0] && separated;
    report(
        "energy-ordering",
        pass,
        format!(
            "not higher (ties) per kind extra-bit {}({})/{} occupied {}({})/{} ancilla {}({})/{}; x-win max {x_max} vs o-win min {o_min}",
            violations[0], ties[0], tried[0], violations[1], ties[1], tried[1], violations[2], ties[2], tried[2]
        ),
    );
    assert!(violations[0] == 0 && violations[1] == 0, "move-register corruptions");
    assert!(violations[2] == 0, "ancilla corruptions");
    assert!(separated, "outcome separation");
}

#[test]
fn win_chain_audit() {
    let audit = audit_win_chain(&PenaltyConfig::default()).unwrap();
    let single = audit.single_line_ok();
    let multi: Vec<String> = audit
        .divergences()
        .map(|p| p.lines.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>())
        .collect();
    report(
        "win-chain-audit",
        single && audit.assignments == 1 << 13,
        format!("{} assignments; single-line ok={single}; multi-line divergences {}: {}", audit.assignments, multi.len(), multi.join(" ")),
    );
    assert!(single, "{audit}");
}

/// Independent minimally-strategic enumeration: (mover wins, total) below each move.
fn exact_win_fraction(board: &mut [u8; 9], mover: u8) -> Vec<(usize, u64, u64)> {
    fn line_for(b: &[u8; 9], p: u8) -> bool {
        LINES.iter().any(|l| l.iter().all(|&i| b[i] == p))
    }
    fn walk(b: &mut [u8; 9], p: u8, root: u8) -> (u64, u64) {
        let empty: Vec<usize> = (0..9).filter(|&i| b[i] == 0).collect();
        if empty.is_empty() {
            return (0, 1);
        }
        let winning: Vec<usize> = empty
            .iter()
            .copied()
            .filter(|&i| {
                b[i] = p;
                let w = line_for(b, p);
                b[i] = 0;
                w
            })
            .collect();
        let choices = if winning.is_empty() { empty } else { winning };
        let mut acc = (0, 0);
        for i in choices {
            b[i] = p;
            let (w, t) = if line_for(b, p) { (u64::from(p == root), 1) } else { walk(b, 3 - p, root) };
            b[i] = 0;
            acc = (acc.0 + w, acc.1 + t);
        }
        acc
    }
    let empty: Vec<usize> = (0..9).filter(|&i| board[i] == 0).collect();
    let any_win = empty.iter().any(|&i| {
        board[i] = mover;
        let w = line_for(board, mover);
        board[i] = 0;
        w
    });
    empty
        .into_iter()
        .map(|i| {
            board[i] = mover;
            let wins_now = line_for(board, mover);
            let (w, t) = if wins_now {
                (1, 1)
            } else if any_win {
                (0, 0)
            } else {
                walk(board, 3 - mover, mover)
            };
            board[i] = 0;
            (i, w, t)
        })
        .collect()
}

#[test]
fn selection_score_suite() {
    let mut failures = Vec::new();
    let zero = CandidateStats::from_counts(sq(0), 0, 0, 0, 0.0);
    if zero.p_win() != 0.0 {
        failures.push("zero-total branch".to_string());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for trial in 0..200 {
        let n = rng.random_range(1..=9);
        let rows: Vec<CandidateStats> =
            (0..n).map(|i| CandidateStats::from_counts(sq(i), rng.random_range(0..40), rng.random_range(0..40), rng.random_range(0..40), 0.0)).collect();
        let stats = MoveStats { engine: Mark::X, candidates: rows, smoothing: 0.0, discarded: 0, register_disagreements: 0 };
        let k = rng.random_range(2..50);
        if select_move(&stats, false).unwrap() != select_move(&stats.scaled(k), false).unwrap() {
            failures.push(format!("scale trial {trial}"));
        }
    }

    let mut checked = 0;
    while checked < ARGMAX_STATES {
        let moves = rng.random_range(1..=7);
        let Some(state) = ttt_ising::harness::random_state(&mut rng, moves) else { continue };
        checked += 1;
        let stats = MoveStats::from_oracle(&state, StrategyMode::MinimallyStrategic, 0.0).unwrap();
        let chosen = select_move(&stats, false).unwrap().square;
        let mut board = [0u8; 9];
        for (k, s) in state.history().iter().enumerate() {
            board[s.index()] = if k % 2 == 0 { 1 } else { 2 };
        }
        let mover = if state.to_move() == Mark::X { 1 } else { 2 };
        let exact = exact_win_fraction(&mut board, mover);
        let p = |&(_, w, t): &(usize, u64, u64)| if t == 0 { 0.0 } else { w as f64 / t as f64 };
        let best = exact.iter().map(p).fold(0.0, f64::max);
        let expected = exact.iter().find(|r| p(r) == best).map(|r| r.0).unwrap();
        if chosen.index() != expected {
            failures.push(format!("{} chose {} expected {expected}", state.transcript(), chosen.index()));
        }
    }
    let pass = failures.is_empty();
    report("selection-score", pass, format!("zero-total, 200 scale trials, {checked} oracle argmax states; failures {failures:?}"));
    assert!(pass);
}

#[test]
fn endgame_exactness() {
    let backend = Backend::Sampler { sampler: SamplerConfig::Exact { limit: ttt_ising::samplers::DEFAULT_SPLIT_LIMIT } };
    let options = EngineOptions { fallback: true, ..EngineOptions::default() };
    let mut detail = Vec::new();
    let mut pass = true;
    for played in [7, 8] {
        let r = endgame_audit(&backend, &options, played).unwrap();
        pass &= r.misses.is_empty();
        let shown: Vec<String> = r.misses.iter().take(5).map(|m| format!("{}->{}", m.transcript, m.chosen.index())).collect();
        detail.push(format!("{played} played: {}/{} [{}]", r.agreements, r.states, shown.join(" ")));
    }
    report("endgame-exactness", pass, detail.join("; "));
    assert!(pass);
}

#[test]
fn roles_cover_every_variable() {
    let enc = build_model(&GameState::new(), OutcomeBias::Draw, &PenaltyConfig::default()).unwrap();
    let moves = enc.layout.roles().iter().filter(|r| matches!(r, Role::Move { .. })).count();
    assert_eq!(moves, 81);
    assert_eq!(enc.layout.roles().len(), enc.model.num_variables());
}
