//! Command-line front end.
//!
//! Data goes to stdout and progress to stderr. Exit codes: 0 ok, 2 usage or
//! I/O error, 3 unsolvable configuration, 4 valid but incomplete solution,
//! 5 invalid solution.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::agents::{read_transcript, AgentSpec, EndpointConfig, ReplayAgent, RequestGate};
use crate::config::{parse_int_list, AgentField, ExperimentFile, GridEntry, IntList, DEFAULT_TRIALS};
use crate::error::ConfigError;
use crate::hanoi::{HanoiConfig, HanoiMove};
use crate::metrics::{
    aggregate_all, format_table, read_trials_jsonl, write_aggregates, write_aggregates_csv, write_trials_jsonl,
    PerRequestMode,
};
use crate::orchestrator::{Experiment, ExperimentConfig, ExperimentError, Protocol, SPEAKER_A, SPEAKER_B};
use crate::prompts::{TemplateIds, TemplateSet};
use crate::puzzle::{Move, Puzzle, PuzzleKind};
use crate::river::{RiverConfig, RiverMove, SafetyScope};
use crate::solvers::{hanoi_optimal, reference_solution, river_bfs, river_constructive, river_solvable, BfsOutcome};

/// stdout writes that tolerate a closed pipe.
macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout().lock(), $($t)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_UNSOLVABLE: i32 = 3;
pub const EXIT_INCOMPLETE: i32 = 4;
pub const EXIT_INVALID: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "puzzlebench", version, about = "Exact puzzle engines and an evaluation harness for model solvers")]
pub struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Print a reference solution as JSON.
    Solve(SolveArgs),
    /// Referee a move list from a JSON file.
    Check(CheckArgs),
    /// Decide River solvability for a grid of N and k.
    Solvable(SolvableArgs),
    /// Run experiments and write trials.jsonl and aggregates.csv.
    Run(RunArgs),
    /// Aggregate a trials file.
    Report(ReportArgs),
    /// Re-run a recorded transcript through the referee.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PuzzleArg {
    Hanoi,
    River,
}

impl From<PuzzleArg> for PuzzleKind {
    fn from(p: PuzzleArg) -> Self {
        match p {
            PuzzleArg::Hanoi => PuzzleKind::Hanoi,
            PuzzleArg::River => PuzzleKind::River,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Recursive,
    Bfs,
    Constructive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProtocolArg {
    Single,
    Stepwise,
    Agentic,
}

impl ProtocolArg {
    fn name(self) -> &'static str {
        match self {
            ProtocolArg::Single => "single",
            ProtocolArg::Stepwise => "stepwise",
            ProtocolArg::Agentic => "agentic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    BanksAndBoat,
    BanksOnly,
}

impl From<ScopeArg> for SafetyScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::BanksAndBoat => SafetyScope::BanksAndBoat,
            ScopeArg::BanksOnly => SafetyScope::BanksOnly,
        }
    }
}

#[derive(Debug, Args)]
pub struct PuzzleParams {
    /// Disks (Hanoi) or couples (River).
    #[arg(long)]
    pub n: usize,
    /// Boat capacity (River only).
    #[arg(long)]
    pub k: Option<usize>,
    /// Where the River safety rule applies.
    #[arg(long, value_enum, default_value = "banks-and-boat")]
    pub scope: ScopeArg,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(value_enum)]
    pub puzzle: PuzzleArg,
    #[command(flatten)]
    pub params: PuzzleParams,
    #[arg(long, value_enum, default_value = "auto")]
    pub solver: SolverArg,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    #[arg(value_enum)]
    pub puzzle: PuzzleArg,
    #[command(flatten)]
    pub params: PuzzleParams,
    /// JSON move list, e.g. [[1, 0, 2], ...] or [["A_1", "a_1"], ...].
    #[arg(long)]
    pub moves: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolvableArgs {
    /// Couples: a number, a range like 2..6, or a list like 2,10,100.
    #[arg(long)]
    pub n: String,
    /// Boat capacities, same forms as --n.
    #[arg(long)]
    pub k: String,
    /// Cross-check each verdict with exhaustive search where feasible.
    #[arg(long)]
    pub verify: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Experiment file (TOML or JSON). Grid flags then act as overrides
    /// only where noted.
    #[arg(long, conflicts_with_all = ["puzzle", "n", "k", "p", "protocol"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub puzzle: Option<PuzzleArg>,
    /// Sizes: a number, a range like 3..10, or a list like 2,10,100.
    #[arg(long)]
    pub n: Option<String>,
    /// Boat capacities (River), same forms as --n.
    #[arg(long)]
    pub k: Option<String>,
    /// Moves per turn for stepwise and agentic runs, same forms as --n.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    /// oracle, random, prose, saboteur:<turn>, canned:<text>, replay:<file>
    /// or remote[:<endpoint file>]. Overrides the config file.
    #[arg(long)]
    pub agent: Option<String>,
    /// Second dialogue agent. Overrides the config file.
    #[arg(long)]
    pub agent_b: Option<String>,
    /// Overrides the config file.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Base seed; trial i uses seed + i. Overrides the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Endpoint file for remote agents.
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// Model name for remote agents, overriding the endpoint file.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub allow_unsolvable: bool,
    #[arg(long)]
    pub max_requests: Option<usize>,
    #[arg(long)]
    pub loop_threshold: Option<usize>,
    /// Earlier exchanges shown to dialogue agents.
    #[arg(long)]
    pub transcript_window: Option<usize>,
    /// Directory of template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Pooled tokens-per-request instead of the per-trial mean.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// trials.jsonl
    pub trials: PathBuf,
    /// Write the CSV here and the table to stdout; otherwise the CSV goes to
    /// stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Transcript JSONL.
    pub transcript: PathBuf,
    /// Taken from the transcript when omitted, like --n, --k and --p.
    #[arg(long, value_enum)]
    pub puzzle: Option<PuzzleArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    /// Inferred from the speakers and block size when omitted.
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    #[arg(long)]
    pub loop_threshold: Option<usize>,
    #[arg(long)]
    pub max_requests: Option<usize>,
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Unsolvable(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Unsolvable(_) => EXIT_UNSOLVABLE,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Unsolvable { .. } => Failure::Unsolvable(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(c) => c.into(),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

/// Parses arguments, runs the command and returns the exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match execute(cli.command) {
        Ok(code) => code,
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Unsolvable(msg)) = &f;
            eprintln!("error: {msg}");
            f.code()
        }
    }
}

pub fn execute(command: Command) -> Result<i32, Failure> {
    match command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Check(a) => cmd_check(&a),
        Command::Solvable(a) => cmd_solvable(&a),
        Command::Run(a) => cmd_run(&a),
        Command::Report(a) => cmd_report(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn build_puzzle(kind: PuzzleArg, p: &PuzzleParams) -> Result<Puzzle, Failure> {
    match (kind, p.k) {
        (PuzzleArg::Hanoi, None) => Ok(Puzzle::Hanoi(HanoiConfig::new(p.n)?)),
        (PuzzleArg::Hanoi, Some(_)) => Err(usage("--k applies to river only")),
        (PuzzleArg::River, Some(k)) => Ok(Puzzle::River(RiverConfig::with_scope(p.n, k, p.scope.into())?)),
        (PuzzleArg::River, None) => Err(usage("river needs --k")),
    }
}

fn cmd_solve(a: &SolveArgs) -> Result<i32, Failure> {
    let puzzle = build_puzzle(a.puzzle, &a.params)?;
    let solution = match (&puzzle, a.solver) {
        (Puzzle::Hanoi(cfg), SolverArg::Auto | SolverArg::Recursive) => hanoi_optimal(cfg),
        (Puzzle::Hanoi(_), s) => return Err(usage(format!("solver {s:?} does not apply to hanoi"))),
        (Puzzle::River(_), SolverArg::Recursive) => return Err(usage("solver Recursive does not apply to river")),
        (Puzzle::River(cfg), solver) => {
            let (n, k) = (cfg.n_pairs(), cfg.boat_capacity());
            let verdict = river_solvable(n, k);
            if !verdict.solvable {
                return Err(Failure::Unsolvable(verdict.explain(n, k)));
            }
            match solver {
                SolverArg::Bfs => match river_bfs(cfg).map_err(usage)? {
                    BfsOutcome::Solved(s) => s,
                    BfsOutcome::Unsolvable { explored } => {
                        return Err(Failure::Unsolvable(format!("search exhausted {explored} states")))
                    }
                },
                SolverArg::Constructive => river_constructive(cfg).map_err(usage)?,
                _ => reference_solution(&puzzle).ok_or_else(|| usage("no solution found"))?,
            }
        }
    };
    let out = json!({"puzzle": puzzle, "length": solution.length, "moves": solution.moves});
    outln!("{out}");
    Ok(EXIT_OK)
}

fn read_moves(kind: PuzzleKind, path: &Path) -> Result<Vec<Move>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| usage(format!("{}: not a {kind} move list: {e}", path.display()));
    Ok(match kind {
        PuzzleKind::Hanoi => {
            serde_json::from_str::<Vec<HanoiMove>>(&text).map_err(bad)?.into_iter().map(Move::Hanoi).collect()
        }
        PuzzleKind::River => {
            serde_json::from_str::<Vec<RiverMove>>(&text).map_err(bad)?.into_iter().map(Move::River).collect()
        }
    })
}

fn cmd_check(a: &CheckArgs) -> Result<i32, Failure> {
    let puzzle = build_puzzle(a.puzzle, &a.params)?;
    let moves = read_moves(puzzle.kind(), &a.moves)?;
    Ok(match puzzle.replay(&moves) {
        Ok(state) if puzzle.is_goal(&state) => {
            outln!("VALID, reaches goal");
            EXIT_OK
        }
        Ok(_) => {
            outln!("VALID, does not reach goal");
            EXIT_INCOMPLETE
        }
        Err((i, e)) => {
            outln!("INVALID at move {}: {e}", i + 1);
            EXIT_INVALID
        }
    })
}

fn cmd_solvable(a: &SolvableArgs) -> Result<i32, Failure> {
    let ns = parse_int_list(&a.n).map_err(usage)?;
    let ks = parse_int_list(&a.k).map_err(usage)?;
    for &n in &ns {
        for &k in &ks {
            let verdict = river_solvable(n, k);
            let mut row = json!({
                "N": n,
                "k": k,
                "solvable": verdict.solvable,
                "explanation": verdict.explain(n, k),
            });
            if a.verify {
                let cfg = RiverConfig::new(n, k)?;
                row["bfs"] = match river_bfs(&cfg) {
                    Ok(outcome) => json!(outcome.solution().is_some()),
                    Err(_) => serde_json::Value::Null,
                };
            }
            outln!("{row}");
        }
    }
    Ok(EXIT_OK)
}

fn parse_agent(text: &str) -> Result<AgentSpec, Failure> {
    text.parse().map_err(usage)
}

/// Applies the agent-related flags to a spec.
fn adjust_agent(spec: &mut AgentSpec, a: &RunArgs) -> Result<(), Failure> {
    if let AgentSpec::Remote { endpoint, model } = spec {
        if let Some(e) = &a.endpoint {
            if endpoint.as_os_str().is_empty() {
                *endpoint = e.clone();
            }
        }
        if endpoint.as_os_str().is_empty() {
            return Err(usage("remote agents need an endpoint file (remote:<file> or --endpoint)"));
        }
        if let Some(m) = &a.model {
            *model = Some(m.clone());
        }
    }
    Ok(())
}

fn grid_from_flags(a: &RunArgs) -> Result<GridEntry, Failure> {
    let puzzle = a.puzzle.ok_or_else(|| usage("run needs --config or --puzzle"))?;
    let n = a.n.as_deref().ok_or_else(|| usage("run needs --n"))?;
    let protocol = a.protocol.ok_or_else(|| usage("run needs --protocol"))?;
    let list = |s: &Option<String>| s.as_deref().map(|s| parse_int_list(s).map(IntList).map_err(usage)).transpose();
    Ok(GridEntry {
        puzzle: puzzle.into(),
        n: IntList(parse_int_list(n).map_err(usage)?),
        k: list(&a.k)?,
        p: list(&a.p)?,
        protocol: protocol.name().into(),
        trials: DEFAULT_TRIALS,
        seed: 0,
        agent: AgentField(AgentSpec::Oracle),
        agent_b: None,
        max_requests: None,
        loop_threshold: crate::orchestrator::DEFAULT_LOOP_THRESHOLD,
        allow_unsolvable: false,
        transcript_window: None,
        safety_scope: SafetyScope::default(),
        templates: TemplateIds::default(),
    })
}

fn apply_overrides(entry: &mut GridEntry, a: &RunArgs) -> Result<(), Failure> {
    if let Some(agent) = &a.agent {
        entry.agent = AgentField(parse_agent(agent)?);
    } else if a.endpoint.is_some() && a.config.is_none() {
        entry.agent = AgentField(AgentSpec::Remote { endpoint: PathBuf::new(), model: None });
    }
    if let Some(agent) = &a.agent_b {
        entry.agent_b = Some(AgentField(parse_agent(agent)?));
    }
    adjust_agent(&mut entry.agent.0, a)?;
    if let Some(b) = &mut entry.agent_b {
        adjust_agent(&mut b.0, a)?;
    }
    if let Some(t) = a.trials {
        entry.trials = t;
    }
    if let Some(s) = a.seed {
        entry.seed = s;
    }
    if let Some(m) = a.max_requests {
        entry.max_requests = Some(m);
    }
    if let Some(l) = a.loop_threshold {
        entry.loop_threshold = l;
    }
    if let Some(w) = a.transcript_window {
        entry.transcript_window = Some(w);
    }
    entry.allow_unsolvable |= a.allow_unsolvable;
    Ok(())
}

/// Concurrency cap shared by all remote agents in the run.
fn request_gate(configs: &[ExperimentConfig], jobs: usize) -> Result<Arc<RequestGate>, Failure> {
    let mut slots = jobs.max(1);
    for cfg in configs {
        for spec in std::iter::once(&cfg.agent).chain(&cfg.agent_b) {
            if let AgentSpec::Remote { endpoint, .. } = spec {
                let ep = EndpointConfig::load(endpoint).map_err(usage)?;
                slots = slots.min(ep.max_concurrent.max(1));
            }
        }
    }
    Ok(RequestGate::new(slots))
}

fn cmd_run(a: &RunArgs) -> Result<i32, Failure> {
    let (mut entries, templates_dir) = match &a.config {
        Some(path) => {
            let file = ExperimentFile::load(path)?;
            (file.experiment, file.templates_dir)
        }
        None => (vec![grid_from_flags(a)?], None),
    };
    let mut configs = Vec::new();
    for entry in &mut entries {
        apply_overrides(entry, a)?;
        configs.extend(entry.expand()?);
    }
    let templates = match a.templates.as_ref().or(templates_dir.as_ref()) {
        Some(dir) => TemplateSet::from_dir(dir).map_err(usage)?,
        None => TemplateSet::builtin(),
    };
    let gate = request_gate(&configs, a.jobs)?;
    let experiments = configs
        .into_iter()
        .map(|cfg| Experiment::from_config(cfg, templates.clone(), &gate))
        .collect::<Result<Vec<_>, _>>()?;

    let mut trials = Vec::new();
    let total = experiments.len();
    for (i, exp) in experiments.iter().enumerate() {
        let results = exp.run(a.jobs)?;
        let ok = results.iter().filter(|t| t.outcome.is_success()).count();
        eprintln!("[{}/{total}] {}: {ok}/{} succeeded", i + 1, exp.key(), results.len());
        trials.extend(results);
    }

    fs::create_dir_all(&a.out).map_err(|e| usage(format!("{}: {e}", a.out.display())))?;
    write_trials_jsonl(&trials, &a.out.join("trials.jsonl")).map_err(usage)?;
    let mode = if a.pooled { PerRequestMode::Pooled } else { PerRequestMode::PerTrial };
    let stats = aggregate_all(&trials, mode).map_err(usage)?;
    write_aggregates_csv(&stats, &a.out.join("aggregates.csv")).map_err(usage)?;
    out!("{}", format_table(&stats));
    eprintln!("wrote {} and {}", a.out.join("trials.jsonl").display(), a.out.join("aggregates.csv").display());
    Ok(EXIT_OK)
}

fn cmd_report(a: &ReportArgs) -> Result<i32, Failure> {
    let trials = read_trials_jsonl(&a.trials).map_err(usage)?;
    let mode = if a.pooled { PerRequestMode::Pooled } else { PerRequestMode::PerTrial };
    let stats = aggregate_all(&trials, mode).map_err(|e| usage(format!("{}: {e}", a.trials.display())))?;
    match &a.out {
        Some(path) => {
            write_aggregates_csv(&stats, path).map_err(usage)?;
            out!("{}", format_table(&stats));
        }
        None => {
            write_aggregates(std::io::stdout().lock(), &stats).map_err(usage)?;
            eprint!("{}", format_table(&stats));
        }
    }
    Ok(EXIT_OK)
}

fn cmd_replay(a: &ReplayArgs) -> Result<i32, Failure> {
    let records = read_transcript(&a.transcript).map_err(|e| usage(format!("{}: {e}", a.transcript.display())))?;
    let first = records.first().ok_or_else(|| usage(format!("{}: empty transcript", a.transcript.display())))?;
    let recorded: Option<Puzzle> = serde_json::from_value(first.request["puzzle"].clone()).ok();
    let puzzle = match (a.puzzle, a.n) {
        (Some(kind), Some(n)) => build_puzzle(kind, &PuzzleParams { n, k: a.k, scope: ScopeArg::BanksAndBoat })?,
        (None, None) => recorded.ok_or_else(|| usage("transcript does not name its puzzle; pass --puzzle and --n"))?,
        _ => return Err(usage("--puzzle and --n go together")),
    };
    let p = a.p.or_else(|| first.request["moves_requested"].as_u64().map(|p| p as usize));
    let dialogue = records.iter().any(|r| {
        let s = r.request["speaker"].as_str();
        s == Some(SPEAKER_A) || s == Some(SPEAKER_B)
    });
    let protocol = match a.protocol {
        Some(proto) => Protocol::from_parts(proto.name(), p)?,
        None if dialogue => Protocol::from_parts("agentic", p)?,
        None if p.is_some() => Protocol::from_parts("stepwise", p)?,
        None => Protocol::Single,
    };
    let mut config = ExperimentConfig::new(puzzle, protocol, 1);
    config.allow_unsolvable = true;
    config.max_requests = a.max_requests;
    if let Some(l) = a.loop_threshold {
        config.loop_threshold = l;
    }
    let agent = Arc::new(ReplayAgent::new(records));
    let result = Experiment::new(config, agent, None, TemplateSet::builtin())?.run_trial(0);
    outln!("{}", serde_json::to_string(&result).map_err(usage)?);
    let detail = result.failure.as_ref().map(|f| format!(" at turn {} ({}): {}", f.turn, f.agent, f.message));
    eprintln!("outcome: {:?}{}", result.outcome, detail.unwrap_or_default());
    Ok(EXIT_OK)
}
