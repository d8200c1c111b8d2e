//! Acceptance suite. Runs without the libtest harness and prints one
//! PASS/FAIL line per criterion; exits non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use puzzlebench::agents::{
    Agent, AgentContext, AgentError, AgentResponse, CannedAgent, OracleAgent, RandomLegalAgent, ReplayAgent,
    SaboteurAgent, TokenUsage,
};
use puzzlebench::hanoi::HanoiConfig;
use puzzlebench::metrics::{aggregate, write_aggregates_csv, write_trials_jsonl};
use puzzlebench::orchestrator::{Experiment, ExperimentConfig, FailureCause, Outcome, Protocol, TrialResult};
use puzzlebench::prompts::TemplateSet;
use puzzlebench::puzzle::{Move, Puzzle};
use puzzlebench::river::RiverConfig;
use puzzlebench::solvers::{hanoi_optimal, river_bfs, river_constructive, river_solvable};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn experiment(cfg: ExperimentConfig, a: Arc<dyn Agent>, b: Option<Arc<dyn Agent>>) -> Result<Vec<TrialResult>, String> {
    Experiment::new(cfg, a, b, TemplateSet::builtin()).and_then(|e| e.run(jobs())).map_err(|e| e.to_string())
}

fn hanoi_optimality() -> Check {
    for n in 1..=14 {
        let cfg = HanoiConfig::new(n).map_err(|e| e.to_string())?;
        let solution = hanoi_optimal(&cfg);
        ensure!(solution.length == (1 << n) - 1, "N={n}: {} moves", solution.length);
        let mut state = cfg.initial_state();
        for (i, mv) in solution.moves.iter().enumerate() {
            let Move::Hanoi(mv) = mv else { return Err(format!("N={n}: non-Hanoi move")) };
            state = state.apply(mv).map_err(|e| format!("N={n} move {}: {e}", i + 1))?;
        }
        ensure!(cfg.is_goal(&state), "N={n}: final state is not the goal");
    }
    Ok("N = 1..14 all emit 2^N - 1 legal moves ending at the goal".into())
}

fn solvability_equivalence() -> Check {
    let mut checked = 0;
    for n in 1..=6 {
        for k in 1..=4 {
            let cfg = RiverConfig::new(n, k).map_err(|e| e.to_string())?;
            let reachable = river_bfs(&cfg).map_err(|e| e.to_string())?.solution().is_some();
            let verdict = river_solvable(n, k).solvable;
            ensure!(reachable == verdict, "N={n} k={k}: search says {reachable}, closed form says {verdict}");
            checked += 1;
        }
    }
    ensure!(river_solvable(5, 3).solvable, "(5,3) should be solvable");
    ensure!(!river_solvable(6, 3).solvable, "(6,3) should be unsolvable");
    Ok(format!("{checked} (N,k) pairs agree; (5,3) solvable, (6,3) unsolvable"))
}

fn large_certificate() -> Check {
    let cfg = RiverConfig::new(100, 4).map_err(|e| e.to_string())?;
    let solution = river_constructive(&cfg).map_err(|e| e.to_string())?;
    ensure!(solution.length == 197, "{} moves", solution.length);
    let puzzle = Puzzle::River(cfg);
    let end = puzzle.replay(&solution.moves).map_err(|(i, e)| format!("move {}: {e}", i + 1))?;
    ensure!(puzzle.is_goal(&end), "replay does not reach the goal");
    ensure!(solution.length <= 200, "exceeds 200 moves");
    Ok("197 moves, replay reaches the goal".into())
}

fn end_to_end_soundness() -> Check {
    let oracle: Arc<dyn Agent> = Arc::new(OracleAgent::new());
    let mut trials = 0;
    for n in 3..=10 {
        let optimum = (1usize << n) - 1;
        for p in [5, 10, 20] {
            let expected = optimum.div_ceil(p);
            for protocol in [Protocol::Stepwise { p }, Protocol::Agentic { p }] {
                let cfg = ExperimentConfig::new(Puzzle::hanoi(n).unwrap(), protocol, 10);
                let b = matches!(protocol, Protocol::Agentic { .. })
                    .then(|| Arc::new(OracleAgent::new()) as Arc<dyn Agent>);
                for t in experiment(cfg, Arc::clone(&oracle), b)? {
                    ensure!(t.outcome == Outcome::Success, "{}: {:?}", t.trial_id, t.outcome);
                    ensure!(t.requests == expected, "{}: {} requests, expected {expected}", t.trial_id, t.requests);
                    trials += 1;
                }
            }
        }
    }
    Ok(format!("{trials} oracle trials (stepwise and agentic) succeed with ceil((2^N-1)/p) requests"))
}

fn expect_failure(trials: &[TrialResult], cause: FailureCause, turn: Option<usize>) -> Result<(), String> {
    ensure!(!trials.is_empty(), "no trials");
    for t in trials {
        ensure!(t.outcome == Outcome::Failure(cause), "{}: {:?}, expected {cause:?}", t.trial_id, t.outcome);
        if let Some(turn) = turn {
            let got = t.failure.as_ref().map(|f| f.turn);
            ensure!(got == Some(turn), "{}: failed at turn {got:?}, expected {turn}", t.trial_id);
        }
    }
    Ok(())
}

fn referee_correctness() -> Check {
    for (puzzle, p) in
        [(Puzzle::hanoi(6).unwrap(), 5), (Puzzle::river(3, 2).unwrap(), 2), (Puzzle::river(20, 4).unwrap(), 5)]
    {
        for fail_at in [1, 3] {
            let cfg = ExperimentConfig::new(puzzle, Protocol::Stepwise { p }, 3);
            expect_failure(
                &experiment(cfg, Arc::new(SaboteurAgent::new(fail_at)), None)?,
                FailureCause::IllegalMove,
                Some(fail_at),
            )?;
        }
        let cfg = ExperimentConfig::new(puzzle, Protocol::Agentic { p }, 3);
        let sab = experiment(cfg, Arc::new(OracleAgent::new()), Some(Arc::new(SaboteurAgent::new(4))))?;
        expect_failure(&sab, FailureCause::IllegalMove, Some(4))?;
        ensure!(sab.iter().all(|t| t.failure.as_ref().is_some_and(|f| f.agent == "Agent B")), "blame not on Agent B");

        for protocol in [Protocol::Single, Protocol::Stepwise { p }, Protocol::Agentic { p }] {
            let cfg = ExperimentConfig::new(puzzle, protocol, 2);
            expect_failure(
                &experiment(cfg, Arc::new(CannedAgent::prose()), None)?,
                FailureCause::FormatError,
                Some(1),
            )?;
        }
    }

    let transcript = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/oscillating_hanoi3.jsonl");
    let replay = ReplayAgent::from_file(&transcript).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::new(Puzzle::hanoi(3).unwrap(), Protocol::Agentic { p: 1 }, 1);
    expect_failure(&experiment(cfg, Arc::new(replay), None)?, FailureCause::LoopDetected, Some(8))?;
    Ok("saboteurs -> IllegalMove at the scripted turn, prose -> FormatError, oscillating replay -> LoopDetected".into())
}

fn write_outputs(dir: &Path, jobs: usize) -> Result<(), String> {
    let grid: Vec<(ExperimentConfig, Arc<dyn Agent>)> = vec![
        (ExperimentConfig::new(Puzzle::hanoi(4).unwrap(), Protocol::Stepwise { p: 3 }, 6), Arc::new(RandomLegalAgent)),
        (
            ExperimentConfig::new(Puzzle::river(3, 2).unwrap(), Protocol::Agentic { p: 2 }, 6),
            Arc::new(RandomLegalAgent),
        ),
        (
            ExperimentConfig::new(Puzzle::hanoi(5).unwrap(), Protocol::Stepwise { p: 4 }, 4),
            Arc::new(SaboteurAgent::new(2)),
        ),
        (ExperimentConfig::new(Puzzle::river(5, 3).unwrap(), Protocol::Single, 3), Arc::new(OracleAgent::new())),
    ];
    let mut trials = Vec::new();
    for (mut cfg, agent) in grid {
        cfg.seed = 11;
        let exp = Experiment::new(cfg, agent, None, TemplateSet::builtin()).map_err(|e| e.to_string())?;
        trials.extend(exp.run(jobs).map_err(|e| e.to_string())?);
    }
    let stats = puzzlebench::metrics::aggregate_all(&trials, Default::default()).map_err(|e| e.to_string())?;
    write_trials_jsonl(&trials, &dir.join("trials.jsonl")).map_err(|e| e.to_string())?;
    write_aggregates_csv(&stats, &dir.join("aggregates.csv")).map_err(|e| e.to_string())
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        std::fs::create_dir_all(d).map_err(|e| e.to_string())?;
    }
    write_outputs(&a, 1)?;
    write_outputs(&b, jobs().max(2))?;
    for file in ["trials.jsonl", "aggregates.csv"] {
        let (x, y) = (std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap());
        ensure!(x == y, "{file} differs between runs");
    }
    Ok("trials.jsonl and aggregates.csv byte-identical across runs (1 vs many threads)".into())
}

/// Oracle moves with a fixed bill per request.
struct FlatRate(OracleAgent);

impl Agent for FlatRate {
    fn name(&self) -> String {
        "flat".into()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let mut response = self.0.respond(ctx)?;
        response.usage = TokenUsage::new(900, 100);
        Ok(response)
    }
}

fn metrics_fidelity() -> Check {
    let agent: Arc<dyn Agent> = Arc::new(FlatRate(OracleAgent::new()));
    let mut seen = Vec::new();
    for budget in [1, 3, 7, 13] {
        let mut cfg = ExperimentConfig::new(Puzzle::hanoi(6).unwrap(), Protocol::Stepwise { p: 5 }, 3);
        cfg.max_requests = Some(budget);
        let trials = experiment(cfg, Arc::clone(&agent), None)?;
        let stats = aggregate(&trials, &trials[0].key).map_err(|e| e.to_string())?;
        seen.push((budget, stats.mean_tokens_per_request, stats.mean_total_tokens));
    }
    ensure!(seen.iter().all(|s| s.1 == 1000.0), "tokens per request drifted: {seen:?}");
    ensure!(seen.windows(2).all(|w| w[0].2 < w[1].2), "total tokens did not grow with depth: {seen:?}");
    Ok(format!(
        "per-request 1000 at every truncation; totals {}",
        seen.iter().map(|s| s.2.to_string()).collect::<Vec<_>>().join(", ")
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("hanoi-oracle-optimality", hanoi_optimality, Some(Duration::from_secs(1))),
        ("solvability-equivalence", solvability_equivalence, Some(Duration::from_secs(10))),
        ("large-instance-certificate", large_certificate, Some(Duration::from_secs(1))),
        ("end-to-end-soundness", end_to_end_soundness, Some(Duration::from_secs(30))),
        ("referee-correctness", referee_correctness, None),
        ("determinism", determinism, None),
        ("metrics-fidelity", metrics_fidelity, None),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took {elapsed:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS {name} ({elapsed:.2?}): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({elapsed:.2?}): {why}");
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
