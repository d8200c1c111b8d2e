//! Trial runner for the three protocols.
//!
//! A trial is a strictly sequential loop of substages. Each substage renders
//! a prompt, asks an agent, parses the reply and applies the proposed moves
//! to the ground-truth state, failing fast on the first bad move. Every
//! outcome, including agent errors, is recorded in the [`TrialResult`]; only
//! configuration problems surface as `Err`.
//!
//! Loop detection counts how often each state recurs at substage
//! boundaries (the state after each turn, plus the initial state).

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{Agent, AgentContext, AgentError, AgentSpec, Exchange, RequestGate, TaskView, TokenUsage};
use crate::error::ConfigError;
use crate::parser::extract_moves;
use crate::prompts::{puzzle_bindings, Bindings, PromptError, PromptRole, TemplateIds, TemplateSet};
use crate::puzzle::{format_moves, Move, Puzzle, PuzzleKind, PuzzleState};
use crate::solvers::{reference_solution, river_solvable};

pub const DEFAULT_LOOP_THRESHOLD: usize = 3;
pub const SPEAKER_SOLO: &str = "solver";
pub const SPEAKER_A: &str = "Agent A";
pub const SPEAKER_B: &str = "Agent B";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Protocol {
    Single,
    Stepwise { p: usize },
    Agentic { p: usize },
}

impl Protocol {
    pub fn p(self) -> Option<usize> {
        match self {
            Protocol::Single => None,
            Protocol::Stepwise { p } | Protocol::Agentic { p } => Some(p),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Single => "single",
            Protocol::Stepwise { .. } => "stepwise",
            Protocol::Agentic { .. } => "agentic",
        }
    }

    /// Builds a protocol from its name and block size.
    pub fn from_parts(name: &str, p: Option<usize>) -> Result<Self, ConfigError> {
        let need_p = || p.ok_or_else(|| ConfigError::Invalid(format!("protocol {name} needs p")));
        match name {
            "single" => Ok(Protocol::Single),
            "stepwise" => Ok(Protocol::Stepwise { p: need_p()? }),
            "agentic" => Ok(Protocol::Agentic { p: need_p()? }),
            other => {
                Err(ConfigError::Invalid(format!("unknown protocol {other:?}; expected single, stepwise or agentic")))
            }
        }
    }
}

fn default_loop_threshold() -> usize {
    DEFAULT_LOOP_THRESHOLD
}

fn default_agent() -> AgentSpec {
    AgentSpec::Oracle
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub puzzle: Puzzle,
    pub protocol: Protocol,
    pub trials: usize,
    /// Request budget per trial. Defaults to three times the number of
    /// blocks in a minimal solution; single-shot trials always get one.
    #[serde(default)]
    pub max_requests: Option<usize>,
    #[serde(default = "default_loop_threshold")]
    pub loop_threshold: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_agent")]
    pub agent: AgentSpec,
    /// Second dialogue agent; the first agent's spec when unset.
    #[serde(default)]
    pub agent_b: Option<AgentSpec>,
    #[serde(default)]
    pub templates: TemplateIds,
    #[serde(default)]
    pub allow_unsolvable: bool,
    /// Earlier exchanges shown to dialogue agents; all of them when unset.
    #[serde(default)]
    pub transcript_window: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(puzzle: Puzzle, protocol: Protocol, trials: usize) -> Self {
        ExperimentConfig {
            puzzle,
            protocol,
            trials,
            max_requests: None,
            loop_threshold: DEFAULT_LOOP_THRESHOLD,
            seed: 0,
            agent: AgentSpec::Oracle,
            agent_b: None,
            templates: TemplateIds::default(),
            allow_unsolvable: false,
            transcript_window: None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.trials == 0 {
            return Err(ConfigError::Invalid("trials must be at least 1".into()));
        }
        if self.protocol.p() == Some(0) {
            return Err(ConfigError::Invalid("p must be at least 1".into()));
        }
        match (self.protocol, self.max_requests) {
            (_, Some(0)) => return Err(ConfigError::Invalid("max_requests must be at least 1".into())),
            (Protocol::Single, Some(m)) if m != 1 => {
                return Err(ConfigError::Invalid("single-shot trials make exactly one request".into()))
            }
            _ => {}
        }
        if self.agent_b.is_some() && !matches!(self.protocol, Protocol::Agentic { .. }) {
            return Err(ConfigError::Invalid("agent_b only applies to the agentic protocol".into()));
        }
        if let Puzzle::River(cfg) = &self.puzzle {
            let (n, k) = (cfg.n_pairs(), cfg.boat_capacity());
            let verdict = river_solvable(n, k);
            if !verdict.solvable && !self.allow_unsolvable {
                return Err(ConfigError::Unsolvable { n, k, reason: verdict.explain(n, k) });
            }
        }
        Ok(())
    }

    /// Request budget per trial.
    pub fn request_budget(&self) -> usize {
        let Some(p) = self.protocol.p() else { return 1 };
        self.max_requests.unwrap_or_else(|| {
            let min_len = reference_solution(&self.puzzle).map_or(4 * self.puzzle.n(), |s| s.length);
            3 * min_len.div_ceil(p).max(1)
        })
    }
}

/// Identifies one cell of an experiment grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConfigKey {
    pub puzzle: PuzzleKind,
    pub n: usize,
    pub k: Option<usize>,
    pub p: Option<usize>,
    pub protocol: String,
    pub agent: String,
}

impl fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/N={}", self.puzzle, self.n)?;
        if let Some(k) = self.k {
            write!(f, "/k={k}")?;
        }
        write!(f, "/{}", self.protocol)?;
        if let Some(p) = self.p {
            write!(f, "/p={p}")?;
        }
        write!(f, "/{}", self.agent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FailureCause {
    IllegalMove,
    FormatError,
    RequestBudgetExhausted,
    LoopDetected,
    TransportFailure,
}

impl FailureCause {
    pub const ALL: [FailureCause; 5] = [
        FailureCause::IllegalMove,
        FailureCause::FormatError,
        FailureCause::RequestBudgetExhausted,
        FailureCause::LoopDetected,
        FailureCause::TransportFailure,
    ];
}

impl fmt::Display for FailureCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Success,
    Failure(FailureCause),
}

impl Outcome {
    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }

    pub fn cause(self) -> Option<FailureCause> {
        match self {
            Outcome::Success => None,
            Outcome::Failure(c) => Some(c),
        }
    }
}

/// Where and why a trial failed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDetail {
    /// 1-based turn of the failing substage; for budget exhaustion, the turn
    /// that could not be requested.
    pub turn: usize,
    pub agent: String,
    /// 1-based position of the offending move in the whole trial.
    pub move_number: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubstageRecord {
    pub turn: usize,
    pub agent: String,
    pub prompt: String,
    pub response: String,
    pub parsed_moves: Vec<Move>,
    pub applied: usize,
    pub state_after: PuzzleState,
    pub usage: TokenUsage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial_id: String,
    pub trial_index: usize,
    pub seed: u64,
    pub key: ConfigKey,
    pub puzzle: Puzzle,
    pub outcome: Outcome,
    pub failure: Option<FailureDetail>,
    pub substages: Vec<SubstageRecord>,
    pub moves_executed: usize,
    pub usage: TokenUsage,
    pub requests: usize,
    pub final_state: PuzzleState,
}

impl TrialResult {
    /// Every move the referee accepted, in order.
    pub fn applied_moves(&self) -> impl Iterator<Item = &Move> {
        self.substages.iter().flat_map(|s| &s.parsed_moves[..s.applied])
    }
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

/// A validated configuration bound to concrete agents and templates.
pub struct Experiment {
    config: ExperimentConfig,
    agent_a: Arc<dyn Agent>,
    agent_b: Arc<dyn Agent>,
    templates: Arc<TemplateSet>,
    key: ConfigKey,
}

impl Experiment {
    /// Binds explicit agents. `agent_b` defaults to `agent_a`.
    pub fn new(
        config: ExperimentConfig,
        agent_a: Arc<dyn Agent>,
        agent_b: Option<Arc<dyn Agent>>,
        templates: TemplateSet,
    ) -> Result<Self, ExperimentError> {
        config.validate()?;
        let agent_b = agent_b.unwrap_or_else(|| Arc::clone(&agent_a));
        let (name_a, name_b) = (agent_a.name(), agent_b.name());
        let agent = if name_a == name_b { name_a } else { format!("{name_a}+{name_b}") };
        let puzzle = &config.puzzle;
        let key = ConfigKey {
            puzzle: puzzle.kind(),
            n: puzzle.n(),
            k: puzzle.boat_capacity(),
            p: config.protocol.p(),
            protocol: config.protocol.name().into(),
            agent,
        };
        let exp = Experiment { config, agent_a, agent_b, templates: Arc::new(templates), key };
        exp.check_templates()?;
        Ok(exp)
    }

    /// Builds the agents named in the config. Remote agents share `gate`.
    pub fn from_config(
        config: ExperimentConfig,
        templates: TemplateSet,
        gate: &Arc<RequestGate>,
    ) -> Result<Self, ExperimentError> {
        config.validate()?;
        let agent_a = config.agent.build(gate)?;
        let agent_b = config.agent_b.as_ref().map(|s| s.build(gate)).transpose()?;
        Self::new(config, agent_a, agent_b, templates)
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn key(&self) -> &ConfigKey {
        &self.key
    }

    fn roles(&self) -> &'static [PromptRole] {
        match self.config.protocol {
            Protocol::Single => &[PromptRole::System, PromptRole::Single],
            Protocol::Stepwise { .. } => &[PromptRole::System, PromptRole::Stepwise],
            Protocol::Agentic { .. } => {
                &[PromptRole::System, PromptRole::AgenticStart, PromptRole::AgenticJoin, PromptRole::AgenticTurn]
            }
        }
    }

    /// Renders every template the protocol uses once, so missing templates
    /// and unbound placeholders are configuration errors.
    fn check_templates(&self) -> Result<(), PromptError> {
        let state = self.config.puzzle.initial_state();
        let mut bindings = self.bindings(&state);
        dialogue_bindings(&mut bindings, SPEAKER_A, SPEAKER_B, &[]);
        for &role in self.roles() {
            self.render(role, &bindings)?;
        }
        Ok(())
    }

    fn bindings(&self, state: &PuzzleState) -> Bindings {
        puzzle_bindings(&self.config.puzzle, state, self.config.protocol.p())
    }

    fn render(&self, role: PromptRole, bindings: &Bindings) -> Result<String, PromptError> {
        self.templates.render(&self.config.templates.resolve(self.config.puzzle.kind(), role), bindings)
    }

    pub fn trial_id(&self, index: usize) -> String {
        format!("{}/{index}", self.key)
    }

    /// Runs trial `index` with seed `seed + index`.
    pub fn run_trial(&self, index: usize) -> TrialResult {
        let mut trial = Trial::new(self, index);
        let budget = self.config.request_budget();
        let outcome = loop {
            if trial.turn >= budget {
                let speaker = self.speaker(trial.turn + 1);
                break trial.fail(
                    FailureCause::RequestBudgetExhausted,
                    trial.turn + 1,
                    speaker,
                    None,
                    format!("request budget of {budget} exhausted before reaching the goal"),
                );
            }
            trial.turn += 1;
            if let Some(done) = self.substage(&mut trial) {
                break done;
            }
        };
        trial.finish(outcome)
    }

    fn speaker(&self, turn: usize) -> &'static str {
        match self.config.protocol {
            Protocol::Agentic { .. } if turn.is_multiple_of(2) => SPEAKER_B,
            Protocol::Agentic { .. } => SPEAKER_A,
            _ => SPEAKER_SOLO,
        }
    }

    fn prompts(&self, trial: &Trial) -> (String, String) {
        let turn = trial.turn;
        let render = |role, b: &Bindings| self.render(role, b).expect("templates checked at construction");
        let mut b = self.bindings(&trial.state);
        let system = render(PromptRole::System, &b);
        let user = match self.config.protocol {
            Protocol::Single => render(PromptRole::Single, &b),
            Protocol::Stepwise { .. } => render(PromptRole::Stepwise, &b),
            Protocol::Agentic { .. } => {
                let (me, other) = if turn.is_multiple_of(2) { (SPEAKER_B, SPEAKER_A) } else { (SPEAKER_A, SPEAKER_B) };
                let initial = self.config.puzzle.initial_state();
                b.insert("state".into(), self.config.puzzle.render_state(&initial));
                dialogue_bindings(&mut b, me, other, &trial.last_block);
                let role = match turn {
                    1 => PromptRole::AgenticStart,
                    2 => PromptRole::AgenticJoin,
                    _ => PromptRole::AgenticTurn,
                };
                render(role, &b)
            }
        };
        (system, user)
    }

    fn context(&self, trial: &Trial, system: String, user: String) -> AgentContext {
        let transcript = match self.config.protocol {
            Protocol::Agentic { .. } => {
                let skip = self.config.transcript_window.map_or(0, |w| trial.transcript.len().saturating_sub(w));
                trial.transcript[skip..].to_vec()
            }
            _ => Vec::new(),
        };
        AgentContext {
            trial_id: trial.id.clone(),
            turn: trial.turn,
            seed: trial.seed,
            speaker: self.speaker(trial.turn).into(),
            system_text: system,
            user_text: user,
            transcript,
            task: TaskView {
                puzzle: self.config.puzzle,
                moves_requested: self.config.protocol.p(),
                ground_truth: trial.state.clone(),
            },
        }
    }

    /// One prompt/response/validate cycle. Returns the outcome once the
    /// trial is over.
    fn substage(&self, trial: &mut Trial) -> Option<Outcome> {
        let turn = trial.turn;
        let speaker = self.speaker(turn);
        let agent = if speaker == SPEAKER_B { &self.agent_b } else { &self.agent_a };
        let (system, user) = self.prompts(trial);
        let ctx = self.context(trial, system, user.clone());

        let response = match agent.respond(&ctx) {
            Ok(r) => r,
            Err(e) => return Some(trial.fail(FailureCause::TransportFailure, turn, speaker, None, e.to_string())),
        };
        trial.requests += 1;
        trial.usage += response.usage;
        trial.transcript.push(Exchange {
            turn,
            speaker: speaker.into(),
            prompt: user.clone(),
            response: response.text.clone(),
        });
        let mut record = SubstageRecord {
            turn,
            agent: speaker.into(),
            prompt: user,
            response: response.text,
            parsed_moves: Vec::new(),
            applied: 0,
            state_after: trial.state.clone(),
            usage: response.usage,
        };

        let parsed = match extract_moves(self.config.puzzle.kind(), &record.response) {
            Ok(outcome) if outcome.moves.is_empty() => Err("empty move list".to_string()),
            Ok(outcome) => Ok(outcome.moves),
            Err(e) => Err(e.to_string()),
        };
        let moves = match parsed {
            Ok(moves) => moves,
            Err(message) => {
                trial.substages.push(record);
                return Some(trial.fail(FailureCause::FormatError, turn, speaker, None, message));
            }
        };
        record.parsed_moves = moves;

        let limit = self.config.protocol.p().unwrap_or(usize::MAX);
        let puzzle = &self.config.puzzle;
        let mut rejected = None;
        for mv in record.parsed_moves.iter().take(limit) {
            if puzzle.is_goal(&trial.state) {
                break;
            }
            match puzzle.apply(&trial.state, mv) {
                Ok(next) => {
                    trial.state = next;
                    trial.moves_executed += 1;
                    record.applied += 1;
                }
                Err(e) => {
                    rejected = Some(format!("move {mv}: {e}"));
                    break;
                }
            }
        }
        record.state_after = trial.state.clone();
        trial.last_block = record.parsed_moves[..record.applied].to_vec();
        trial.substages.push(record);

        if let Some(message) = rejected {
            let number = trial.moves_executed + 1;
            return Some(trial.fail(FailureCause::IllegalMove, turn, speaker, Some(number), message));
        }
        if puzzle.is_goal(&trial.state) {
            return Some(Outcome::Success);
        }
        let visits = trial.visits.entry(trial.state.clone()).or_insert(0);
        *visits += 1;
        let recurrences = *visits - 1;
        if recurrences > self.config.loop_threshold {
            let message = format!(
                "state recurred {recurrences} times at turn boundaries (threshold {})",
                self.config.loop_threshold
            );
            return Some(trial.fail(FailureCause::LoopDetected, turn, speaker, None, message));
        }
        None
    }

    /// Runs every trial on a pool of `jobs` workers (at least one). Results
    /// are ordered by trial index.
    pub fn run(&self, jobs: usize) -> Result<Vec<TrialResult>, ExperimentError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| ExperimentError::Pool(e.to_string()))?;
        Ok(pool.install(|| (0..self.config.trials).into_par_iter().map(|i| self.run_trial(i)).collect()))
    }
}

fn dialogue_bindings(b: &mut Bindings, speaker: &str, counterpart: &str, last: &[Move]) {
    b.insert("speaker".into(), speaker.into());
    b.insert("counterpart".into(), counterpart.into());
    b.insert("last_moves".into(), format_moves(last));
}

struct Trial {
    id: String,
    index: usize,
    seed: u64,
    key: ConfigKey,
    puzzle: Puzzle,
    turn: usize,
    state: PuzzleState,
    visits: HashMap<PuzzleState, usize>,
    transcript: Vec<Exchange>,
    last_block: Vec<Move>,
    substages: Vec<SubstageRecord>,
    moves_executed: usize,
    usage: TokenUsage,
    requests: usize,
    failure: Option<FailureDetail>,
}

impl Trial {
    fn new(exp: &Experiment, index: usize) -> Self {
        let state = exp.config.puzzle.initial_state();
        Trial {
            id: exp.trial_id(index),
            index,
            seed: exp.config.seed.wrapping_add(index as u64),
            key: exp.key.clone(),
            puzzle: exp.config.puzzle,
            turn: 0,
            visits: HashMap::from([(state.clone(), 1)]),
            state,
            transcript: Vec::new(),
            last_block: Vec::new(),
            substages: Vec::new(),
            moves_executed: 0,
            usage: TokenUsage::default(),
            requests: 0,
            failure: None,
        }
    }

    fn fail(
        &mut self,
        cause: FailureCause,
        turn: usize,
        agent: &str,
        move_number: Option<usize>,
        message: String,
    ) -> Outcome {
        self.failure = Some(FailureDetail { turn, agent: agent.into(), move_number, message });
        Outcome::Failure(cause)
    }

    fn finish(self, outcome: Outcome) -> TrialResult {
        TrialResult {
            trial_id: self.id,
            trial_index: self.index,
            seed: self.seed,
            key: self.key,
            puzzle: self.puzzle,
            outcome,
            failure: self.failure,
            substages: self.substages,
            moves_executed: self.moves_executed,
            usage: self.usage,
            requests: self.requests,
            final_state: self.state,
        }
    }
}

fn expect_protocol(config: &ExperimentConfig, name: &str) -> Result<(), ExperimentError> {
    if config.protocol.name() != name {
        return Err(ConfigError::Invalid(format!("expected a {name} config, got {}", config.protocol.name())).into());
    }
    Ok(())
}

/// One single-shot trial (index 0) with the built-in templates.
pub fn run_single(config: &ExperimentConfig, agent: Arc<dyn Agent>) -> Result<TrialResult, ExperimentError> {
    expect_protocol(config, "single")?;
    Ok(Experiment::new(config.clone(), agent, None, TemplateSet::builtin())?.run_trial(0))
}

/// One stepwise trial (index 0) with the built-in templates.
pub fn run_stepwise(config: &ExperimentConfig, agent: Arc<dyn Agent>) -> Result<TrialResult, ExperimentError> {
    expect_protocol(config, "stepwise")?;
    Ok(Experiment::new(config.clone(), agent, None, TemplateSet::builtin())?.run_trial(0))
}

/// One dialogue trial (index 0) with the built-in templates.
pub fn run_agentic(
    config: &ExperimentConfig,
    agent_a: Arc<dyn Agent>,
    agent_b: Arc<dyn Agent>,
) -> Result<TrialResult, ExperimentError> {
    expect_protocol(config, "agentic")?;
    Ok(Experiment::new(config.clone(), agent_a, Some(agent_b), TemplateSet::builtin())?.run_trial(0))
}

/// Builds the configured agents and runs all trials on `jobs` workers.
pub fn run_experiment(config: &ExperimentConfig, jobs: usize) -> Result<Vec<TrialResult>, ExperimentError> {
    let gate = RequestGate::new(jobs.max(1));
    Experiment::from_config(config.clone(), TemplateSet::builtin(), &gate)?.run(jobs)
}
