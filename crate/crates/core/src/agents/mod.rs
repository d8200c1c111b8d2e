//! Solver agents: anything that turns a prompt into a completion.
//!
//! Every agent implements [`Agent`]. The harness owns all game state; agents
//! only see an [`AgentContext`] and must not keep trial state of their own
//! beyond what they can rebuild from it. Scripted agents also get a
//! [`TaskView`] with the ground-truth state, which remote models never see.

mod remote;
mod replay;
mod scripted;
mod spec;

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::{Puzzle, PuzzleState};

pub use remote::{backoff_schedule, ChatAgent, EndpointConfig, HttpReply, RequestGate, Transport, UreqTransport};
pub use replay::{read_transcript, RecordingAgent, ReplayAgent, Timestamps, TranscriptRecord, TranscriptWriter};
pub use scripted::{CannedAgent, OracleAgent, RandomLegalAgent, SaboteurAgent};
pub use spec::AgentSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
    pub total_tokens: u64,
}

impl TokenUsage {
    pub fn new(prompt_tokens: u64, completion_tokens: u64) -> Self {
        TokenUsage { prompt_tokens, completion_tokens, total_tokens: prompt_tokens + completion_tokens }
    }

    /// Offline stand-in for real token counts: whitespace-delimited words.
    pub fn synthetic(prompt: &str, completion: &str) -> Self {
        TokenUsage::new(word_count(prompt), word_count(completion))
    }
}

fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl Add for TokenUsage {
    type Output = TokenUsage;

    fn add(self, rhs: TokenUsage) -> TokenUsage {
        TokenUsage {
            prompt_tokens: self.prompt_tokens + rhs.prompt_tokens,
            completion_tokens: self.completion_tokens + rhs.completion_tokens,
            total_tokens: self.total_tokens + rhs.total_tokens,
        }
    }
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: TokenUsage) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for TokenUsage {
    fn sum<I: Iterator<Item = TokenUsage>>(iter: I) -> Self {
        iter.fold(TokenUsage::default(), Add::add)
    }
}

/// One earlier turn of a dialogue, as kept in the shared transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub turn: usize,
    pub speaker: String,
    pub prompt: String,
    pub response: String,
}

/// Harness-side view of the task, for scripted agents.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskView {
    pub puzzle: Puzzle,
    /// `None` asks for the complete solution in one response.
    pub moves_requested: Option<usize>,
    pub ground_truth: PuzzleState,
}

#[derive(Debug, Clone)]
pub struct AgentContext {
    pub trial_id: String,
    /// 1-based turn within the trial, counted across both speakers.
    pub turn: usize,
    pub seed: u64,
    pub speaker: String,
    pub system_text: String,
    pub user_text: String,
    pub transcript: Vec<Exchange>,
    pub task: TaskView,
}

impl AgentContext {
    /// All prompt text the agent is shown, for synthetic token accounting.
    pub fn prompt_text(&self) -> String {
        let mut text = format!("{}\n{}", self.system_text, self.user_text);
        for ex in &self.transcript {
            text.push('\n');
            text.push_str(&ex.response);
        }
        text
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub latency: Duration,
    pub provider_meta: BTreeMap<String, String>,
}

impl AgentResponse {
    /// Response from a scripted agent, with word-count usage.
    pub fn scripted(ctx: &AgentContext, text: String) -> Self {
        let usage = TokenUsage::synthetic(&ctx.prompt_text(), &text);
        let provider_meta = BTreeMap::from([("usage".to_string(), "synthetic-word-count".to_string())]);
        AgentResponse { text, usage, latency: Duration::ZERO, provider_meta }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider error: {0}")]
    Provider(String),
    #[error("no recorded response for trial {trial_id} turn {turn}")]
    Exhausted { trial_id: String, turn: usize },
    #[error("agent cannot handle this task: {0}")]
    Unsupported(String),
    #[error("agent configuration: {0}")]
    Config(String),
}

pub trait Agent: Send + Sync {
    /// Label used in config keys and reports.
    fn name(&self) -> String;

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError>;
}

impl<A: Agent + ?Sized> Agent for std::sync::Arc<A> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        (**self).respond(ctx)
    }
}

#[cfg(test)]
pub(crate) fn test_context(puzzle: Puzzle, turn: usize, moves_requested: Option<usize>) -> AgentContext {
    AgentContext {
        trial_id: "t#0".into(),
        turn,
        seed: 11,
        speaker: "solver".into(),
        system_text: "system".into(),
        user_text: "user prompt".into(),
        transcript: Vec::new(),
        task: TaskView { puzzle, moves_requested, ground_truth: puzzle.initial_state() },
    }
}
