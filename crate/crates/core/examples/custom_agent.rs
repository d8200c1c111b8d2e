//! Plug in your own solver by implementing `Agent`.
//!
//! This one replies with the classic iterative Hanoi rule: move the smallest
//! disk cyclically, alternating with the only other legal move.
//!
//! cargo run --example custom_agent

use std::sync::Arc;

use puzzlebench::agents::{Agent, AgentContext, AgentError, AgentResponse};
use puzzlebench::hanoi::{HanoiMove, HanoiState};
use puzzlebench::orchestrator::{run_stepwise, ExperimentConfig, Protocol};
use puzzlebench::puzzle::{format_moves, Move, Puzzle, PuzzleState};

struct IterativeHanoi;

impl IterativeHanoi {
    fn next(state: &HanoiState, n: usize, step: usize) -> Option<HanoiMove> {
        let cycle: [usize; 3] = if n.is_multiple_of(2) { [0, 1, 2] } else { [0, 2, 1] };
        if step.is_multiple_of(2) {
            let from = (0..3).find(|&p| state.top(p) == Some(1))?;
            let at = cycle.iter().position(|&p| p == from)?;
            return Some(HanoiMove::new(1, from, cycle[(at + 1) % 3]));
        }
        state.legal_moves().into_iter().find(|m| m.disk != 1)
    }
}

impl Agent for IterativeHanoi {
    fn name(&self) -> String {
        "iterative".into()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let Puzzle::Hanoi(cfg) = ctx.task.puzzle else {
            return Err(AgentError::Unsupported("hanoi only".into()));
        };
        let PuzzleState::Hanoi(mut state) = ctx.task.ground_truth.clone() else { unreachable!() };
        let p = ctx.task.moves_requested.unwrap_or(usize::MAX);
        let mut step = ctx.turn.saturating_sub(1).saturating_mul(p);
        let mut block = Vec::new();
        while block.len() < p && !cfg.is_goal(&state) {
            let Some(mv) = Self::next(&state, cfg.n_disks(), step) else { break };
            state = state.apply(&mv).map_err(|e| AgentError::Unsupported(e.to_string()))?;
            block.push(Move::Hanoi(mv));
            step += 1;
        }
        Ok(AgentResponse::scripted(ctx, format!("moves = {}", format_moves(&block))))
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in 3..=9 {
        let config = ExperimentConfig::new(Puzzle::hanoi(n)?, Protocol::Stepwise { p: 7 }, 1);
        let trial = run_stepwise(&config, Arc::new(IterativeHanoi))?;
        println!("N={n}: {:?}, {} moves in {} requests", trial.outcome, trial.moves_executed, trial.requests);
    }
    Ok(())
}
