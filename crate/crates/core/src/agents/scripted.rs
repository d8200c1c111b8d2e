use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Agent, AgentContext, AgentError, AgentResponse};
use crate::hanoi::{HanoiMove, PEG_COUNT};
use crate::puzzle::{format_moves, Move, Puzzle, PuzzleState};
use crate::river::{Person, RiverConfig, RiverMove, RiverState};
use crate::solvers::{chunk_solution, reference_solution, Solution};

fn answer(moves: &[Move]) -> String {
    format!("moves = {}", format_moves(moves))
}

/// Emits the reference solution: all of it for single-shot prompts, or the
/// `turn`-th block of `p` moves otherwise.
#[derive(Default)]
pub struct OracleAgent {
    cache: Mutex<HashMap<Puzzle, Arc<Solution>>>,
}

impl OracleAgent {
    pub fn new() -> Self {
        Self::default()
    }

    fn solution(&self, puzzle: &Puzzle) -> Result<Arc<Solution>, AgentError> {
        let mut cache = self.cache.lock().expect("oracle cache poisoned");
        if let Some(sol) = cache.get(puzzle) {
            return Ok(Arc::clone(sol));
        }
        let sol = reference_solution(puzzle)
            .map(Arc::new)
            .ok_or_else(|| AgentError::Unsupported(format!("no reference solution for {}", puzzle.label())))?;
        cache.insert(*puzzle, Arc::clone(&sol));
        Ok(sol)
    }

    /// The moves the oracle proposes at this turn.
    pub fn block(&self, ctx: &AgentContext) -> Result<Vec<Move>, AgentError> {
        let sol = self.solution(&ctx.task.puzzle)?;
        Ok(match ctx.task.moves_requested {
            None => sol.moves.clone(),
            Some(p) => chunk_solution(&sol.moves, p).into_iter().nth(ctx.turn.saturating_sub(1)).unwrap_or_default(),
        })
    }
}

impl Agent for OracleAgent {
    fn name(&self) -> String {
        "oracle".into()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let block = self.block(ctx)?;
        let text = if block.is_empty() { "The puzzle is already solved.".to_string() } else { answer(&block) };
        Ok(AgentResponse::scripted(ctx, text))
    }
}

/// Behaves like the oracle until turn `fail_at` (1-based), where the first
/// move of its block is replaced by an illegal one.
pub struct SaboteurAgent {
    fail_at: usize,
    oracle: OracleAgent,
}

impl SaboteurAgent {
    pub fn new(fail_at: usize) -> Self {
        SaboteurAgent { fail_at: fail_at.max(1), oracle: OracleAgent::new() }
    }

    pub fn fail_at(&self) -> usize {
        self.fail_at
    }
}

impl Agent for SaboteurAgent {
    fn name(&self) -> String {
        format!("saboteur@{}", self.fail_at)
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let mut block = self.oracle.block(ctx)?;
        if ctx.turn == self.fail_at {
            let bad = illegal_move(&ctx.task.puzzle, &ctx.task.ground_truth);
            match block.first_mut() {
                Some(first) => *first = bad,
                None => block.push(bad),
            }
        }
        Ok(AgentResponse::scripted(ctx, answer(&block)))
    }
}

/// Some move that the referee rejects in `state`.
fn illegal_move(puzzle: &Puzzle, state: &PuzzleState) -> Move {
    match (puzzle, state) {
        (Puzzle::Hanoi(cfg), PuzzleState::Hanoi(s)) => {
            // Largest disks first, so the usual result is WrongDisk.
            for disk in (1..=cfg.n_disks() as u32).rev() {
                for from in 0..PEG_COUNT {
                    for to in (0..PEG_COUNT).filter(|&t| t != from) {
                        let mv = HanoiMove::new(disk, from, to);
                        if s.apply(&mv).is_err() {
                            return Move::Hanoi(mv);
                        }
                    }
                }
            }
            Move::Hanoi(HanoiMove::new(1, 0, 0))
        }
        (Puzzle::River(cfg), PuzzleState::River(s)) => Move::River(illegal_crossing(cfg, s)),
        _ => unreachable!("puzzle and state disagree"),
    }
}

fn illegal_crossing(cfg: &RiverConfig, s: &RiverState) -> RiverMove {
    let here: Vec<Person> = cfg.persons().filter(|p| s.side_of(p) == s.boat()).collect();
    if let Some(p) = cfg.persons().find(|p| s.side_of(p) != s.boat()) {
        return RiverMove::new([p]);
    }
    for a in &here {
        for b in &here {
            let mv = RiverMove::new([*a, *b]);
            if mv.travelers.len() == 2 && s.apply(&mv, cfg).is_err() {
                return mv;
            }
        }
    }
    if here.len() > cfg.boat_capacity() {
        return RiverMove::new(here.into_iter().take(cfg.boat_capacity() + 1));
    }
    RiverMove::new([Person::agent(cfg.n_pairs() as u32 + 1)])
}

/// Always answers with the same text. With prose and no move list this is
/// the baseline for format failures.
pub struct CannedAgent {
    text: String,
    label: &'static str,
}

impl CannedAgent {
    pub fn new(text: impl Into<String>) -> Self {
        CannedAgent { text: text.into(), label: "canned" }
    }

    pub fn prose() -> Self {
        CannedAgent {
            text: "I have thought about this carefully, but I am unable to list the moves.".into(),
            label: "prose",
        }
    }
}

impl Agent for CannedAgent {
    fn name(&self) -> String {
        self.label.into()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        Ok(AgentResponse::scripted(ctx, self.text.clone()))
    }
}

/// Null-model baseline: a uniformly random walk over legal moves, seeded by
/// the trial seed and turn so the same context always gets the same answer.
pub struct RandomLegalAgent;

/// Above this many candidate boat loads, River moves are drawn by rejection
/// sampling instead of enumeration.
const ENUMERATION_LIMIT: u64 = 50_000;
const SAMPLING_TRIES: usize = 10_000;

impl RandomLegalAgent {
    pub fn walk(ctx: &AgentContext) -> Vec<Move> {
        let puzzle = &ctx.task.puzzle;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed ^ (ctx.turn as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let count =
            ctx.task.moves_requested.unwrap_or_else(|| reference_solution(puzzle).map_or(4 * puzzle.n(), |s| s.length));
        let mut state = ctx.task.ground_truth.clone();
        let mut moves = Vec::with_capacity(count);
        while moves.len() < count && !puzzle.is_goal(&state) {
            let Some(mv) = random_legal(puzzle, &state, &mut rng) else { break };
            state = puzzle.apply(&state, &mv).expect("legal move applies");
            moves.push(mv);
        }
        moves
    }
}

fn random_legal(puzzle: &Puzzle, state: &PuzzleState, rng: &mut ChaCha8Rng) -> Option<Move> {
    if let (Puzzle::River(cfg), PuzzleState::River(s)) = (puzzle, state) {
        let here: Vec<Person> = cfg.persons().filter(|p| s.side_of(p) == s.boat()).collect();
        if load_count(here.len() as u64, cfg.boat_capacity() as u64) > ENUMERATION_LIMIT {
            let max = cfg.boat_capacity().min(here.len());
            for _ in 0..SAMPLING_TRIES {
                let size = rng.random_range(1..=max);
                let mv = RiverMove::new(here.choose_multiple(rng, size).copied());
                if s.apply(&mv, cfg).is_ok() {
                    return Some(Move::River(mv));
                }
            }
            return None;
        }
    }
    puzzle.legal_moves(state).choose(rng).cloned()
}

/// Number of non-empty subsets of at most `k` out of `m` people.
fn load_count(m: u64, k: u64) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for s in 1..=k.min(m) {
        c = c.saturating_mul(m - s + 1) / s;
        total = total.saturating_add(c);
    }
    total
}

impl Agent for RandomLegalAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let moves = Self::walk(ctx);
        let text = if moves.is_empty() { "No legal move is available.".to_string() } else { answer(&moves) };
        Ok(AgentResponse::scripted(ctx, text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::test_context;
    use crate::parser::extract_moves;

    #[test]
    fn oracle_chunks_by_turn() {
        let puzzle = Puzzle::hanoi(3).unwrap();
        let oracle = OracleAgent::new();
        let first = oracle.respond(&test_context(puzzle, 1, Some(3))).unwrap();
        assert_eq!(first.text, "moves = [[1, 0, 2], [2, 0, 1], [1, 2, 1]]");
        let last = oracle.respond(&test_context(puzzle, 3, Some(3))).unwrap();
        assert_eq!(last.text, "moves = [[1, 0, 2]]");
        let whole = oracle.respond(&test_context(puzzle, 1, None)).unwrap();
        assert_eq!(extract_moves(puzzle.kind(), &whole.text).unwrap().moves.len(), 7);
        assert_eq!(whole.provider_meta["usage"], "synthetic-word-count");
    }

    #[test]
    fn saboteur_breaks_on_schedule() {
        let puzzle = Puzzle::hanoi(3).unwrap();
        let sab = SaboteurAgent::new(1);
        let resp = sab.respond(&test_context(puzzle, 1, Some(3))).unwrap();
        let moves = extract_moves(puzzle.kind(), &resp.text).unwrap().moves;
        assert_eq!(moves[0], Move::Hanoi(HanoiMove::new(3, 0, 1)));
        assert!(puzzle.apply(&puzzle.initial_state(), &moves[0]).is_err());

        let river = Puzzle::river(1, 2).unwrap();
        let ctx = test_context(river, 1, Some(1));
        let bad = illegal_move(&river, &ctx.task.ground_truth);
        assert!(river.apply(&ctx.task.ground_truth, &bad).is_err());
        let river = Puzzle::river(3, 2).unwrap();
        let bad = illegal_move(&river, &river.initial_state());
        assert!(river.apply(&river.initial_state(), &bad).is_err());
    }

    #[test]
    fn random_agent_is_deterministic_and_legal() {
        let puzzle = Puzzle::hanoi(3).unwrap();
        let ctx = test_context(puzzle, 1, Some(1));
        let a = RandomLegalAgent.respond(&ctx).unwrap();
        assert_eq!(a, RandomLegalAgent.respond(&ctx).unwrap());
        let mv = &extract_moves(puzzle.kind(), &a.text).unwrap().moves[0];
        assert!(puzzle.legal_moves(&puzzle.initial_state()).contains(mv));

        let river = Puzzle::river(1, 2).unwrap();
        let ctx = test_context(river, 1, Some(1));
        let mv = &extract_moves(river.kind(), &RandomLegalAgent.respond(&ctx).unwrap().text).unwrap().moves[0];
        assert!(river.legal_moves(&river.initial_state()).contains(mv));
    }

    #[test]
    fn random_agent_samples_large_instances() {
        let river = Puzzle::river(100, 4).unwrap();
        let moves = RandomLegalAgent::walk(&test_context(river, 1, Some(5)));
        assert_eq!(moves.len(), 5);
        assert!(river.replay(&moves).is_ok());
    }

    #[test]
    fn load_counts() {
        assert_eq!(load_count(2, 2), 3);
        assert_eq!(load_count(12, 4), 12 + 66 + 220 + 495);
        assert_eq!(load_count(3, 5), 7);
    }
}
