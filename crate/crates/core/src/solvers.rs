//! Ground-truth solvers: the recursive Hanoi optimum, the closed-form River
//! solvability rule, breadth-first search for small River instances, and a
//! couples-only ferry schedule for boats of capacity four or more.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hanoi::{HanoiConfig, HanoiMove};
use crate::puzzle::{Move, Puzzle};
use crate::river::{Person, RiverConfig, RiverMove, RiverState};

/// Largest number of persons (2N) the River BFS will enumerate.
pub const BFS_MAX_PERSONS: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("instance too large for exhaustive search: {persons} persons (limit {limit})")]
    TooLarge { persons: usize, limit: usize },
    #[error("constructive schedule needs boat capacity >= 4, got {0}")]
    CapacityTooSmall(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub length: usize,
    pub moves: Vec<Move>,
}

impl Solution {
    pub fn new(moves: Vec<Move>) -> Self {
        Solution { length: moves.len(), moves }
    }
}

/// Minimal Hanoi solution with `2^N - 1` moves.
pub fn hanoi_optimal(config: &HanoiConfig) -> Solution {
    fn transfer(disks: u32, from: usize, to: usize, spare: usize, out: &mut Vec<Move>) {
        if disks == 0 {
            return;
        }
        transfer(disks - 1, from, spare, to, out);
        out.push(Move::Hanoi(HanoiMove::new(disks, from, to)));
        transfer(disks - 1, spare, to, from, out);
    }
    let mut moves = Vec::with_capacity((1usize << config.n_disks().min(40)) - 1);
    transfer(config.n_disks() as u32, config.source_peg(), config.target_peg(), config.spare_peg(), &mut moves);
    Solution::new(moves)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolvabilityRule {
    CapacityAtLeast4,
    WithinTwoKMinusOne,
    Unsolvable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolvabilityVerdict {
    pub solvable: bool,
    pub rule: SolvabilityRule,
}

impl SolvabilityVerdict {
    pub fn explain(&self, n: usize, k: usize) -> String {
        match self.rule {
            SolvabilityRule::CapacityAtLeast4 => format!("solvable: k = {k} >= 4 admits every N"),
            SolvabilityRule::WithinTwoKMinusOne => {
                format!("solvable: k = {k} <= 3 and N = {n} <= 2k-1 = {}", 2 * k - 1)
            }
            SolvabilityRule::Unsolvable if k == 1 => {
                "unsolvable: with k = 1 every return trip undoes the previous crossing".to_string()
            }
            SolvabilityRule::Unsolvable => {
                format!("unsolvable: k = {k} <= 3 requires N <= 2k-1 = {}, got N = {n}", 2 * k - 1)
            }
        }
    }
}

/// Closed-form River solvability: any `N` when `k >= 4`, otherwise
/// `N <= 2k - 1`. A one-seat boat is never enough, since the rower has to
/// bring it back and no trip makes net progress.
pub fn river_solvable(n: usize, k: usize) -> SolvabilityVerdict {
    #[allow(clippy::int_plus_one)]
    let (solvable, rule) = if k >= 4 {
        (true, SolvabilityRule::CapacityAtLeast4)
    } else if k >= 2 && n <= 2 * k - 1 {
        (true, SolvabilityRule::WithinTwoKMinusOne)
    } else {
        (false, SolvabilityRule::Unsolvable)
    };
    SolvabilityVerdict { solvable, rule }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BfsOutcome {
    Solved(Solution),
    /// The goal is unreachable; `explored` states were exhausted.
    Unsolvable {
        explored: usize,
    },
}

impl BfsOutcome {
    pub fn solution(&self) -> Option<&Solution> {
        match self {
            BfsOutcome::Solved(s) => Some(s),
            BfsOutcome::Unsolvable { .. } => None,
        }
    }
}

/// Shortest River solution by number of crossings. Successors are expanded
/// in canonical legal-move order, so ties always resolve the same way.
pub fn river_bfs(config: &RiverConfig) -> Result<BfsOutcome, SolverError> {
    let persons = 2 * config.n_pairs();
    if persons > BFS_MAX_PERSONS {
        return Err(SolverError::TooLarge { persons, limit: BFS_MAX_PERSONS });
    }
    let start = config.initial_state();
    let mut nodes: Vec<(RiverState, Option<(usize, RiverMove)>)> = vec![(start.clone(), None)];
    let mut index: HashMap<RiverState, usize> = HashMap::from([(start, 0)]);
    let mut queue = VecDeque::from([0usize]);

    while let Some(current) = queue.pop_front() {
        let state = nodes[current].0.clone();
        if config.is_goal(&state) {
            let mut moves = Vec::new();
            let mut at = current;
            while let Some((parent, mv)) = &nodes[at].1 {
                moves.push(Move::River(mv.clone()));
                at = *parent;
            }
            moves.reverse();
            return Ok(BfsOutcome::Solved(Solution::new(moves)));
        }
        for mv in state.legal_moves(config) {
            let next = state.apply(&mv, config).expect("legal move applies");
            if index.contains_key(&next) {
                continue;
            }
            index.insert(next.clone(), nodes.len());
            queue.push_back(nodes.len());
            nodes.push((next, Some((current, mv))));
        }
    }
    Ok(BfsOutcome::Unsolvable { explored: nodes.len() })
}

/// Valid (not necessarily shortest) schedule for `k >= 4` that only ever
/// moves whole couples: two couples over, one back, until the last two cross
/// together. Takes 1 crossing for N = 1 and 2N - 3 otherwise.
pub fn river_constructive(config: &RiverConfig) -> Result<Solution, SolverError> {
    if config.boat_capacity() < 4 {
        return Err(SolverError::CapacityTooSmall(config.boat_capacity()));
    }
    let couple = |i: u32| [Person::agent(i), Person::actor(i)];
    let n = config.n_pairs() as u32;
    if n == 1 {
        return Ok(Solution::new(vec![Move::River(RiverMove::new(couple(1)))]));
    }
    let mut moves = Vec::with_capacity(2 * n as usize - 3);
    // Couples `low..=n` are on the left bank at the start of each round.
    let mut low = 1;
    while n - low + 1 > 2 {
        moves.push(Move::River(RiverMove::new(couple(low).into_iter().chain(couple(low + 1)))));
        moves.push(Move::River(RiverMove::new(couple(low + 1))));
        low += 1;
    }
    moves.push(Move::River(RiverMove::new(couple(low).into_iter().chain(couple(low + 1)))));
    Ok(Solution::new(moves))
}

/// Splits a move list into consecutive blocks of `p` (the last may be short).
pub fn chunk_solution<T: Clone>(moves: &[T], p: usize) -> Vec<Vec<T>> {
    assert!(p >= 1, "block size must be at least 1");
    moves.chunks(p).map(<[T]>::to_vec).collect()
}

/// The solution scripted agents follow: the Hanoi optimum, the couples ferry
/// for `k >= 4`, or the BFS optimum for small solvable River instances.
pub fn reference_solution(puzzle: &Puzzle) -> Option<Solution> {
    match puzzle {
        Puzzle::Hanoi(c) => Some(hanoi_optimal(c)),
        Puzzle::River(c) => {
            if c.boat_capacity() >= 4 {
                return river_constructive(c).ok();
            }
            match river_bfs(c) {
                Ok(BfsOutcome::Solved(s)) => Some(s),
                _ => None,
            }
        }
    }
}
