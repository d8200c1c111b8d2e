//! One dispatch layer over the two puzzle families, so the solvers, parser,
//! and orchestrator can treat an instance uniformly.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::MoveError;
use crate::hanoi::{HanoiConfig, HanoiMove, HanoiState};
use crate::river::{RiverConfig, RiverMove, RiverState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PuzzleKind {
    Hanoi,
    River,
}

impl PuzzleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PuzzleKind::Hanoi => "hanoi",
            PuzzleKind::River => "river",
        }
    }
}

impl fmt::Display for PuzzleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "puzzle", rename_all = "snake_case")]
pub enum Puzzle {
    Hanoi(HanoiConfig),
    River(RiverConfig),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PuzzleState {
    Hanoi(HanoiState),
    River(RiverState),
}

/// Hanoi moves encode as `[disk, from, to]`, River moves as `["A_1", "a_1"]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Move {
    Hanoi(HanoiMove),
    River(RiverMove),
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Move::Hanoi(m) => m.fmt(f),
            Move::River(m) => m.fmt(f),
        }
    }
}

impl From<HanoiMove> for Move {
    fn from(m: HanoiMove) -> Self {
        Move::Hanoi(m)
    }
}

impl From<RiverMove> for Move {
    fn from(m: RiverMove) -> Self {
        Move::River(m)
    }
}

impl Puzzle {
    pub fn hanoi(n_disks: usize) -> Result<Self, crate::ConfigError> {
        HanoiConfig::new(n_disks).map(Puzzle::Hanoi)
    }

    pub fn river(n_pairs: usize, boat_capacity: usize) -> Result<Self, crate::ConfigError> {
        RiverConfig::new(n_pairs, boat_capacity).map(Puzzle::River)
    }

    pub fn kind(&self) -> PuzzleKind {
        match self {
            Puzzle::Hanoi(_) => PuzzleKind::Hanoi,
            Puzzle::River(_) => PuzzleKind::River,
        }
    }

    /// Disks for Hanoi, couples for River.
    pub fn n(&self) -> usize {
        match self {
            Puzzle::Hanoi(c) => c.n_disks(),
            Puzzle::River(c) => c.n_pairs(),
        }
    }

    pub fn boat_capacity(&self) -> Option<usize> {
        match self {
            Puzzle::Hanoi(_) => None,
            Puzzle::River(c) => Some(c.boat_capacity()),
        }
    }

    pub fn initial_state(&self) -> PuzzleState {
        match self {
            Puzzle::Hanoi(c) => PuzzleState::Hanoi(c.initial_state()),
            Puzzle::River(c) => PuzzleState::River(c.initial_state()),
        }
    }

    pub fn goal_state(&self) -> PuzzleState {
        match self {
            Puzzle::Hanoi(c) => PuzzleState::Hanoi(c.goal_state()),
            Puzzle::River(c) => PuzzleState::River(c.goal_state()),
        }
    }

    pub fn is_goal(&self, state: &PuzzleState) -> bool {
        match (self, state) {
            (Puzzle::Hanoi(c), PuzzleState::Hanoi(s)) => c.is_goal(s),
            (Puzzle::River(c), PuzzleState::River(s)) => c.is_goal(s),
            _ => false,
        }
    }

    pub fn apply(&self, state: &PuzzleState, mv: &Move) -> Result<PuzzleState, MoveError> {
        match (self, state, mv) {
            (Puzzle::Hanoi(_), PuzzleState::Hanoi(s), Move::Hanoi(m)) => s.apply(m).map(PuzzleState::Hanoi),
            (Puzzle::River(c), PuzzleState::River(s), Move::River(m)) => s.apply(m, c).map(PuzzleState::River),
            _ => Err(MoveError::WrongPuzzle),
        }
    }

    pub fn legal_moves(&self, state: &PuzzleState) -> Vec<Move> {
        match (self, state) {
            (Puzzle::Hanoi(_), PuzzleState::Hanoi(s)) => s.legal_moves().into_iter().map(Move::Hanoi).collect(),
            (Puzzle::River(c), PuzzleState::River(s)) => s.legal_moves(c).into_iter().map(Move::River).collect(),
            _ => Vec::new(),
        }
    }

    pub fn render_state(&self, state: &PuzzleState) -> String {
        match (self, state) {
            (_, PuzzleState::Hanoi(s)) => s.render(),
            (Puzzle::River(c), PuzzleState::River(s)) => s.render(c),
            (Puzzle::Hanoi(_), PuzzleState::River(s)) => format!("{s:?}"),
        }
    }

    /// Replays `moves` from the initial state, stopping at the first illegal
    /// move. Returns the reached state, or the 0-based index and error of the
    /// rejected move.
    pub fn replay<'a>(&self, moves: impl IntoIterator<Item = &'a Move>) -> Result<PuzzleState, (usize, MoveError)> {
        let mut state = self.initial_state();
        for (i, mv) in moves.into_iter().enumerate() {
            state = self.apply(&state, mv).map_err(|e| (i, e))?;
        }
        Ok(state)
    }

    /// Short human label such as `hanoi N=5` or `river N=3 k=2`.
    pub fn label(&self) -> String {
        match self {
            Puzzle::Hanoi(c) => format!("hanoi N={}", c.n_disks()),
            Puzzle::River(c) => format!("river N={} k={}", c.n_pairs(), c.boat_capacity()),
        }
    }
}

/// Canonical list encoding used in prompts and agent outputs, e.g.
/// `[[1, 0, 2], [2, 0, 1]]` or `[["A_1", "a_1"], ["A_1"]]`.
pub fn format_moves(moves: &[Move]) -> String {
    let inner: Vec<String> = moves.iter().map(Move::to_string).collect();
    format!("[{}]", inner.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn untagged_move_encoding() {
        let m: Move = serde_json::from_str("[1,0,2]").unwrap();
        assert_eq!(m, Move::Hanoi(HanoiMove::new(1, 0, 2)));
        let m: Move = serde_json::from_str(r#"["A_1","a_1"]"#).unwrap();
        assert!(matches!(m, Move::River(_)));
    }

    #[test]
    fn untagged_state_encoding() {
        let p = Puzzle::river(2, 2).unwrap();
        let json = serde_json::to_string(&p.initial_state()).unwrap();
        assert_eq!(serde_json::from_str::<PuzzleState>(&json).unwrap(), p.initial_state());
        let h = Puzzle::hanoi(2).unwrap();
        let json = serde_json::to_string(&h.initial_state()).unwrap();
        assert_eq!(json, "[[2,1],[],[]]");
        assert_eq!(serde_json::from_str::<PuzzleState>(&json).unwrap(), h.initial_state());
    }

    #[test]
    fn mismatched_move_is_rejected() {
        let h = Puzzle::hanoi(2).unwrap();
        let river_move = Move::River(RiverMove::new([crate::river::Person::agent(1)]));
        assert_eq!(h.apply(&h.initial_state(), &river_move), Err(MoveError::WrongPuzzle));
    }

    #[test]
    fn canonical_list_format() {
        let moves = vec![Move::Hanoi(HanoiMove::new(1, 0, 2)), Move::Hanoi(HanoiMove::new(2, 0, 1))];
        assert_eq!(format_moves(&moves), "[[1, 0, 2], [2, 0, 1]]");
        assert_eq!(format_moves(&[]), "[]");
    }
}
