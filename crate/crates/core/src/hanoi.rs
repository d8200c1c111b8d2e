//! Three-peg Towers of Hanoi.
//!
//! Disk ids start at 1 for the smallest disk. Pegs are indexed 0, 1, 2 and
//! every stack is stored bottom to top.

use std::fmt;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{ConfigError, MoveError};

pub const PEG_COUNT: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHanoiConfig")]
pub struct HanoiConfig {
    n_disks: usize,
    source_peg: usize,
    target_peg: usize,
}

#[derive(Deserialize)]
struct RawHanoiConfig {
    n_disks: usize,
    #[serde(default)]
    source_peg: usize,
    #[serde(default = "default_target")]
    target_peg: usize,
}

fn default_target() -> usize {
    2
}

impl TryFrom<RawHanoiConfig> for HanoiConfig {
    type Error = ConfigError;

    fn try_from(raw: RawHanoiConfig) -> Result<Self, Self::Error> {
        HanoiConfig::with_pegs(raw.n_disks, raw.source_peg, raw.target_peg)
    }
}

impl HanoiConfig {
    /// Standard instance: all disks start on peg 0 and must reach peg 2.
    pub fn new(n_disks: usize) -> Result<Self, ConfigError> {
        Self::with_pegs(n_disks, 0, 2)
    }

    pub fn with_pegs(n_disks: usize, source_peg: usize, target_peg: usize) -> Result<Self, ConfigError> {
        if n_disks == 0 {
            return Err(ConfigError::Invalid("Hanoi needs at least one disk".into()));
        }
        if source_peg >= PEG_COUNT || target_peg >= PEG_COUNT {
            return Err(ConfigError::Invalid(format!(
                "peg indices must be in 0..{PEG_COUNT}, got source {source_peg}, target {target_peg}"
            )));
        }
        if source_peg == target_peg {
            return Err(ConfigError::Invalid("source and target peg must differ".into()));
        }
        Ok(Self { n_disks, source_peg, target_peg })
    }

    pub fn n_disks(&self) -> usize {
        self.n_disks
    }

    pub fn source_peg(&self) -> usize {
        self.source_peg
    }

    pub fn target_peg(&self) -> usize {
        self.target_peg
    }

    /// The peg that is neither source nor target.
    pub fn spare_peg(&self) -> usize {
        3 - self.source_peg - self.target_peg
    }

    pub fn initial_state(&self) -> HanoiState {
        let mut pegs: [Vec<u32>; PEG_COUNT] = Default::default();
        pegs[self.source_peg] = (1..=self.n_disks as u32).rev().collect();
        HanoiState { pegs }
    }

    pub fn goal_state(&self) -> HanoiState {
        let mut pegs: [Vec<u32>; PEG_COUNT] = Default::default();
        pegs[self.target_peg] = (1..=self.n_disks as u32).rev().collect();
        HanoiState { pegs }
    }

    pub fn is_goal(&self, state: &HanoiState) -> bool {
        state.pegs[self.target_peg].len() == self.n_disks
    }
}

/// A placement of disks on the three pegs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HanoiState {
    pegs: [Vec<u32>; PEG_COUNT],
}

impl HanoiState {
    /// Builds a state from explicit stacks, checking that the disks are
    /// exactly `1..=n` and that no stack has a larger disk above a smaller one.
    pub fn from_pegs(pegs: [Vec<u32>; PEG_COUNT], n_disks: usize) -> Result<Self, ConfigError> {
        let state = Self { pegs };
        state.check_invariants(n_disks)?;
        Ok(state)
    }

    pub fn check_invariants(&self, n_disks: usize) -> Result<(), ConfigError> {
        let mut seen = vec![false; n_disks + 1];
        for (peg, stack) in self.pegs.iter().enumerate() {
            for &disk in stack {
                let d = disk as usize;
                if d == 0 || d > n_disks {
                    return Err(ConfigError::Invalid(format!("disk {disk} on peg {peg} is outside 1..={n_disks}")));
                }
                if std::mem::replace(&mut seen[d], true) {
                    return Err(ConfigError::Invalid(format!("disk {disk} appears twice")));
                }
            }
            if stack.windows(2).any(|w| w[0] <= w[1]) {
                return Err(ConfigError::Invalid(format!("peg {peg} is not strictly decreasing bottom to top")));
            }
        }
        if let Some(missing) = (1..=n_disks).find(|&d| !seen[d]) {
            return Err(ConfigError::Invalid(format!("disk {missing} is missing")));
        }
        Ok(())
    }

    pub fn pegs(&self) -> &[Vec<u32>; PEG_COUNT] {
        &self.pegs
    }

    pub fn top(&self, peg: usize) -> Option<u32> {
        self.pegs.get(peg).and_then(|s| s.last().copied())
    }

    pub fn disk_count(&self) -> usize {
        self.pegs.iter().map(Vec::len).sum()
    }

    /// Pure transition: returns the successor state, leaving `self` untouched.
    pub fn apply(&self, mv: &HanoiMove) -> Result<HanoiState, MoveError> {
        if mv.from_peg >= PEG_COUNT || mv.to_peg >= PEG_COUNT || mv.from_peg == mv.to_peg {
            return Err(MoveError::BadPeg { from: mv.from_peg, to: mv.to_peg });
        }
        let moving = self.top(mv.from_peg).ok_or(MoveError::EmptySource { peg: mv.from_peg })?;
        if moving != mv.disk {
            return Err(MoveError::WrongDisk { declared: mv.disk, actual: moving, peg: mv.from_peg });
        }
        if let Some(onto) = self.top(mv.to_peg) {
            if onto < moving {
                return Err(MoveError::SizeViolation { moving, onto });
            }
        }
        let mut next = self.clone();
        next.pegs[mv.from_peg].pop();
        next.pegs[mv.to_peg].push(moving);
        Ok(next)
    }

    /// Every legal move, ordered by (from, to).
    pub fn legal_moves(&self) -> Vec<HanoiMove> {
        let mut moves = Vec::new();
        for from in 0..PEG_COUNT {
            let Some(disk) = self.top(from) else { continue };
            for to in 0..PEG_COUNT {
                if to == from {
                    continue;
                }
                if self.top(to).is_none_or(|onto| onto > disk) {
                    moves.push(HanoiMove::new(disk, from, to));
                }
            }
        }
        moves
    }

    /// One line per peg, `Peg i: [bottom, ..., top]`.
    pub fn render(&self) -> String {
        self.pegs
            .iter()
            .enumerate()
            .map(|(i, stack)| format!("Peg {i}: {}", format_list(stack)))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

fn format_list(stack: &[u32]) -> String {
    let inner: Vec<String> = stack.iter().map(u32::to_string).collect();
    format!("[{}]", inner.join(", "))
}

impl Serialize for HanoiState {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.pegs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HanoiState {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pegs = <[Vec<u32>; PEG_COUNT]>::deserialize(deserializer)?;
        let state = HanoiState { pegs };
        let n = state.disk_count();
        state.check_invariants(n).map_err(D::Error::custom)?;
        Ok(state)
    }
}

/// Move the top disk `disk` from `from_peg` to `to_peg`.
///
/// Fields are not range-checked here; a triple read from model output can
/// name any peg, and [`HanoiState::apply`] reports it as `BadPeg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HanoiMove {
    pub disk: u32,
    pub from_peg: usize,
    pub to_peg: usize,
}

impl HanoiMove {
    pub fn new(disk: u32, from_peg: usize, to_peg: usize) -> Self {
        Self { disk, from_peg, to_peg }
    }

    pub fn inverse(&self) -> HanoiMove {
        HanoiMove::new(self.disk, self.to_peg, self.from_peg)
    }
}

impl fmt::Display for HanoiMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}]", self.disk, self.from_peg, self.to_peg)
    }
}

impl Serialize for HanoiMove {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        (self.disk, self.from_peg, self.to_peg).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for HanoiMove {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let (disk, from_peg, to_peg) = <(u32, usize, usize)>::deserialize(deserializer)?;
        Ok(HanoiMove { disk, from_peg, to_peg })
    }
}
