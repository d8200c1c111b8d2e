use thiserror::Error;

use crate::river::Person;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("River instance N={n}, k={k} is unsolvable ({reason}); set allow_unsolvable to run it anyway")]
    Unsolvable { n: usize, k: usize, reason: String },
}

/// Why a proposed move was rejected by the ground-truth state machine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MoveError {
    #[error("EmptySource: peg {peg} has no disk")]
    EmptySource { peg: usize },
    #[error("WrongDisk: declared disk {declared} but the top of peg {peg} is disk {actual}")]
    WrongDisk { declared: u32, actual: u32, peg: usize },
    #[error("SizeViolation: disk {moving} cannot go on top of smaller disk {onto}")]
    SizeViolation { moving: u32, onto: u32 },
    #[error("BadPeg: move from peg {from} to peg {to}")]
    BadPeg { from: usize, to: usize },
    #[error("Overloaded: {travelers} travelers exceed boat capacity {capacity}")]
    Overloaded { travelers: usize, capacity: usize },
    #[error("EmptyBoat: the boat cannot cross empty")]
    EmptyBoat,
    #[error("WrongSide: {0} is not on the boat's side")]
    WrongSide(Person),
    #[error("UnknownPerson: {0} is not part of this instance")]
    UnknownPerson(Person),
    #[error("SafetyViolation: {actor} is with another agent without {actor}'s own agent ({location})")]
    SafetyViolation { actor: Person, location: String },
    #[error("WrongPuzzle: move does not belong to this puzzle")]
    WrongPuzzle,
}

impl MoveError {
    /// Short variant name, used in referee verdicts and logs.
    pub fn kind(&self) -> &'static str {
        match self {
            MoveError::EmptySource { .. } => "EmptySource",
            MoveError::WrongDisk { .. } => "WrongDisk",
            MoveError::SizeViolation { .. } => "SizeViolation",
            MoveError::BadPeg { .. } => "BadPeg",
            MoveError::Overloaded { .. } => "Overloaded",
            MoveError::EmptyBoat => "EmptyBoat",
            MoveError::WrongSide(_) => "WrongSide",
            MoveError::UnknownPerson(_) => "UnknownPerson",
            MoveError::SafetyViolation { .. } => "SafetyViolation",
            MoveError::WrongPuzzle => "WrongPuzzle",
        }
    }
}
