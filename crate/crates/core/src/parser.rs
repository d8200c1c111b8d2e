//! Pulls the final move list out of free-form model output.
//!
//! The parser looks for bracketed lists of lists anywhere in the text and
//! keeps the last one that is well formed for the puzzle. It only checks
//! syntax; whether the moves are legal is decided by the state machine.
//!
//! Tolerance table:
//!
//! | input                                   | handling                         |
//! |-----------------------------------------|----------------------------------|
//! | code fences, prose, `moves =` prefix    | ignored, only brackets matter    |
//! | whitespace and newlines inside lists    | ignored                          |
//! | trailing comma before `]`               | accepted                         |
//! | `"A_1"` or `'A_1'`                      | accepted, inner spaces trimmed   |
//! | bare `A_1` (River only)                 | accepted                         |
//! | quoted numbers in a Hanoi triple        | `MalformedTriple`                |
//! | floats, signs, other punctuation        | the candidate block is discarded |

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hanoi::HanoiMove;
use crate::puzzle::{Move, PuzzleKind};
use crate::river::{Person, RiverMove};

const MAX_DEPTH: usize = 6;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseOutcome {
    pub moves: Vec<Move>,
    /// Byte range of the selected block within the input text.
    pub span: Range<usize>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum ParseError {
    #[error("NoBlockFound: no move list in the response")]
    NoBlockFound,
    #[error("MalformedTriple: {0}")]
    MalformedTriple(String),
    #[error("UnknownPersonId: {0:?}")]
    UnknownPersonId(String),
    #[error("MalformedEntry: {0}")]
    MalformedEntry(String),
}

pub fn extract_moves(kind: PuzzleKind, text: &str) -> Result<ParseOutcome, ParseError> {
    match kind {
        PuzzleKind::Hanoi => extract_hanoi_moves(text),
        PuzzleKind::River => extract_river_moves(text),
    }
}

/// Last well-formed `[[disk, from, to], ...]` block in `text`.
pub fn extract_hanoi_moves(text: &str) -> Result<ParseOutcome, ParseError> {
    select_last(text, hanoi_block)
}

/// Last well-formed `[["A_1", "a_1"], ...]` block in `text`.
pub fn extract_river_moves(text: &str) -> Result<ParseOutcome, ParseError> {
    select_last(text, river_block)
}

fn select_last(
    text: &str,
    interpret: fn(&[Value]) -> Result<Vec<Move>, ParseError>,
) -> Result<ParseOutcome, ParseError> {
    let candidates = find_blocks(text);
    let mut diagnostics = Vec::new();
    let mut last_error = None;
    for (span, rows) in candidates.iter().rev() {
        match interpret(rows) {
            Ok(moves) => {
                if candidates.len() > 1 {
                    diagnostics.push(format!(
                        "{} candidate move lists found; using the one at bytes {}..{}",
                        candidates.len(),
                        span.start,
                        span.end
                    ));
                }
                return Ok(ParseOutcome { moves, span: span.clone(), diagnostics });
            }
            Err(e) => {
                diagnostics.push(format!("skipped block at bytes {}..{}: {e}", span.start, span.end));
                last_error.get_or_insert(e);
            }
        }
    }
    Err(last_error.unwrap_or(ParseError::NoBlockFound))
}

fn hanoi_block(rows: &[Value]) -> Result<Vec<Move>, ParseError> {
    rows.iter()
        .map(|row| {
            let Value::List(items) = row else {
                return Err(ParseError::MalformedTriple(format!("expected [disk, from, to], got {row}")));
            };
            let nums: Option<Vec<u64>> = items
                .iter()
                .map(|v| match v {
                    Value::Int(digits) => digits.parse().ok(),
                    _ => None,
                })
                .collect();
            match nums.as_deref() {
                Some(&[disk, from, to]) => {
                    let disk = u32::try_from(disk)
                        .map_err(|_| ParseError::MalformedTriple(format!("disk {disk} out of range")))?;
                    Ok(Move::Hanoi(HanoiMove::new(disk, from as usize, to as usize)))
                }
                _ => Err(ParseError::MalformedTriple(format!("expected three integers, got {row}"))),
            }
        })
        .collect()
}

fn river_block(rows: &[Value]) -> Result<Vec<Move>, ParseError> {
    rows.iter()
        .map(|row| {
            let Value::List(items) = row else {
                return Err(ParseError::MalformedEntry(format!("expected a list of person ids, got {row}")));
            };
            let mut people = Vec::with_capacity(items.len());
            for item in items {
                let Value::Str(raw) = item else {
                    return Err(ParseError::MalformedEntry(format!("expected a person id, got {item}")));
                };
                let id = raw.trim();
                let person: Person = id.parse().map_err(|_| ParseError::UnknownPersonId(id.to_string()))?;
                if people.contains(&person) {
                    return Err(ParseError::MalformedEntry(format!("{person} listed twice in one crossing")));
                }
                people.push(person);
            }
            Ok(Move::River(RiverMove::new(people)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Value {
    List(Vec<Value>),
    /// Unsigned decimal digits; range is checked by the interpreter.
    Int(String),
    /// Quoted string contents or a bare identifier.
    Str(String),
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::List(items) => {
                f.write_str("[")?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Int(d) => f.write_str(d),
            Value::Str(s) => write!(f, "{s:?}"),
        }
    }
}

/// Every non-empty list-of-lists in `text`, in order of appearance. Nested
/// candidates inside an accepted block are not reported separately.
fn find_blocks(text: &str) -> Vec<(Range<usize>, Vec<Value>)> {
    let bytes = text.as_bytes();
    let mut blocks = Vec::new();
    let mut pos = 0;
    while let Some(offset) = bytes[pos..].iter().position(|&b| b == b'[') {
        let start = pos + offset;
        let mut cursor = Cursor { bytes, pos: start };
        match cursor.list(0) {
            Some(items) if !items.is_empty() && items.iter().all(|v| matches!(v, Value::List(_))) => {
                blocks.push((start..cursor.pos, items));
                pos = cursor.pos;
            }
            _ => pos = start + 1,
        }
    }
    blocks
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|b| b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Parses a `[...]` list starting at the cursor.
    fn list(&mut self, depth: usize) -> Option<Vec<Value>> {
        if depth > MAX_DEPTH || self.peek() != Some(b'[') {
            return None;
        }
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(b']') {
                self.pos += 1;
                return Some(items);
            }
            items.push(self.value(depth)?);
            self.skip_ws();
            match self.peek()? {
                b',' => self.pos += 1,
                b']' => {
                    self.pos += 1;
                    return Some(items);
                }
                _ => return None,
            }
        }
    }

    fn value(&mut self, depth: usize) -> Option<Value> {
        match self.peek()? {
            b'[' => self.list(depth + 1).map(Value::List),
            q @ (b'"' | b'\'') => {
                let start = self.pos + 1;
                let len = self.bytes[start..].iter().position(|&b| b == q || b == b'\n')?;
                if self.bytes[start + len] != q {
                    return None;
                }
                self.pos = start + len + 1;
                let s = std::str::from_utf8(&self.bytes[start..start + len]).ok()?;
                Some(Value::Str(s.to_string()))
            }
            b'0'..=b'9' => {
                let digits = self.take_while(|b| b.is_ascii_digit());
                if self.peek().is_some_and(is_ident_byte) || self.peek() == Some(b'.') {
                    return None;
                }
                Some(Value::Int(digits))
            }
            b if b.is_ascii_alphabetic() || b == b'_' => Some(Value::Str(self.take_while(is_ident_byte))),
            _ => None,
        }
    }

    fn take_while(&mut self, pred: impl Fn(u8) -> bool) -> String {
        let start = self.pos;
        while self.peek().is_some_and(&pred) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }
}

fn is_ident_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_'
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hanoi(moves: &[(u32, usize, usize)]) -> Vec<Move> {
        moves.iter().map(|&(d, f, t)| Move::Hanoi(HanoiMove::new(d, f, t))).collect()
    }

    fn river(moves: &[&[&str]]) -> Vec<Move> {
        moves.iter().map(|m| Move::River(RiverMove::new(m.iter().map(|s| s.parse::<Person>().unwrap())))).collect()
    }

    #[test]
    fn hanoi_examples() {
        let out = extract_hanoi_moves("...therefore moves = [[1,0,2],[2,0,1]]").unwrap();
        assert_eq!(out.moves, hanoi(&[(1, 0, 2), (2, 0, 1)]));
        assert_eq!(out.span, 21..38);

        let out = extract_hanoi_moves("I think [[1,0,2]] but final answer: ```moves = [[1,0,1]]```").unwrap();
        assert_eq!(out.moves, hanoi(&[(1, 0, 1)]));
        assert_eq!(out.diagnostics.len(), 1);

        assert_eq!(extract_hanoi_moves("I cannot solve this."), Err(ParseError::NoBlockFound));
        assert_eq!(extract_hanoi_moves("moves = []"), Err(ParseError::NoBlockFound));
    }

    #[test]
    fn hanoi_tolerance() {
        let text = "```python\nmoves = [\n  [1, 0, 2],\n  [2, 0, 1],\n]\n```";
        assert_eq!(extract_hanoi_moves(text).unwrap().moves, hanoi(&[(1, 0, 2), (2, 0, 1)]));
        // A trailing state dump is not a move list and does not shadow the answer.
        let text = "moves = [[1, 0, 2]]\nfinal state: [[3, 2], [], [1]]";
        let out = extract_hanoi_moves(text).unwrap();
        assert_eq!(out.moves, hanoi(&[(1, 0, 2)]));
        assert!(out.diagnostics[0].starts_with("skipped block"));
        // Out-of-range pegs are syntax-valid; the referee rejects them later.
        assert_eq!(extract_hanoi_moves("[[1, 0, 7]]").unwrap().moves, hanoi(&[(1, 0, 7)]));
    }

    #[test]
    fn hanoi_malformed() {
        assert!(matches!(extract_hanoi_moves("moves = [[1, 0]]"), Err(ParseError::MalformedTriple(_))));
        assert!(matches!(extract_hanoi_moves("moves = [[1, 0, 2.5]]"), Err(ParseError::NoBlockFound)));
        assert!(matches!(extract_hanoi_moves(r#"moves = [["1", 0, 2]]"#), Err(ParseError::MalformedTriple(_))));
        assert!(matches!(extract_hanoi_moves("moves = [[-1, 0, 2]]"), Err(ParseError::NoBlockFound)));
    }

    #[test]
    fn river_examples() {
        let out = extract_river_moves(r#"moves = [["A_1","a_1"],["A_1"]]"#).unwrap();
        assert_eq!(out.moves, river(&[&["A_1", "a_1"], &["A_1"]]));
        let out = extract_river_moves(r#"The plan: [["A_2", "a_2"]]"#).unwrap();
        assert_eq!(out.moves, river(&[&["A_2", "a_2"]]));
        let out = extract_river_moves("moves = [[A_1, a_1]]").unwrap();
        assert_eq!(out.moves, river(&[&["A_1", "a_1"]]));
        let out = extract_river_moves(r#"moves =[[" A_2", 'a_2'],]"#).unwrap();
        assert_eq!(out.moves, river(&[&["A_2", "a_2"]]));
    }

    #[test]
    fn river_errors() {
        assert!(matches!(extract_river_moves(r#"[["B_1"]]"#), Err(ParseError::UnknownPersonId(id)) if id == "B_1"));
        assert!(matches!(extract_river_moves("[[1, 2]]"), Err(ParseError::MalformedEntry(_))));
        assert!(matches!(extract_river_moves(r#"[["A_1", "A_1"]]"#), Err(ParseError::MalformedEntry(_))));
        assert_eq!(extract_river_moves("nothing here"), Err(ParseError::NoBlockFound));
        // Index beyond N is syntax-valid.
        assert_eq!(extract_river_moves(r#"[["A_9"]]"#).unwrap().moves, river(&[&["A_9"]]));
    }

    #[test]
    fn deep_nesting_is_bounded() {
        let text = "[".repeat(10_000);
        assert_eq!(extract_hanoi_moves(&text), Err(ParseError::NoBlockFound));
    }
}
