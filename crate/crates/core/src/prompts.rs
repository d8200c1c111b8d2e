//! Prompt templates.
//!
//! Templates are plain text with `{name}` placeholders; `{{` and `}}` stand
//! for literal braces. A built-in set ships with the crate and a directory of
//! `*.txt` files can override or extend it, the file stem being the id.
//!
//! Placeholders bound by the harness:
//!
//! | name          | value                                                  |
//! |---------------|--------------------------------------------------------|
//! | `n`           | disks or couples                                       |
//! | `k`           | boat capacity (River only)                             |
//! | `p`           | moves requested per turn                               |
//! | `state`       | rendered current (or initial) state                    |
//! | `goal`        | rendered goal state                                    |
//! | `boat_rule`   | River clause extending the rule to the boat            |
//! | `speaker`     | agent label in dialogue (`Agent A` / `Agent B`)        |
//! | `counterpart` | the other agent's label                                |
//! | `last_moves`  | counterpart's latest applied block                     |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::puzzle::{Puzzle, PuzzleKind, PuzzleState};
use crate::river::SafetyScope;

pub type Bindings = BTreeMap<String, String>;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("UnknownTemplate: no template with id {0:?}")]
    UnknownTemplate(String),
    #[error("UnboundPlaceholder: {{{name}}} in template {template:?} has no binding")]
    UnboundPlaceholder { template: String, name: String },
    #[error("cannot read templates from {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

const BUILTIN: &[(&str, &str)] = &[
    ("hanoi_system", include_str!("../templates/hanoi_system.txt")),
    ("hanoi_single", include_str!("../templates/hanoi_single.txt")),
    ("hanoi_stepwise", include_str!("../templates/hanoi_stepwise.txt")),
    ("hanoi_agentic_start", include_str!("../templates/hanoi_agentic_start.txt")),
    ("hanoi_agentic_join", include_str!("../templates/hanoi_agentic_join.txt")),
    ("hanoi_agentic_turn", include_str!("../templates/hanoi_agentic_turn.txt")),
    ("river_system", include_str!("../templates/river_system.txt")),
    ("river_single", include_str!("../templates/river_single.txt")),
    ("river_stepwise", include_str!("../templates/river_stepwise.txt")),
    ("river_agentic_start", include_str!("../templates/river_agentic_start.txt")),
    ("river_agentic_join", include_str!("../templates/river_agentic_join.txt")),
    ("river_agentic_turn", include_str!("../templates/river_agentic_turn.txt")),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    templates: BTreeMap<String, String>,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        let templates = BUILTIN.iter().map(|(id, text)| (id.to_string(), text.to_string())).collect();
        TemplateSet { templates }
    }

    /// Built-in templates overlaid with every `*.txt` file in `dir`.
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let io = |source| PromptError::Io { path: dir.to_path_buf(), source };
        let mut set = Self::builtin();
        let mut paths: Vec<PathBuf> =
            fs::read_dir(dir).map_err(io)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>().map_err(io)?;
        paths.sort();
        for path in paths.into_iter().filter(|p| p.extension().is_some_and(|e| e == "txt")) {
            let Some(id) = path.file_stem().and_then(|s| s.to_str()).map(str::to_string) else { continue };
            let text = fs::read_to_string(&path).map_err(|source| PromptError::Io { path: path.clone(), source })?;
            set.templates.insert(id, text);
        }
        Ok(set)
    }

    pub fn insert(&mut self, id: impl Into<String>, text: impl Into<String>) {
        self.templates.insert(id.into(), text.into());
    }

    pub fn get(&self, id: &str) -> Option<&str> {
        self.templates.get(id).map(String::as_str)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }

    pub fn render(&self, id: &str, bindings: &Bindings) -> Result<String, PromptError> {
        let text = self.get(id).ok_or_else(|| PromptError::UnknownTemplate(id.to_string()))?;
        substitute(text, bindings).map_err(|name| PromptError::UnboundPlaceholder { template: id.to_string(), name })
    }
}

/// Renders `id` from the built-in set.
pub fn render_prompt(id: &str, bindings: &Bindings) -> Result<String, PromptError> {
    TemplateSet::builtin().render(id, bindings)
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Replaces `{name}` placeholders. A brace that does not open a well-formed
/// placeholder is copied through.
fn substitute(text: &str, bindings: &Bindings) -> Result<String, String> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(pos) = rest.find(['{', '}']) {
        out.push_str(&rest[..pos]);
        let tail = &rest[pos..];
        if tail.starts_with("{{") || tail.starts_with("}}") {
            out.push_str(&tail[..1]);
            rest = &tail[2..];
            continue;
        }
        if tail.starts_with('{') {
            if let Some(end) = tail.find('}') {
                let name = &tail[1..end];
                if is_ident(name) {
                    let value = bindings.get(name).ok_or_else(|| name.to_string())?;
                    out.push_str(value);
                    rest = &tail[end + 1..];
                    continue;
                }
            }
        }
        out.push_str(&tail[..1]);
        rest = &tail[1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// The prompt slots a protocol fills.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptRole {
    System,
    Single,
    Stepwise,
    /// First turn of the opening agent.
    AgenticStart,
    /// First turn of the second agent: initial configuration plus the
    /// opening block.
    AgenticJoin,
    AgenticTurn,
}

impl PromptRole {
    fn suffix(self) -> &'static str {
        match self {
            PromptRole::System => "system",
            PromptRole::Single => "single",
            PromptRole::Stepwise => "stepwise",
            PromptRole::AgenticStart => "agentic_start",
            PromptRole::AgenticJoin => "agentic_join",
            PromptRole::AgenticTurn => "agentic_turn",
        }
    }
}

/// Template ids per role. Unset roles fall back to `<puzzle>_<role>`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateIds {
    pub system: Option<String>,
    pub single: Option<String>,
    pub stepwise: Option<String>,
    pub agentic_start: Option<String>,
    pub agentic_join: Option<String>,
    pub agentic_turn: Option<String>,
}

impl TemplateIds {
    pub fn resolve(&self, kind: PuzzleKind, role: PromptRole) -> String {
        let explicit = match role {
            PromptRole::System => &self.system,
            PromptRole::Single => &self.single,
            PromptRole::Stepwise => &self.stepwise,
            PromptRole::AgenticStart => &self.agentic_start,
            PromptRole::AgenticJoin => &self.agentic_join,
            PromptRole::AgenticTurn => &self.agentic_turn,
        };
        explicit.clone().unwrap_or_else(|| format!("{}_{}", kind.as_str(), role.suffix()))
    }
}

/// Puzzle-derived bindings: `n`, `k` and `boat_rule` for River, `state` and
/// `goal`, plus `p` when given.
pub fn puzzle_bindings(puzzle: &Puzzle, state: &PuzzleState, p: Option<usize>) -> Bindings {
    let mut b = Bindings::new();
    b.insert("n".into(), puzzle.n().to_string());
    if let Puzzle::River(cfg) = puzzle {
        b.insert("k".into(), cfg.boat_capacity().to_string());
        let rule = match cfg.safety_scope() {
            SafetyScope::BanksAndBoat => ", including while riding the boat,",
            SafetyScope::BanksOnly => "",
        };
        b.insert("boat_rule".into(), rule.into());
    }
    b.insert("state".into(), puzzle.render_state(state));
    b.insert("goal".into(), puzzle.render_state(&puzzle.goal_state()));
    if let Some(p) = p {
        b.insert("p".into(), p.to_string());
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stepwise_hanoi_prompt() {
        let puzzle = Puzzle::hanoi(3).unwrap();
        let b = puzzle_bindings(&puzzle, &puzzle.initial_state(), Some(5));
        let text = render_prompt("hanoi_stepwise", &b).unwrap();
        assert!(text.contains("Peg 0: [3, 2, 1]"));
        assert!(text.contains("next 5 moves"));
        assert_eq!(text, render_prompt("hanoi_stepwise", &b).unwrap());
    }

    #[test]
    fn unbound_and_unknown() {
        let puzzle = Puzzle::hanoi(3).unwrap();
        let b = puzzle_bindings(&puzzle, &puzzle.initial_state(), Some(5));
        let err = render_prompt("river_single", &b).unwrap_err();
        assert!(matches!(err, PromptError::UnboundPlaceholder { ref name, .. } if name == "k"));
        assert!(matches!(render_prompt("nope", &b), Err(PromptError::UnknownTemplate(_))));
    }

    #[test]
    fn every_builtin_renders_with_full_bindings() {
        for puzzle in [Puzzle::hanoi(4).unwrap(), Puzzle::river(3, 2).unwrap()] {
            let mut b = puzzle_bindings(&puzzle, &puzzle.initial_state(), Some(4));
            for (k, v) in [("speaker", "Agent A"), ("counterpart", "Agent B"), ("last_moves", "[]")] {
                b.insert(k.into(), v.into());
            }
            let ids = TemplateIds::default();
            for role in [
                PromptRole::System,
                PromptRole::Single,
                PromptRole::Stepwise,
                PromptRole::AgenticStart,
                PromptRole::AgenticJoin,
                PromptRole::AgenticTurn,
            ] {
                let text = render_prompt(&ids.resolve(puzzle.kind(), role), &b).unwrap();
                assert!(!text.contains("{"), "{text}");
            }
        }
    }

    #[test]
    fn escapes_and_stray_braces() {
        let b = Bindings::from([("x".to_string(), "1".to_string())]);
        assert_eq!(substitute("{{x}} {x} { } {a b}", &b).unwrap(), "{x} 1 { } {a b}");
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("hanoi_single.txt"), "solve {n}").unwrap();
        fs::write(dir.path().join("custom.txt"), "hi").unwrap();
        let set = TemplateSet::from_dir(dir.path()).unwrap();
        assert_eq!(set.get("hanoi_single"), Some("solve {n}"));
        assert_eq!(set.get("custom"), Some("hi"));
        assert!(set.get("river_system").is_some());
    }

    #[test]
    fn river_prompt_states_boat_rule() {
        let puzzle = Puzzle::river(2, 2).unwrap();
        let b = puzzle_bindings(&puzzle, &puzzle.initial_state(), None);
        let text = render_prompt("river_single", &b).unwrap();
        assert!(text.contains("including while riding the boat"));
        assert!(text.contains("holding only 2 people"));
    }

    #[test]
    fn system_examples_are_valid_solutions() {
        use crate::parser::extract_moves;
        let hanoi = Puzzle::hanoi(3).unwrap();
        let moves = extract_moves(
            hanoi.kind(),
            render_prompt("hanoi_system", &puzzle_bindings(&hanoi, &hanoi.initial_state(), None)).unwrap().as_str(),
        )
        .unwrap()
        .moves;
        assert!(hanoi.is_goal(&hanoi.replay(&moves).unwrap()));
        let river = Puzzle::river(2, 2).unwrap();
        let text = render_prompt("river_system", &Bindings::new()).unwrap();
        let moves = extract_moves(river.kind(), &text).unwrap().moves;
        assert!(river.is_goal(&river.replay(&moves).unwrap()));
    }
}
