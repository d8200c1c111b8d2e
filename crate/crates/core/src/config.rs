//! Experiment files.
//!
//! A TOML (or JSON, by extension) file holds one or more `[[experiment]]`
//! entries. `n`, `k` and `p` take a number, a list, or a range string such
//! as `"3..10"` or `"2,10,100"`; each entry expands to the cartesian product.
//!
//! ```toml
//! templates_dir = "my-templates"   # optional
//!
//! [[experiment]]
//! puzzle = "hanoi"
//! n = "3..10"
//! protocol = "stepwise"
//! p = [5, 10, 20]
//! trials = 10
//! seed = 7
//! agent = "oracle"
//! ```
//!
//! Relative paths inside agent specs resolve against the file's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use crate::agents::AgentSpec;
use crate::error::ConfigError;
use crate::hanoi::HanoiConfig;
use crate::orchestrator::{ExperimentConfig, Protocol, DEFAULT_LOOP_THRESHOLD};
use crate::prompts::TemplateIds;
use crate::puzzle::{Puzzle, PuzzleKind};
use crate::river::{RiverConfig, SafetyScope};

pub const DEFAULT_TRIALS: usize = 10;

/// Parses `3`, `3..10` (inclusive), `3..=10` or comma-separated mixes of
/// these such as `2,10,100`.
pub fn parse_int_list(text: &str) -> Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let bad = || format!("cannot read {part:?} as a number or range");
        if let Some((a, b)) = part.split_once("..") {
            let b = b.strip_prefix('=').unwrap_or(b);
            let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntList(pub Vec<usize>);

impl<'de> Deserialize<'de> for IntList {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            One(usize),
            Many(Vec<usize>),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::One(n) => Ok(IntList(vec![n])),
            Raw::Many(v) if !v.is_empty() => Ok(IntList(v)),
            Raw::Many(_) => Err(serde::de::Error::custom("empty list")),
            Raw::Text(s) => parse_int_list(&s).map(IntList).map_err(serde::de::Error::custom),
        }
    }
}

/// An agent given either in short form (`"saboteur:3"`) or as a table.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentField(pub AgentSpec);

impl<'de> Deserialize<'de> for AgentField {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Short(String),
            Full(AgentSpec),
        }
        match Raw::deserialize(d)? {
            Raw::Short(s) => s.parse().map(AgentField).map_err(serde::de::Error::custom),
            Raw::Full(spec) => Ok(AgentField(spec)),
        }
    }
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_loop_threshold() -> usize {
    DEFAULT_LOOP_THRESHOLD
}

fn default_agent() -> AgentField {
    AgentField(AgentSpec::Oracle)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridEntry {
    pub puzzle: PuzzleKind,
    pub n: IntList,
    #[serde(default)]
    pub k: Option<IntList>,
    #[serde(default)]
    pub p: Option<IntList>,
    pub protocol: String,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_agent")]
    pub agent: AgentField,
    #[serde(default)]
    pub agent_b: Option<AgentField>,
    #[serde(default)]
    pub max_requests: Option<usize>,
    #[serde(default = "default_loop_threshold")]
    pub loop_threshold: usize,
    #[serde(default)]
    pub allow_unsolvable: bool,
    #[serde(default)]
    pub transcript_window: Option<usize>,
    #[serde(default)]
    pub safety_scope: SafetyScope,
    #[serde(default)]
    pub templates: TemplateIds,
}

impl GridEntry {
    /// Expands the entry in `n`, then `k`, then `p` order.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        let ks: Vec<Option<usize>> = match (self.puzzle, &self.k) {
            (PuzzleKind::Hanoi, None) => vec![None],
            (PuzzleKind::Hanoi, Some(_)) => return Err(ConfigError::Invalid("k applies to river only".into())),
            (PuzzleKind::River, Some(k)) => k.0.iter().copied().map(Some).collect(),
            (PuzzleKind::River, None) => return Err(ConfigError::Invalid("river experiments need k".into())),
        };
        let ps: Vec<Option<usize>> = match (self.protocol.as_str(), &self.p) {
            ("single", Some(_)) => return Err(ConfigError::Invalid("single-shot runs take no p".into())),
            (_, Some(p)) => p.0.iter().copied().map(Some).collect(),
            (_, None) => vec![None],
        };
        let mut out = Vec::new();
        for &n in &self.n.0 {
            for &k in &ks {
                let puzzle = match k {
                    None => Puzzle::Hanoi(HanoiConfig::new(n)?),
                    Some(k) => Puzzle::River(RiverConfig::with_scope(n, k, self.safety_scope)?),
                };
                for &p in &ps {
                    let config = ExperimentConfig {
                        puzzle,
                        protocol: Protocol::from_parts(&self.protocol, p)?,
                        trials: self.trials,
                        max_requests: self.max_requests,
                        loop_threshold: self.loop_threshold,
                        seed: self.seed,
                        agent: self.agent.0.clone(),
                        agent_b: self.agent_b.as_ref().map(|a| a.0.clone()),
                        templates: self.templates.clone(),
                        allow_unsolvable: self.allow_unsolvable,
                        transcript_window: self.transcript_window,
                    };
                    config.validate()?;
                    out.push(config);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub templates_dir: Option<PathBuf>,
    pub experiment: Vec<GridEntry>,
}

impl ExperimentFile {
    pub fn parse(text: &str, json: bool) -> Result<Self, ConfigError> {
        if json {
            serde_json::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e == "json");
        let mut file =
            Self::parse(&text, json).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        file.resolve_paths(base);
        Ok(file)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() {
                *p = base.join(&*p);
            }
        };
        if let Some(dir) = &mut self.templates_dir {
            fix(dir);
        }
        for entry in &mut self.experiment {
            for spec in std::iter::once(&mut entry.agent.0).chain(entry.agent_b.as_mut().map(|a| &mut a.0)) {
                match spec {
                    AgentSpec::Replay { transcript } => fix(transcript),
                    AgentSpec::Remote { endpoint, .. } => fix(endpoint),
                    _ => {}
                }
            }
        }
    }

    /// Every configuration in file order.
    pub fn expand(&self) -> Result<Vec<ExperimentConfig>, ConfigError> {
        let mut out = Vec::new();
        for entry in &self.experiment {
            out.extend(entry.expand()?);
        }
        Ok(out)
    }
}
