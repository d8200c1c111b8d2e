use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    Agent, AgentError, CannedAgent, ChatAgent, EndpointConfig, OracleAgent, RandomLegalAgent, RecordingAgent,
    ReplayAgent, RequestGate, SaboteurAgent, TranscriptWriter,
};

/// Declarative agent binding, as written in experiment files or on the
/// command line (`oracle`, `random`, `prose`, `saboteur:3`, `canned:<text>`,
/// `replay:<file>`, `remote:<endpoint file>`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AgentSpec {
    Oracle,
    Random,
    Prose,
    Saboteur {
        fail_at: usize,
    },
    Canned {
        text: String,
    },
    Replay {
        transcript: PathBuf,
    },
    Remote {
        endpoint: PathBuf,
        #[serde(default)]
        model: Option<String>,
    },
}

impl AgentSpec {
    /// Instantiates the agent. Remote agents built with the same `gate` share
    /// its concurrency cap.
    pub fn build(&self, gate: &Arc<RequestGate>) -> Result<Arc<dyn Agent>, AgentError> {
        Ok(match self {
            AgentSpec::Oracle => Arc::new(OracleAgent::new()),
            AgentSpec::Random => Arc::new(RandomLegalAgent),
            AgentSpec::Prose => Arc::new(CannedAgent::prose()),
            AgentSpec::Saboteur { fail_at } => Arc::new(SaboteurAgent::new(*fail_at)),
            AgentSpec::Canned { text } => Arc::new(CannedAgent::new(text.clone())),
            AgentSpec::Replay { transcript } => Arc::new(
                ReplayAgent::from_file(transcript)
                    .map_err(|e| AgentError::Config(format!("{}: {e}", transcript.display())))?,
            ),
            AgentSpec::Remote { endpoint, model } => {
                let mut config = EndpointConfig::load(endpoint)?;
                if let Some(model) = model {
                    config.model = model.clone();
                }
                let transcript = config.transcript.clone();
                let agent = ChatAgent::connect(config)?.with_gate(Arc::clone(gate));
                match transcript {
                    Some(path) => {
                        let writer = TranscriptWriter::append(&path)
                            .map_err(|e| AgentError::Config(format!("{}: {e}", path.display())))?;
                        Arc::new(RecordingAgent::new(agent, writer))
                    }
                    None => Arc::new(agent),
                }
            }
        })
    }

    pub fn is_remote(&self) -> bool {
        matches!(self, AgentSpec::Remote { .. })
    }
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (head, arg) = match s.split_once([':', '@']) {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        match (head, arg) {
            ("oracle", None) => Ok(AgentSpec::Oracle),
            ("random", None) => Ok(AgentSpec::Random),
            ("prose", None) => Ok(AgentSpec::Prose),
            ("saboteur", Some(n)) => n
                .parse()
                .ok()
                .filter(|&n| n >= 1)
                .map(|fail_at| AgentSpec::Saboteur { fail_at })
                .ok_or_else(|| format!("saboteur needs a turn >= 1, got {n:?}")),
            ("canned", Some(text)) => Ok(AgentSpec::Canned { text: text.to_string() }),
            ("replay", Some(path)) => Ok(AgentSpec::Replay { transcript: path.into() }),
            ("remote", arg) => Ok(AgentSpec::Remote { endpoint: arg.unwrap_or("").into(), model: None }),
            _ => Err(format!(
                "unknown agent {s:?}; expected oracle, random, prose, saboteur:<turn>, canned:<text>, replay:<file> or remote[:<endpoint file>]"
            )),
        }
    }
}
