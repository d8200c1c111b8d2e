//! Transcript files: one JSON exchange per line, written while recording and
//! read back to replay a trial without the original agent.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{Agent, AgentContext, AgentError, AgentResponse, TokenUsage};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub sent_ms: u64,
    pub received_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptRecord {
    pub trial_id: String,
    pub turn: usize,
    pub request: serde_json::Value,
    pub response_text: String,
    pub usage: TokenUsage,
    #[serde(default)]
    pub timestamps: Timestamps,
}

pub fn read_transcript(path: &Path) -> std::io::Result<Vec<TranscriptRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(std::io::ErrorKind::InvalidData, format!("{}:{}: {e}", path.display(), i + 1))
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Appends transcript records; safe to share between concurrent trials.
pub struct TranscriptWriter {
    out: Mutex<BufWriter<File>>,
}

impl TranscriptWriter {
    pub fn append(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(TranscriptWriter { out: Mutex::new(BufWriter::new(file)) })
    }

    pub fn write(&self, record: &TranscriptRecord) -> std::io::Result<()> {
        let mut out = self.out.lock().expect("transcript writer poisoned");
        serde_json::to_writer(&mut *out, record)?;
        out.write_all(b"\n")?;
        out.flush()
    }
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

/// Wraps any agent and logs each exchange to a transcript file.
pub struct RecordingAgent<A> {
    inner: A,
    writer: TranscriptWriter,
}

impl<A: Agent> RecordingAgent<A> {
    pub fn new(inner: A, writer: TranscriptWriter) -> Self {
        RecordingAgent { inner, writer }
    }
}

impl<A: Agent> Agent for RecordingAgent<A> {
    fn name(&self) -> String {
        self.inner.name()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let sent_ms = now_ms();
        let response = self.inner.respond(ctx)?;
        let record = TranscriptRecord {
            trial_id: ctx.trial_id.clone(),
            turn: ctx.turn,
            request: json!({
                "puzzle": ctx.task.puzzle,
                "moves_requested": ctx.task.moves_requested,
                "speaker": ctx.speaker,
                "system": ctx.system_text,
                "user": ctx.user_text,
                "transcript_len": ctx.transcript.len(),
            }),
            response_text: response.text.clone(),
            usage: response.usage,
            timestamps: Timestamps { sent_ms, received_ms: now_ms() },
        };
        if let Err(e) = self.writer.write(&record) {
            log::warn!("could not write transcript record for {} turn {}: {e}", ctx.trial_id, ctx.turn);
        }
        Ok(response)
    }
}

/// Plays back recorded responses by `(trial_id, turn)`. A recording holding a
/// single trial is served for any trial id, so one captured dialogue can be
/// replayed under a fresh experiment.
pub struct ReplayAgent {
    records: BTreeMap<(String, usize), TranscriptRecord>,
    single_trial: Option<String>,
    name: String,
}

impl ReplayAgent {
    pub fn new(records: Vec<TranscriptRecord>) -> Self {
        let trials: BTreeSet<String> = records.iter().map(|r| r.trial_id.clone()).collect();
        let single_trial = if trials.len() == 1 { trials.into_iter().next() } else { None };
        let records = records.into_iter().map(|r| ((r.trial_id.clone(), r.turn), r)).collect();
        ReplayAgent { records, single_trial, name: "replay".into() }
    }

    /// Reports `name` instead of `replay`, so a replayed run keeps the
    /// trial ids and config keys of the recorded one.
    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        read_transcript(path).map(Self::new)
    }

    fn lookup(&self, trial_id: &str, turn: usize) -> Option<&TranscriptRecord> {
        self.records.get(&(trial_id.to_string(), turn)).or_else(|| {
            let only = self.single_trial.as_ref()?;
            self.records.get(&(only.clone(), turn))
        })
    }
}

impl Agent for ReplayAgent {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn respond(&self, ctx: &AgentContext) -> Result<AgentResponse, AgentError> {
        let record = self
            .lookup(&ctx.trial_id, ctx.turn)
            .ok_or_else(|| AgentError::Exhausted { trial_id: ctx.trial_id.clone(), turn: ctx.turn })?;
        Ok(AgentResponse {
            text: record.response_text.clone(),
            usage: record.usage,
            latency: Duration::ZERO,
            provider_meta: BTreeMap::from([("usage".to_string(), "recorded".to_string())]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{test_context, CannedAgent};
    use crate::puzzle::Puzzle;

    fn record(trial: &str, turn: usize, text: &str) -> TranscriptRecord {
        TranscriptRecord {
            trial_id: trial.into(),
            turn,
            request: json!({}),
            response_text: text.into(),
            usage: TokenUsage::new(10, turn as u64),
            timestamps: Timestamps::default(),
        }
    }

    #[test]
    fn replays_in_order_and_runs_out() {
        let agent = ReplayAgent::new(vec![record("x", 1, "first"), record("x", 2, "second")]);
        let mut ctx = test_context(Puzzle::hanoi(3).unwrap(), 1, Some(1));
        assert_eq!(agent.respond(&ctx).unwrap().text, "first");
        ctx.turn = 2;
        let r = agent.respond(&ctx).unwrap();
        assert_eq!((r.text.as_str(), r.usage), ("second", TokenUsage::new(10, 2)));
        ctx.turn = 3;
        assert!(matches!(agent.respond(&ctx), Err(AgentError::Exhausted { turn: 3, .. })));
    }

    #[test]
    fn multi_trial_recordings_are_keyed() {
        let agent = ReplayAgent::new(vec![record("a", 1, "for a"), record("b", 1, "for b")]);
        let mut ctx = test_context(Puzzle::hanoi(3).unwrap(), 1, Some(1));
        ctx.trial_id = "b".into();
        assert_eq!(agent.respond(&ctx).unwrap().text, "for b");
        ctx.trial_id = "c".into();
        assert!(agent.respond(&ctx).is_err());
    }

    #[test]
    fn record_then_replay() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let rec = RecordingAgent::new(CannedAgent::new("hello there"), TranscriptWriter::append(&path).unwrap());
        let ctx = test_context(Puzzle::hanoi(3).unwrap(), 1, Some(1));
        let live = rec.respond(&ctx).unwrap();
        let replayed = ReplayAgent::from_file(&path).unwrap().respond(&ctx).unwrap();
        assert_eq!(replayed.text, live.text);
        assert_eq!(replayed.usage, live.usage);
    }

    #[test]
    fn bad_line_names_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        std::fs::write(&path, "{}\n").unwrap();
        let err = read_transcript(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"));
    }
}
