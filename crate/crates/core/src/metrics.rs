//! Aggregate statistics over trial results, and the artifact files.
//!
//! `aggregates.csv` has one row per configuration key with columns
//!
//! ```text
//! puzzle,N,k,p,protocol,agent,trials,successes,success_rate,
//! mean_total_tokens,std_total_tokens,mean_tokens_per_request,
//! cause_illegal,cause_format,cause_budget,cause_loop,cause_transport
//! ```
//!
//! `k` is empty for Hanoi and `p` is empty for single-shot runs.
//! `std_total_tokens` is the population standard deviation over trial totals.
//! `mean_tokens_per_request` divides each trial's total by its request count
//! and averages those ratios; trials that made no request are left out of
//! it. Failed trials count in every token statistic.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::orchestrator::{ConfigKey, FailureCause, TrialResult};
use crate::puzzle::PuzzleKind;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("EmptyInput: no trials to aggregate")]
    EmptyInput,
    #[error("MixedConfig: expected {expected}, found {found}")]
    MixedConfig { expected: String, found: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}:{line}: {source}")]
    Json { path: PathBuf, line: usize, source: serde_json::Error },
}

/// How `mean_tokens_per_request` is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum PerRequestMode {
    /// Mean over trials of total / requests.
    #[default]
    PerTrial,
    /// Sum of all tokens over sum of all requests.
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub key: ConfigKey,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_total_tokens: f64,
    pub std_total_tokens: f64,
    pub mean_tokens_per_request: f64,
    pub causes: BTreeMap<FailureCause, usize>,
}

impl AggregateStats {
    pub fn cause_count(&self, cause: FailureCause) -> usize {
        self.causes.get(&cause).copied().unwrap_or(0)
    }
}

pub fn aggregate(trials: &[TrialResult], key: &ConfigKey) -> Result<AggregateStats, MetricsError> {
    aggregate_with(trials, key, PerRequestMode::PerTrial)
}

pub fn aggregate_with(
    trials: &[TrialResult],
    key: &ConfigKey,
    mode: PerRequestMode,
) -> Result<AggregateStats, MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if let Some(t) = trials.iter().find(|t| &t.key != key) {
        return Err(MetricsError::MixedConfig { expected: key.to_string(), found: t.key.to_string() });
    }
    let n = trials.len() as f64;
    let successes = trials.iter().filter(|t| t.outcome.is_success()).count();
    let totals: Vec<f64> = trials.iter().map(|t| t.usage.total_tokens as f64).collect();
    let mean = totals.iter().sum::<f64>() / n;
    let var = totals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let per_request = match mode {
        PerRequestMode::PerTrial => {
            let ratios: Vec<f64> = trials
                .iter()
                .filter(|t| t.requests > 0)
                .map(|t| t.usage.total_tokens as f64 / t.requests as f64)
                .collect();
            if ratios.is_empty() {
                0.0
            } else {
                ratios.iter().sum::<f64>() / ratios.len() as f64
            }
        }
        PerRequestMode::Pooled => {
            let requests: usize = trials.iter().map(|t| t.requests).sum();
            if requests == 0 {
                0.0
            } else {
                totals.iter().sum::<f64>() / requests as f64
            }
        }
    };
    let mut causes = BTreeMap::new();
    for cause in trials.iter().filter_map(|t| t.outcome.cause()) {
        *causes.entry(cause).or_insert(0) += 1;
    }
    Ok(AggregateStats {
        key: key.clone(),
        trials: trials.len(),
        successes,
        success_rate: successes as f64 / n,
        mean_total_tokens: mean,
        std_total_tokens: var.sqrt(),
        mean_tokens_per_request: per_request,
        causes,
    })
}

/// Groups trials by key and aggregates each group, in key order.
pub fn aggregate_all(trials: &[TrialResult], mode: PerRequestMode) -> Result<Vec<AggregateStats>, MetricsError> {
    if trials.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut groups: BTreeMap<&ConfigKey, Vec<TrialResult>> = BTreeMap::new();
    for t in trials {
        groups.entry(&t.key).or_default().push(t.clone());
    }
    groups.into_iter().map(|(key, group)| aggregate_with(&group, key, mode)).collect()
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    puzzle: PuzzleKind,
    #[serde(rename = "N")]
    n: usize,
    k: Option<usize>,
    p: Option<usize>,
    protocol: String,
    agent: String,
    trials: usize,
    successes: usize,
    success_rate: f64,
    mean_total_tokens: f64,
    std_total_tokens: f64,
    mean_tokens_per_request: f64,
    cause_illegal: usize,
    cause_format: usize,
    cause_budget: usize,
    cause_loop: usize,
    cause_transport: usize,
}

impl From<&AggregateStats> for CsvRow {
    fn from(s: &AggregateStats) -> Self {
        CsvRow {
            puzzle: s.key.puzzle,
            n: s.key.n,
            k: s.key.k,
            p: s.key.p,
            protocol: s.key.protocol.clone(),
            agent: s.key.agent.clone(),
            trials: s.trials,
            successes: s.successes,
            success_rate: s.success_rate,
            mean_total_tokens: s.mean_total_tokens,
            std_total_tokens: s.std_total_tokens,
            mean_tokens_per_request: s.mean_tokens_per_request,
            cause_illegal: s.cause_count(FailureCause::IllegalMove),
            cause_format: s.cause_count(FailureCause::FormatError),
            cause_budget: s.cause_count(FailureCause::RequestBudgetExhausted),
            cause_loop: s.cause_count(FailureCause::LoopDetected),
            cause_transport: s.cause_count(FailureCause::TransportFailure),
        }
    }
}

impl From<CsvRow> for AggregateStats {
    fn from(r: CsvRow) -> Self {
        let causes = [
            (FailureCause::IllegalMove, r.cause_illegal),
            (FailureCause::FormatError, r.cause_format),
            (FailureCause::RequestBudgetExhausted, r.cause_budget),
            (FailureCause::LoopDetected, r.cause_loop),
            (FailureCause::TransportFailure, r.cause_transport),
        ]
        .into_iter()
        .filter(|&(_, c)| c > 0)
        .collect();
        AggregateStats {
            key: ConfigKey { puzzle: r.puzzle, n: r.n, k: r.k, p: r.p, protocol: r.protocol, agent: r.agent },
            trials: r.trials,
            successes: r.successes,
            success_rate: r.success_rate,
            mean_total_tokens: r.mean_total_tokens,
            std_total_tokens: r.std_total_tokens,
            mean_tokens_per_request: r.mean_tokens_per_request,
            causes,
        }
    }
}

pub const CSV_COLUMNS: [&str; 17] = [
    "puzzle",
    "N",
    "k",
    "p",
    "protocol",
    "agent",
    "trials",
    "successes",
    "success_rate",
    "mean_total_tokens",
    "std_total_tokens",
    "mean_tokens_per_request",
    "cause_illegal",
    "cause_format",
    "cause_budget",
    "cause_loop",
    "cause_transport",
];

/// Writes the header even when `stats` is empty.
pub fn write_aggregates<W: Write>(out: W, stats: &[AggregateStats]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for s in stats {
        w.serialize(CsvRow::from(s))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregates_csv(stats: &[AggregateStats], path: &Path) -> Result<(), MetricsError> {
    let file = File::create(path).map_err(|source| MetricsError::Io { path: path.into(), source })?;
    write_aggregates(file, stats).map_err(|source| MetricsError::Csv { path: path.into(), source })
}

pub fn read_aggregates_csv(path: &Path) -> Result<Vec<AggregateStats>, MetricsError> {
    let csv_err = |source| MetricsError::Csv { path: path.into(), source };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize::<CsvRow>().map(|row| row.map(AggregateStats::from).map_err(csv_err)).collect()
}

pub fn write_trials_jsonl(trials: &[TrialResult], path: &Path) -> Result<(), MetricsError> {
    let io = |source| MetricsError::Io { path: path.into(), source };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for t in trials {
        let line =
            serde_json::to_string(t).map_err(|source| MetricsError::Json { path: path.into(), line: 0, source })?;
        writeln!(out, "{line}").map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Reads one trial per line; blank lines are skipped.
pub fn read_trials_jsonl(path: &Path) -> Result<Vec<TrialResult>, MetricsError> {
    let io = |source| MetricsError::Io { path: path.into(), source };
    let reader = BufReader::new(File::open(path).map_err(io)?);
    let mut trials = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let trial = serde_json::from_str(&line).map_err(|source| MetricsError::Json {
            path: path.into(),
            line: i + 1,
            source,
        })?;
        trials.push(trial);
    }
    Ok(trials)
}

/// Fixed-width summary for terminals.
pub fn format_table(stats: &[AggregateStats]) -> String {
    let header = ["config", "trials", "success", "tokens mean", "tokens std", "tokens/req", "failures"];
    let rows: Vec<[String; 7]> = stats
        .iter()
        .map(|s| {
            let failures: Vec<String> = s.causes.iter().map(|(c, n)| format!("{c}={n}")).collect();
            [
                s.key.to_string(),
                s.trials.to_string(),
                format!("{:.2}", s.success_rate),
                format!("{:.1}", s.mean_total_tokens),
                format!("{:.1}", s.std_total_tokens),
                format!("{:.1}", s.mean_tokens_per_request),
                if failures.is_empty() { "-".into() } else { failures.join(" ") },
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let padded: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header);
    for row in &rows {
        line(&row.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}
