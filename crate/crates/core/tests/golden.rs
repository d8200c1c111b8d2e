//! Record a run, replay it, and compare against the checked-in outputs.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use puzzlebench::agents::{Agent, RandomLegalAgent, RecordingAgent, ReplayAgent, TranscriptWriter};
use puzzlebench::metrics::{aggregate_all, read_trials_jsonl, write_aggregates, write_trials_jsonl, PerRequestMode};
use puzzlebench::orchestrator::{Experiment, ExperimentConfig, Protocol, TrialResult};
use puzzlebench::prompts::TemplateSet;
use puzzlebench::puzzle::Puzzle;

fn golden(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden").join(name)
}

fn config(n: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Puzzle::hanoi(n).unwrap(), Protocol::Stepwise { p: 4 }, 4);
    cfg.seed = 7;
    cfg
}

fn run_with(agent: Arc<dyn Agent>) -> Vec<TrialResult> {
    let mut trials = Vec::new();
    for n in [3, 4] {
        let exp = Experiment::new(config(n), Arc::clone(&agent), None, TemplateSet::builtin()).unwrap();
        trials.extend(exp.run(2).unwrap());
    }
    trials
}

fn csv_of(trials: &[TrialResult]) -> String {
    let stats = aggregate_all(trials, PerRequestMode::PerTrial).unwrap();
    let mut buf = Vec::new();
    write_aggregates(&mut buf, &stats).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn recorded_run_replays_to_the_golden_csv() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("transcript.jsonl");
    let recorder = RecordingAgent::new(RandomLegalAgent, TranscriptWriter::append(&transcript).unwrap());
    let live = run_with(Arc::new(recorder));

    let want = fs::read_to_string(golden("aggregates.csv")).unwrap();
    assert_eq!(csv_of(&live), want);

    let replayed = run_with(Arc::new(ReplayAgent::from_file(&transcript).unwrap().with_name("random")));
    assert_eq!(csv_of(&replayed), want);
    assert_eq!(replayed, live);
}

#[test]
fn golden_trials_round_trip_losslessly() {
    let trials = read_trials_jsonl(&golden("trials.jsonl")).unwrap();
    assert_eq!(trials.len(), 8);
    assert_eq!(csv_of(&trials), fs::read_to_string(golden("aggregates.csv")).unwrap());

    let dir = tempfile::tempdir().unwrap();
    let copy = dir.path().join("trials.jsonl");
    write_trials_jsonl(&trials, &copy).unwrap();
    assert_eq!(fs::read(&copy).unwrap(), fs::read(golden("trials.jsonl")).unwrap());
    assert_eq!(read_trials_jsonl(&copy).unwrap(), trials);
}

#[test]
fn live_run_matches_golden_trials() {
    let live = run_with(Arc::new(RandomLegalAgent));
    assert_eq!(live, read_trials_jsonl(&golden("trials.jsonl")).unwrap());
}
