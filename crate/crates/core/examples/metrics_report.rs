//! Run a small grid with several baseline agents and write the artifacts
//! consumed by plotting scripts.
//!
//! cargo run --release --example metrics_report -- out-dir

use std::path::PathBuf;

use puzzlebench::agents::AgentSpec;
use puzzlebench::metrics::{
    aggregate_all, format_table, read_aggregates_csv, write_aggregates_csv, write_trials_jsonl, PerRequestMode,
};
use puzzlebench::orchestrator::{run_experiment, ExperimentConfig, Protocol};
use puzzlebench::puzzle::Puzzle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map_or_else(|| std::env::temp_dir().join("puzzlebench-report"), PathBuf::from);
    std::fs::create_dir_all(&out)?;

    let mut trials = Vec::new();
    for agent in [AgentSpec::Oracle, AgentSpec::Random, AgentSpec::Saboteur { fail_at: 2 }, AgentSpec::Prose] {
        for n in [3, 5, 7] {
            let mut config = ExperimentConfig::new(Puzzle::hanoi(n)?, Protocol::Stepwise { p: 5 }, 10);
            config.agent = agent.clone();
            config.seed = 7;
            trials.extend(run_experiment(&config, 4)?);
        }
    }
    let stats = aggregate_all(&trials, PerRequestMode::PerTrial)?;
    print!("{}", format_table(&stats));

    write_trials_jsonl(&trials, &out.join("trials.jsonl"))?;
    let csv = out.join("aggregates.csv");
    write_aggregates_csv(&stats, &csv)?;
    assert_eq!(read_aggregates_csv(&csv)?, stats);
    println!("\nwrote {}", csv.display());
    Ok(())
}
