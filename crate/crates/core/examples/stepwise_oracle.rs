//! Stepwise resolution with the oracle: the harness asks for p moves at a
//! time from the current state until the goal is reached.
//!
//! cargo run --release --example stepwise_oracle

use puzzlebench::metrics::{aggregate_all, format_table, PerRequestMode};
use puzzlebench::orchestrator::{run_experiment, ExperimentConfig, Protocol};
use puzzlebench::puzzle::Puzzle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut trials = Vec::new();
    for n in 3..=8 {
        for p in [5, 10, 20] {
            let config = ExperimentConfig::new(Puzzle::hanoi(n)?, Protocol::Stepwise { p }, 10);
            let results = run_experiment(&config, 4)?;
            let expected = ((1usize << n) - 1).div_ceil(p);
            assert!(results.iter().all(|t| t.outcome.is_success() && t.requests == expected));
            trials.extend(results);
        }
    }
    print!("{}", format_table(&aggregate_all(&trials, PerRequestMode::PerTrial)?));

    let river = ExperimentConfig::new(Puzzle::river(5, 3)?, Protocol::Stepwise { p: 4 }, 1);
    let trial = &run_experiment(&river, 1)?[0];
    println!("\n{} in {} requests", trial.key, trial.requests);
    println!("first prompt:\n{}", trial.substages[0].prompt);
    Ok(())
}
