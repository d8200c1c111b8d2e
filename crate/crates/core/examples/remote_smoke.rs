//! One stepwise trial against an OpenAI-compatible chat endpoint.
//!
//! cargo run --example remote_smoke -- endpoint.toml [N] [p]
//!
//! The endpoint file names the environment variable holding the API key:
//!
//! ```toml
//! base_url = "https://api.example.com/v1"
//! model = "some-model"
//! api_key_env = "EXAMPLE_API_KEY"
//! transcript = "smoke.jsonl"
//! ```

use std::sync::Arc;

use puzzlebench::agents::{ChatAgent, EndpointConfig, RecordingAgent, TranscriptWriter};
use puzzlebench::orchestrator::{run_stepwise, ExperimentConfig, Protocol};
use puzzlebench::puzzle::Puzzle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let Some(endpoint) = args.next() else {
        eprintln!("usage: remote_smoke <endpoint.toml> [N] [p]");
        return Ok(());
    };
    let n: usize = args.next().map_or(Ok(3), |a| a.parse())?;
    let p: usize = args.next().map_or(Ok(5), |a| a.parse())?;

    let config = EndpointConfig::load(endpoint.as_ref())?;
    let transcript = config.transcript.clone();
    let agent = ChatAgent::connect(config)?;
    let experiment = ExperimentConfig::new(Puzzle::hanoi(n)?, Protocol::Stepwise { p }, 1);
    let trial = match transcript {
        Some(path) => {
            run_stepwise(&experiment, Arc::new(RecordingAgent::new(agent, TranscriptWriter::append(&path)?)))?
        }
        None => run_stepwise(&experiment, Arc::new(agent))?,
    };
    println!(
        "{:?}: {} moves, {} requests, {} tokens",
        trial.outcome, trial.moves_executed, trial.requests, trial.usage.total_tokens
    );
    if let Some(f) = &trial.failure {
        println!("turn {}: {}", f.turn, f.message);
    }
    Ok(())
}
