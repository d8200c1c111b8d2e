//! Two agents alternate p-move blocks, seeing only the shared transcript.
//! The dialogue is recorded to a transcript file and replayed.
//!
//! cargo run --example agentic_dialogue

use std::sync::Arc;

use puzzlebench::agents::{Agent, OracleAgent, RecordingAgent, ReplayAgent, SaboteurAgent, TranscriptWriter};
use puzzlebench::orchestrator::{run_agentic, ExperimentConfig, Protocol};
use puzzlebench::puzzle::Puzzle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::new(Puzzle::hanoi(4)?, Protocol::Agentic { p: 5 }, 1);

    let dir = std::env::temp_dir().join(format!("puzzlebench-dialogue-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("dialogue.jsonl");
    let _ = std::fs::remove_file(&path);
    let recorder: Arc<dyn Agent> = Arc::new(RecordingAgent::new(OracleAgent::new(), TranscriptWriter::append(&path)?));
    let live = run_agentic(&config, Arc::clone(&recorder), recorder)?;
    for s in &live.substages {
        println!("turn {} {}: {}", s.turn, s.agent, s.response);
    }
    println!("outcome {:?} after {} requests\n", live.outcome, live.requests);

    let replayed =
        run_agentic(&config, Arc::new(ReplayAgent::from_file(&path)?), Arc::new(ReplayAgent::from_file(&path)?))?;
    println!("replayed outcome {:?}, same moves: {}", replayed.outcome, replayed.substages == live.substages);

    let sabotaged = run_agentic(&config, Arc::new(OracleAgent::new()), Arc::new(SaboteurAgent::new(2)))?;
    let f = sabotaged.failure.expect("the saboteur fails the trial");
    println!("\nsabotaged: {:?} at turn {} by {}: {}", sabotaged.outcome, f.turn, f.agent, f.message);
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
