//! Closed-form River solvability next to exhaustive search, and the
//! constructive schedule for a large instance.
//!
//! cargo run --release --example river_solvability

use puzzlebench::puzzle::Puzzle;
use puzzlebench::river::RiverConfig;
use puzzlebench::solvers::{river_bfs, river_constructive, river_solvable, BfsOutcome};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>3} {:>3}  {:<10} {:<8} shortest", "N", "k", "rule", "search");
    for k in 1..=4 {
        for n in 1..=6 {
            let verdict = river_solvable(n, k);
            let (search, len) = match river_bfs(&RiverConfig::new(n, k)?)? {
                BfsOutcome::Solved(s) => ("solved", s.length.to_string()),
                BfsOutcome::Unsolvable { .. } => ("none", "-".to_string()),
            };
            let rule = if verdict.solvable { "solvable" } else { "unsolvable" };
            println!("{n:>3} {k:>3}  {rule:<10} {search:<8} {len}");
        }
    }

    let big = RiverConfig::new(100, 4)?;
    let schedule = river_constructive(&big)?;
    let puzzle = Puzzle::River(big);
    let end = puzzle.replay(&schedule.moves).map_err(|(i, e)| format!("crossing {}: {e}", i + 1))?;
    println!("\nN=100 k=4: {} crossings, goal reached: {}", schedule.length, puzzle.is_goal(&end));
    println!("{}", river_solvable(6, 3).explain(6, 3));
    Ok(())
}
