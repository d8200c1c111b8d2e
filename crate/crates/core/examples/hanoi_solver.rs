//! Solve Towers of Hanoi optimally and referee the result.
//!
//! cargo run --example hanoi_solver -- 4

use puzzlebench::hanoi::HanoiConfig;
use puzzlebench::puzzle::Puzzle;
use puzzlebench::solvers::hanoi_optimal;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: usize = std::env::args().nth(1).map_or(Ok(4), |a| a.parse())?;
    let config = HanoiConfig::new(n)?;
    let solution = hanoi_optimal(&config);
    println!("{n} disks: {} moves (2^{n} - 1 = {})", solution.length, (1u64 << n) - 1);

    let puzzle = Puzzle::Hanoi(config);
    let mut state = puzzle.initial_state();
    println!("{}\n", puzzle.render_state(&state));
    for (i, mv) in solution.moves.iter().enumerate().take(8) {
        state = puzzle.apply(&state, mv)?;
        println!("move {:>2} {mv}\n{}\n", i + 1, puzzle.render_state(&state));
    }
    let end = puzzle.replay(&solution.moves).map_err(|(i, e)| format!("move {}: {e}", i + 1))?;
    println!("goal reached: {}", puzzle.is_goal(&end));
    Ok(())
}
