//! Pull the final move list out of free-form model output.
//!
//! cargo run --example parse_model_output

use puzzlebench::parser::{extract_hanoi_moves, extract_river_moves};
use puzzlebench::puzzle::format_moves;

const HANOI_REPLY: &str = "Let me think. A first attempt: [[1, 0, 1], [2, 0, 2]] but that strands disk 1.
Better:

```
moves = [[1, 0, 2], [2, 0, 1], [1, 2, 1], [3, 0, 2],
         [1, 1, 0], [2, 1, 2], [1, 0, 2]]
```";

const RIVER_REPLY: &str = "**Final answer**: moves = [['A_1', 'a_1'], [\"A_1\"], [A_1, A_2], [A_1], [A_1, a_1]]";

fn main() {
    let out = extract_hanoi_moves(HANOI_REPLY).expect("a move list is present");
    println!("hanoi: {} moves from bytes {:?}", out.moves.len(), out.span);
    println!("       {}", format_moves(&out.moves));
    for d in &out.diagnostics {
        println!("       note: {d}");
    }

    let out = extract_river_moves(RIVER_REPLY).expect("a move list is present");
    println!("river: {}", format_moves(&out.moves));

    match extract_hanoi_moves("I could not find a solution.") {
        Ok(_) => unreachable!(),
        Err(e) => println!("prose: {e}"),
    }
    match extract_hanoi_moves("moves = [[1, 0]]") {
        Ok(_) => unreachable!(),
        Err(e) => println!("short: {e}"),
    }
}
