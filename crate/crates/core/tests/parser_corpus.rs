use std::fs;
use std::path::Path;

use puzzlebench::parser::{extract_moves, ParseError};
use puzzlebench::puzzle::{Move, PuzzleKind};
use serde::Deserialize;

#[derive(Deserialize)]
struct Expected {
    kind: PuzzleKind,
    #[serde(default)]
    moves: Option<serde_json::Value>,
    #[serde(default)]
    error: Option<String>,
}

fn error_name(e: &ParseError) -> &'static str {
    match e {
        ParseError::NoBlockFound => "NoBlockFound",
        ParseError::MalformedTriple(_) => "MalformedTriple",
        ParseError::UnknownPersonId(_) => "UnknownPersonId",
        ParseError::MalformedEntry(_) => "MalformedEntry",
    }
}

#[test]
fn fixture_corpus() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/parser");
    let mut cases: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "txt"))
        .collect();
    cases.sort();
    assert!(cases.len() >= 12);
    for input in cases {
        let expected: Expected =
            serde_json::from_str(&fs::read_to_string(input.with_extension("json")).unwrap()).unwrap();
        let text = fs::read_to_string(&input).unwrap();
        let name = input.file_stem().unwrap().to_string_lossy();
        match (extract_moves(expected.kind, &text), expected.moves, expected.error) {
            (Ok(out), Some(moves), None) => {
                let moves: Vec<Move> = serde_json::from_value(moves).unwrap();
                assert_eq!(out.moves, moves, "{name}");
                assert!(text[out.span.clone()].starts_with('['), "{name}");
            }
            (Err(e), None, Some(err)) => assert_eq!(error_name(&e), err, "{name}: {e}"),
            (got, _, _) => panic!("{name}: unexpected {got:?}"),
        }
    }
}
