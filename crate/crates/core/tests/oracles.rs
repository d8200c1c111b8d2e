//! Values derived by oracles written here, independent of the library's
//! solvers, then frozen as tables.

use std::collections::{HashMap, VecDeque};

use puzzlebench::puzzle::{Move, Puzzle};
use puzzlebench::river::{RiverConfig, Role, SafetyScope};
use puzzlebench::solvers::{river_bfs, river_constructive, river_solvable, BfsOutcome};

/// Shortest River solution lengths for N = 1..=6 (columns) and k = 1..=4
/// (rows); `None` where the goal is unreachable.
const FROZEN: [[Option<usize>; 6]; 4] = [
    [None, None, None, None, None, None],
    [Some(1), Some(5), Some(11), None, None, None],
    [Some(1), Some(3), Some(5), Some(9), Some(11), None],
    [Some(1), Some(1), Some(3), Some(5), Some(7), Some(9)],
];

/// Bit `2i` is agent `i + 1`, bit `2i + 1` its actor.
fn safe(group: u128, n: usize) -> bool {
    let agents: Vec<bool> = (0..n).map(|i| group >> (2 * i) & 1 == 1).collect();
    if !agents.iter().any(|&a| a) {
        return true;
    }
    (0..n).all(|i| group >> (2 * i + 1) & 1 == 0 || agents[i])
}

/// Breadth-first search over (left-bank mask, boat on left).
fn oracle_length(n: usize, k: usize, boat_rule: bool) -> Option<usize> {
    let all = u128::MAX >> (128 - 2 * n);
    let start = (all, true);
    let mut dist = HashMap::from([(start, 0usize)]);
    let mut queue = VecDeque::from([start]);
    while let Some((left, boat_left)) = queue.pop_front() {
        let d = dist[&(left, boat_left)];
        if left == 0 {
            return Some(d);
        }
        let here = if boat_left { left } else { all & !left };
        let mut load = here;
        while load != 0 {
            if (load.count_ones() as usize) <= k && (!boat_rule || safe(load, n)) {
                let next_left = if boat_left { left & !load } else { left | load };
                if safe(next_left, n) && safe(all & !next_left, n) {
                    let next = (next_left, !boat_left);
                    if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(next) {
                        e.insert(d + 1);
                        queue.push_back(next);
                    }
                }
            }
            load = (load - 1) & here;
        }
    }
    None
}

fn mask_of(mv: &Move) -> u128 {
    let Move::River(m) = mv else { panic!("not a river move") };
    m.travelers
        .iter()
        .map(|p| {
            let bit = 2 * (p.couple - 1) + u32::from(p.role == Role::Actor);
            1u128 << bit
        })
        .sum()
}

/// Checks a crossing schedule against the rules as coded in this file.
fn oracle_accepts(n: usize, k: usize, moves: &[Move]) -> bool {
    let all = u128::MAX >> (128 - 2 * n);
    let (mut left, mut boat_left) = (all, true);
    for mv in moves {
        let load = mask_of(mv);
        let here = if boat_left { left } else { all & !left };
        if load == 0 || load & !here != 0 || load.count_ones() as usize > k || !safe(load, n) {
            return false;
        }
        left = if boat_left { left & !load } else { left | load };
        boat_left = !boat_left;
        if !safe(left, n) || !safe(all & !left, n) {
            return false;
        }
    }
    left == 0
}

#[test]
fn frozen_table_matches_the_oracle() {
    for k in 1..=4 {
        for n in 1..=6 {
            assert_eq!(oracle_length(n, k, true), FROZEN[k - 1][n - 1], "N={n} k={k}");
        }
    }
}

#[test]
fn boat_rule_does_not_change_shortest_lengths() {
    for k in 1..=4 {
        for n in 1..=6 {
            assert_eq!(oracle_length(n, k, false), FROZEN[k - 1][n - 1], "N={n} k={k}");
        }
    }
}

#[test]
fn library_search_matches_frozen_table() {
    for k in 1..=4 {
        for n in 1..=6 {
            for scope in [SafetyScope::BanksAndBoat, SafetyScope::BanksOnly] {
                let cfg = RiverConfig::with_scope(n, k, scope).unwrap();
                let got = match river_bfs(&cfg).unwrap() {
                    BfsOutcome::Solved(s) => {
                        assert!(oracle_accepts(n, k, &s.moves), "N={n} k={k}");
                        Some(s.length)
                    }
                    BfsOutcome::Unsolvable { .. } => None,
                };
                assert_eq!(got, FROZEN[k - 1][n - 1], "N={n} k={k} {scope:?}");
                assert_eq!(river_solvable(n, k).solvable, got.is_some(), "N={n} k={k}");
            }
        }
    }
}

#[test]
fn constructive_schedules_pass_the_oracle() {
    for k in 4..=6 {
        for n in 1..=60 {
            let s = river_constructive(&RiverConfig::new(n, k).unwrap()).unwrap();
            assert!(oracle_accepts(n, k, &s.moves), "N={n} k={k}");
            assert_eq!(s.length, if n == 1 { 1 } else { 2 * n - 3 }, "N={n} k={k}");
        }
    }
    let big = river_constructive(&RiverConfig::new(100, 4).unwrap()).unwrap();
    assert_eq!(big.length, 197);
    assert!(big.length <= 200);
    let puzzle = Puzzle::river(100, 4).unwrap();
    assert!(puzzle.is_goal(&puzzle.replay(&big.moves).unwrap()));
}

#[test]
fn three_seat_boats_stop_at_five_couples() {
    assert!(river_solvable(5, 3).solvable);
    assert!(!river_solvable(6, 3).solvable);
    assert!(river_solvable(100, 4).solvable);
}
