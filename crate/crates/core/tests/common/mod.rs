#![allow(dead_code)]

use std::path::PathBuf;

use ihara_core::models::{sample_matching_model, sample_permutation_model};
use ihara_core::Graph;

pub const CORPUS: [&str; 9] = [
    "k4",
    "petersen",
    "bouquet_2_0",
    "bouquet_0_1",
    "bouquet_0_2",
    "bouquet_0_3",
    "bouquet_1_1",
    "joined_k5_blocks",
    "ring_k5_blocks",
];

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(format!("{name}.nbgraph"))
}

pub fn load(name: &str) -> Graph {
    let text = std::fs::read_to_string(data_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    text.parse().unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn corpus() -> Vec<(&'static str, Graph)> {
    CORPUS.iter().map(|&n| (n, load(n))).collect()
}

/// Random regular graph number `i` of a fixed family: |V| ≤ 40, d cycling
/// through 3, 4, 6.
pub fn random_regular(i: u64) -> Graph {
    let d = [3, 4, 6][(i % 3) as usize];
    let n = 2 + (ihara_core::models::mix64(i) % 39) as usize;
    if d == 3 {
        sample_matching_model(n & !1, 3, i).unwrap()
    } else {
        sample_permutation_model(n, d, i).unwrap()
    }
}

/// Closed strictly non-backtracking walks of length `k`, by brute force
/// over directed-edge sequences.
pub fn brute_force_closed_walks(g: &Graph, k: usize) -> u64 {
    let m = g.directed_edge_count();
    if k == 0 {
        return m as u64;
    }
    fn extend(g: &Graph, first: usize, last: usize, left: usize) -> u64 {
        let follows = |a: usize, b: usize| g.head(a) == g.tail(b) && g.opposite(a) != b;
        if left == 0 {
            return u64::from(follows(last, first));
        }
        (0..g.directed_edge_count())
            .filter(|&e| follows(last, e))
            .map(|e| extend(g, first, e, left - 1))
            .sum()
    }
    (0..m).map(|e| extend(g, e, e, k - 1)).sum()
}
