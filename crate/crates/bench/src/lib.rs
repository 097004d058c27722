//! Shared fixtures for the benchmarks.

use pbit_osc::graph::{Edge, Graph};

/// Erdos-Renyi graph with mean degree `degree` and +-1 weights, from a
/// 64-bit linear congruential stream so fixtures stay fixed across releases
/// of the RNG crates.
pub fn random_graph(n: usize, degree: f64, seed: u64) -> Graph {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let p = degree / (n - 1) as f64;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if next() < p {
                let w = if next() < 0.5 { 1.0 } else { -1.0 };
                edges.push(Edge { i, j, w });
            }
        }
    }
    Graph::new(format!("er{n}"), n, edges).expect("valid fixture")
}
