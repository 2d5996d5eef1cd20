//! Shared setup for the criterion benchmarks.

use fairdiv_core::generate::{generate, Family};
use fairdiv_core::Instance;

/// Deterministic instance used across benchmark groups.
pub fn bench_instance(n: usize, m: usize, v_max: i64, seed: u64) -> Instance {
    generate(&Family::Random { n, m, v_max }, seed).expect("benchmark dimensions are valid")
}
