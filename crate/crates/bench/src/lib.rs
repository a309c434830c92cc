//! Shared fixtures for the benchmarks.

use smmt_core::netbench::{self, BenchEntry};
use smmt_core::Instance;

/// Encoded instances of a benchmark suite, in manifest order.
pub fn encoded(entries: &[BenchEntry]) -> Vec<(String, Instance)> {
    entries
        .iter()
        .map(|e| (e.name.clone(), netbench::encode(&netbench::generate(e.seed, e.params)).0))
        .collect()
}
