//! Benchmark fixtures live in the benches directory.
