//! Benchmarks for the reduction chain live in `benches/chain.rs`.
