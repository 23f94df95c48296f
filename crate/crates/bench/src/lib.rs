//! Criterion benchmarks for `atma-core`; see `benches/atma.rs`.
