//! Benchmark crate; see `benches/core_ops.rs`.
