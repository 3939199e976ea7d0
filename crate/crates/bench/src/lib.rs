//! Criterion benchmarks for `oce-core`; see `benches/risk.rs`.
