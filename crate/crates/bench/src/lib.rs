//! Criterion benchmarks for lipext; see `benches/`.
