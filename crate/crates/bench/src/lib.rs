//! Benchmarks for the collocation library live in `benches/`.
