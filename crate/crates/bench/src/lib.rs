//! Criterion benchmarks for meshcond live under `benches/`.
