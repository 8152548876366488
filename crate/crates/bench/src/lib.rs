//! Criterion benchmarks for the watermass pipeline stages; see `benches/`.
