//! Criterion benchmarks for `lplab-core`; see `benches/`.
