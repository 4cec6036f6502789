//! Benchmark-only crate; the criterion suites live in `benches/`.
