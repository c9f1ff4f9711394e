//! Benchmark-only crate. See `benches/detectors.rs`.
