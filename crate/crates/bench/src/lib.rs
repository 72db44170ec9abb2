//! Benchmarks live in `benches/`; run them with `cargo bench -p trial-error-bench`.
