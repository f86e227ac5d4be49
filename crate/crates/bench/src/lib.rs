//! Benchmarks live in `benches/`; run `cargo bench -p liquidbench-bench`.
