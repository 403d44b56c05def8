//! Benchmarks live in `benches/`; run them with `cargo bench -p helifb-bench`.
