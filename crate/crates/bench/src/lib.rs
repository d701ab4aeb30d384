//! Criterion benchmarks for `qpf-core`; see `benches/kernels.rs`.
