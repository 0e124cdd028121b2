//! Criterion benchmarks for polytok live under `benches/`; run them with
//! `cargo bench -p polytok-bench`. Inputs come from `polytok_core::synth`.
