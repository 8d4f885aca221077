//! Benchmark-only crate. The measurements live in `benches/laboratory.rs`;
//! this library is an empty anchor so the package builds on its own.
