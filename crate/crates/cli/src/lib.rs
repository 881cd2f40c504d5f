//! Library surface of the sweep runner: configuration parsing, presets,
//! manifest rendering and CSV emission. The binary in `main.rs` is a thin
//! wrapper around these.

pub mod config;
pub mod output;
