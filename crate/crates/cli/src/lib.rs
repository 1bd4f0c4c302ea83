//! Pipeline driver for the `forge` command.

pub mod config;
pub mod error;
pub mod manifest;
pub mod ops;
pub mod pipeline;
pub mod reports;
pub mod synth;
