//! Toolkit for building and assessing nuanced political-ideology datasets.
//!
//! The pipeline runs from co-sponsorship records to ideology scores and a
//! five-position spectrum mapping, from mapped statements to optimized
//! statement quintuplets and ChatML training files, and finally through the
//! statistics used to assess ideologically fine-tuned models.

pub mod corpus;
pub mod cosponsor;
pub mod exec;
pub mod ideology;
pub mod oracle;
pub mod prompt;
pub mod quintuplet;
pub mod semantic;
pub mod spectrum;
pub mod stats;

pub use corpus::PositionLabel;
pub use exec::Execution;
