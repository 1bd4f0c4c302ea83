//! Statistics for assessing ideological behaviour of models.

mod anova;
mod ptukey;
mod spearman;

pub use anova::{one_way_anova, tukey_hsd, AnovaResult, TukeyContrast};
pub use ptukey::{ptukey, qtukey};
pub use spearman::{
    aggregate_agreement, fractional_ranks, spearman_rho, Agreement, RankedList, SpearmanResult,
    Stars,
};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("ranked lists belong to different quintuplets (`{0}` vs `{1}`)")]
    MismatchedQuintuplets(String, String),
    #[error("ranked lists do not cover the same statements")]
    MismatchedMembers,
    #[error("ranked list `{0}` is malformed: {1}")]
    MalformedList(String, &'static str),
    #[error("ranking of `{0}` is constant, so its correlation is undefined")]
    ConstantRanks(String),
    #[error("no quintuplet appears in both inputs")]
    NoOverlap,
    #[error("need at least {min} paired quintuplets, got {got}")]
    TooFewPairs { min: usize, got: usize },
    #[error("need at least two groups")]
    TooFewGroups,
    #[error("group `{0}` has fewer than two values")]
    TinyGroup(String),
    #[error("alpha must lie strictly between 0 and 1")]
    InvalidAlpha,
}
