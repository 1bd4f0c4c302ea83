use forge_core::corpus::{CorpusError, SplitError};
use forge_core::cosponsor::MatrixError;
use forge_core::ideology::IdeologyError;
use forge_core::oracle::OracleError;
use forge_core::prompt::PromptError;
use forge_core::quintuplet::QuintupletError;
use forge_core::semantic::SemanticError;
use forge_core::spectrum::SpectrumError;
use forge_core::stats::StatsError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage `{stage}` needs `{artifact}`, which is neither on disk nor produced earlier in this run (run `{producer}` first)")]
    MissingDependency {
        stage: &'static str,
        producer: &'static str,
        artifact: String,
    },
    #[error("stage `{stage}`: {path} changed since it was produced (recorded {recorded}, found {found}); rerun with --force to overwrite")]
    DigestMismatch {
        stage: &'static str,
        path: String,
        recorded: String,
        found: String,
    },
    #[error("config: {0}")]
    Config(String),
    #[error("unknown stage `{0}`")]
    UnknownStage(String),
    #[error("{0}")]
    Usage(String),
}

/// Exit code for an error: 2 when the inputs or configuration are at fault,
/// 3 for everything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        let validation = if let Some(e) = cause.downcast_ref::<CorpusError>() {
            !matches!(e, CorpusError::IoFailure { .. })
        } else if let Some(e) = cause.downcast_ref::<OracleError>() {
            oracle_validation(e)
        } else if let Some(e) = cause.downcast_ref::<PromptError>() {
            !matches!(e, PromptError::Io(_) | PromptError::TaggerUnavailable(_))
        } else if let Some(e) = cause.downcast_ref::<QuintupletError>() {
            match e {
                QuintupletError::Oracle(o) => oracle_validation(o),
                _ => true,
            }
        } else {
            cause.is::<PipelineError>()
                || cause.is::<SplitError>()
                || cause.is::<MatrixError>()
                || cause.is::<IdeologyError>()
                || cause.is::<SpectrumError>()
                || cause.is::<SemanticError>()
                || cause.is::<StatsError>()
                || cause.is::<toml::de::Error>()
        };
        if validation {
            return EXIT_VALIDATION;
        }
    }
    EXIT_RUNTIME
}

fn oracle_validation(e: &OracleError) -> bool {
    matches!(
        e,
        OracleError::Config(_)
            | OracleError::CacheFormat { .. }
            | OracleError::CacheMiss(..)
            | OracleError::EmbeddingMiss(_)
            | OracleError::DimMismatch { .. }
    )
}
