//! Access to the contradiction and embedding oracles.
//!
//! Contradiction probabilities come either from a cache file or from the
//! model service over HTTP. Both routes answer with the same symmetrized
//! value: the mean of the two premise/hypothesis directions, with a
//! statement never contradicting itself.

mod cache;
mod http;
mod precompute;

use std::collections::HashMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Statement;
use crate::semantic::EmbeddingVector;

pub use cache::{ContradictionCache, SYMMETRIZATION};
pub use http::{Directional, HealthReport, HttpOracle, NliProbs};
pub use precompute::{partial_path, precompute_cache};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no cached contradiction for pair ({0}, {1})")]
    CacheMiss(String, String),
    #[error("no cached embedding for text `{0}`")]
    EmbeddingMiss(String),
    #[error("oracle unreachable: {0}")]
    Unreachable(String),
    #[error("bad oracle response: {0}")]
    BadResponse(String),
    #[error("embedding dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("precompute stopped after {done} of {total} pairs; checkpoint at {checkpoint}")]
    PartialBatch {
        done: usize,
        total: usize,
        checkpoint: PathBuf,
        #[source]
        cause: Box<OracleError>,
    },
    #[error("cache file line {line}: {message}")]
    CacheFormat { line: usize, message: String },
    #[error("invalid oracle config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    CacheFile,
    Http,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    pub backend: Backend,
    pub endpoint: Option<String>,
    pub cache_path: Option<PathBuf>,
    pub embedding_cache_path: Option<PathBuf>,
    pub model_tag: String,
    pub batch_size: usize,
    pub timeout_ms: u64,
    pub retries: u32,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            backend: Backend::CacheFile,
            endpoint: None,
            cache_path: None,
            embedding_cache_path: None,
            model_tag: "roberta-large-mnli".into(),
            batch_size: 32,
            timeout_ms: 30_000,
            retries: 2,
        }
    }
}

impl OracleConfig {
    pub fn http(endpoint: impl Into<String>) -> Self {
        Self {
            backend: Backend::Http,
            endpoint: Some(endpoint.into()),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        if self.batch_size == 0 {
            return Err(OracleError::Config("batch_size must be at least 1".into()));
        }
        match (self.backend, &self.endpoint) {
            (Backend::Http, None) => {
                Err(OracleError::Config("http backend needs an endpoint".into()))
            }
            (Backend::CacheFile, Some(_)) => Err(OracleError::Config(
                "endpoint given for cache_file backend".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// Anything that can answer c(a, b) for two statement ids.
pub trait ContradictionLookup {
    fn contradiction(&self, a: &str, b: &str) -> Result<f64, OracleError>;
}

/// Dense symmetric contradiction matrix over a fixed id list.
#[derive(Debug, Clone, PartialEq)]
pub struct ContradictionMatrix {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    probs: Vec<f64>,
}

impl ContradictionMatrix {
    /// Fills every off-diagonal cell from `lookup`; the diagonal is zero.
    pub fn from_lookup<L: ContradictionLookup + ?Sized>(
        ids: &[String],
        lookup: &L,
    ) -> Result<Self, OracleError> {
        let n = ids.len();
        let mut probs = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let p = lookup.contradiction(&ids[i], &ids[j])?;
                probs[i * n + j] = p;
                probs[j * n + i] = p;
            }
        }
        Ok(Self::assemble(ids.to_vec(), probs))
    }

    /// Builds from a full row-major matrix, checking symmetry, range and the
    /// zero diagonal.
    pub fn from_dense(ids: Vec<String>, probs: Vec<f64>) -> Result<Self, OracleError> {
        let n = ids.len();
        if probs.len() != n * n {
            return Err(OracleError::BadResponse(format!(
                "expected {} cells",
                n * n
            )));
        }
        for i in 0..n {
            if probs[i * n + i] != 0.0 {
                return Err(OracleError::BadResponse(format!(
                    "nonzero diagonal at {}",
                    ids[i]
                )));
            }
            for j in 0..n {
                let p = probs[i * n + j];
                if !(0.0..=1.0).contains(&p) || p != probs[j * n + i] {
                    return Err(OracleError::BadResponse(format!(
                        "cell ({i},{j}) not a symmetric probability"
                    )));
                }
            }
        }
        Ok(Self::assemble(ids, probs))
    }

    fn assemble(ids: Vec<String>, probs: Vec<f64>) -> Self {
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();
        Self { ids, index, probs }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.len() + j]
    }

    /// Number of populated off-diagonal unordered pairs.
    pub fn populated_pairs(&self) -> usize {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.get(i, j) > 0.0)
            .count()
    }
}

impl ContradictionLookup for ContradictionMatrix {
    fn contradiction(&self, a: &str, b: &str) -> Result<f64, OracleError> {
        match (self.index_of(a), self.index_of(b)) {
            (Some(i), Some(j)) => Ok(self.get(i, j)),
            _ => Err(OracleError::CacheMiss(a.to_string(), b.to_string())),
        }
    }
}

/// One text and its embedding, the line format of an embedding cache file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextEmbedding {
    pub text: String,
    pub values: Vec<f64>,
}

impl crate::corpus::Record for TextEmbedding {
    fn unique_key(&self) -> Option<String> {
        Some(self.text.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if self.values.is_empty() {
            Some("values")
        } else {
            None
        }
    }
}

enum Route {
    Cache {
        contradictions: Option<ContradictionCache>,
        embeddings: HashMap<String, Vec<f64>>,
    },
    Http(HttpOracle),
}

/// Config-selected oracle.
pub struct Oracle {
    route: Route,
}

impl Oracle {
    pub fn from_config(cfg: &OracleConfig) -> Result<Self, OracleError> {
        cfg.validate()?;
        let route = match cfg.backend {
            Backend::Http => Route::Http(HttpOracle::new(cfg)?),
            Backend::CacheFile => {
                let contradictions = cfg
                    .cache_path
                    .as_ref()
                    .map(ContradictionCache::load)
                    .transpose()?;
                let embeddings = match &cfg.embedding_cache_path {
                    Some(p) => crate::corpus::load_jsonl::<TextEmbedding>(p)
                        .map_err(|e| {
                            let line = e.line().unwrap_or(0);
                            let text = e.to_string();
                            let message = text
                                .strip_prefix(&format!("line {line}: "))
                                .unwrap_or(&text)
                                .to_string();
                            OracleError::CacheFormat { line, message }
                        })?
                        .into_iter()
                        .map(|t| (t.text, t.values))
                        .collect(),
                    None => HashMap::new(),
                };
                Route::Cache {
                    contradictions,
                    embeddings,
                }
            }
        };
        Ok(Self { route })
    }

    pub fn from_cache(cache: ContradictionCache) -> Self {
        Self {
            route: Route::Cache {
                contradictions: Some(cache),
                embeddings: HashMap::new(),
            },
        }
    }

    pub fn contradiction(&self, a: &Statement, b: &Statement) -> Result<f64, OracleError> {
        if a.id == b.id {
            return Ok(0.0);
        }
        match &self.route {
            Route::Cache { contradictions, .. } => match contradictions {
                Some(c) => c.contradiction(&a.id, &b.id),
                None => Err(OracleError::CacheMiss(a.id.clone(), b.id.clone())),
            },
            Route::Http(h) => {
                let out = h.contradictions(&[(a.text.as_str(), b.text.as_str())])?;
                Ok(out[0].symmetrized())
            }
        }
    }

    /// One vector per text, in order, all of the same dimension.
    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, OracleError> {
        let vectors = match &self.route {
            Route::Http(h) => h.embed(texts)?,
            Route::Cache { embeddings, .. } => texts
                .iter()
                .map(|t| {
                    embeddings
                        .get(*t)
                        .cloned()
                        .ok_or_else(|| OracleError::EmbeddingMiss(t.to_string()))
                })
                .collect::<Result<_, _>>()?,
        };
        check_dims(&vectors, None)?;
        Ok(vectors)
    }

    pub fn embed_statements(
        &self,
        statements: &[Statement],
    ) -> Result<Vec<EmbeddingVector>, OracleError> {
        let texts: Vec<&str> = statements.iter().map(|s| s.text.as_str()).collect();
        Ok(self
            .embed(&texts)?
            .into_iter()
            .zip(statements)
            .map(|(values, s)| EmbeddingVector {
                statement_id: s.id.clone(),
                values,
            })
            .collect())
    }
}

pub(crate) fn check_dims(vectors: &[Vec<f64>], declared: Option<usize>) -> Result<(), OracleError> {
    let expected = declared.or_else(|| vectors.first().map(Vec::len));
    if let Some(expected) = expected {
        if let Some(v) = vectors.iter().find(|v| v.len() != expected) {
            return Err(OracleError::DimMismatch {
                expected,
                got: v.len(),
            });
        }
    }
    Ok(())
}
