//! Blocking client for the model service.
//!
//! `POST /v1/contradiction`
//! request `{"model_tag": .., "pairs": [{"premise": .., "hypothesis": ..}]}`,
//! response `{"results": [{"forward": {"entail", "neutral", "contradict"}, "reverse": {..}}]}`
//! where `reverse` swaps premise and hypothesis.
//!
//! `POST /v1/embed` request `{"texts": [..]}`, response `{"vectors": [[..]], "dim": n}`.
//!
//! `GET /v1/health` response `{"status": "ok", "models": {..}, "dims": {..}}`.

use std::collections::BTreeMap;
use std::thread;
use std::time::Duration;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{check_dims, OracleConfig, OracleError};

const SIMPLEX_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NliProbs {
    pub entail: f64,
    pub neutral: f64,
    pub contradict: f64,
}

impl NliProbs {
    fn check(&self) -> Result<(), OracleError> {
        let parts = [self.entail, self.neutral, self.contradict];
        if parts.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(OracleError::BadResponse(format!(
                "probability outside [0, 1]: {self:?}"
            )));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(OracleError::BadResponse(format!(
                "probabilities sum to {sum}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Directional {
    pub forward: NliProbs,
    pub reverse: NliProbs,
}

impl Directional {
    pub fn symmetrized(&self) -> f64 {
        (self.forward.contradict + self.reverse.contradict) / 2.0
    }
}

#[derive(Serialize)]
struct PairBody<'a> {
    premise: &'a str,
    hypothesis: &'a str,
}

#[derive(Serialize)]
struct ContradictionRequest<'a> {
    model_tag: &'a str,
    pairs: Vec<PairBody<'a>>,
}

#[derive(Deserialize)]
struct ContradictionResponse {
    results: Vec<Directional>,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f64>>,
    dim: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HealthReport {
    pub status: String,
    #[serde(default)]
    pub models: BTreeMap<String, String>,
    #[serde(default)]
    pub dims: BTreeMap<String, usize>,
}

pub struct HttpOracle {
    agent: ureq::Agent,
    base: String,
    model_tag: String,
    batch_size: usize,
    retries: u32,
}

enum Failure {
    Retry(OracleError),
    Fatal(OracleError),
}

impl HttpOracle {
    pub fn new(cfg: &OracleConfig) -> Result<Self, OracleError> {
        let endpoint = cfg
            .endpoint
            .clone()
            .ok_or_else(|| OracleError::Config("http backend needs an endpoint".into()))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(Self {
            agent,
            base: endpoint.trim_end_matches('/').to_string(),
            model_tag: cfg.model_tag.clone(),
            batch_size: cfg.batch_size.max(1),
            retries: cfg.retries,
        })
    }

    pub fn model_tag(&self) -> &str {
        &self.model_tag
    }

    pub fn health(&self) -> Result<HealthReport, OracleError> {
        self.with_retries(|| {
            let resp = self.agent.get(format!("{}/v1/health", self.base)).call();
            decode(resp)
        })
    }

    /// Both directions for every pair, in request order. Pairs are sent in
    /// chunks of `batch_size`.
    pub fn contradictions(&self, pairs: &[(&str, &str)]) -> Result<Vec<Directional>, OracleError> {
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.batch_size) {
            out.extend(self.contradiction_batch(chunk)?);
        }
        Ok(out)
    }

    pub(crate) fn contradiction_batch(
        &self,
        chunk: &[(&str, &str)],
    ) -> Result<Vec<Directional>, OracleError> {
        let body = ContradictionRequest {
            model_tag: &self.model_tag,
            pairs: chunk
                .iter()
                .map(|(p, h)| PairBody {
                    premise: p,
                    hypothesis: h,
                })
                .collect(),
        };
        let resp: ContradictionResponse = self.with_retries(|| {
            let resp = self
                .agent
                .post(format!("{}/v1/contradiction", self.base))
                .send_json(&body);
            decode(resp)
        })?;
        if resp.results.len() != chunk.len() {
            return Err(OracleError::BadResponse(format!(
                "{} results for {} pairs",
                resp.results.len(),
                chunk.len()
            )));
        }
        for r in &resp.results {
            r.forward.check()?;
            r.reverse.check()?;
        }
        Ok(resp.results)
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, OracleError> {
        let mut out = Vec::with_capacity(texts.len());
        let mut dim = None;
        for chunk in texts.chunks(self.batch_size) {
            let resp: EmbedResponse = self.with_retries(|| {
                let resp = self
                    .agent
                    .post(format!("{}/v1/embed", self.base))
                    .send_json(EmbedRequest { texts: chunk });
                decode(resp)
            })?;
            if resp.vectors.len() != chunk.len() {
                return Err(OracleError::BadResponse(format!(
                    "{} vectors for {} texts",
                    resp.vectors.len(),
                    chunk.len()
                )));
            }
            if let Some(d) = dim.filter(|d| *d != resp.dim) {
                return Err(OracleError::DimMismatch {
                    expected: d,
                    got: resp.dim,
                });
            }
            dim = Some(resp.dim);
            check_dims(&resp.vectors, Some(resp.dim))?;
            out.extend(resp.vectors);
        }
        Ok(out)
    }

    fn with_retries<T>(&self, mut f: impl FnMut() -> Result<T, Failure>) -> Result<T, OracleError> {
        let mut attempt = 0;
        loop {
            match f() {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(e)) if attempt >= self.retries => return Err(e),
                Err(Failure::Retry(e)) => {
                    attempt += 1;
                    log::warn!(
                        "oracle request failed ({e}); retry {attempt} of {}",
                        self.retries
                    );
                    thread::sleep(Duration::from_millis(25 * u64::from(attempt)));
                }
            }
        }
    }
}

fn decode<T: DeserializeOwned>(
    resp: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
) -> Result<T, Failure> {
    let mut resp = resp.map_err(|e| Failure::Retry(OracleError::Unreachable(e.to_string())))?;
    let status = resp.status().as_u16();
    if status >= 500 {
        return Err(Failure::Retry(OracleError::Unreachable(format!(
            "status {status}"
        ))));
    }
    if status != 200 {
        let detail = resp.body_mut().read_to_string().unwrap_or_default();
        return Err(Failure::Fatal(OracleError::BadResponse(format!(
            "status {status}: {detail}"
        ))));
    }
    resp.body_mut()
        .read_json::<T>()
        .map_err(|e| Failure::Fatal(OracleError::BadResponse(e.to_string())))
}
