//! Pipeline configuration, read from a TOML document.
//!
//! Relative paths are resolved against the directory holding the config
//! file. `FORGE_ORACLE_ENDPOINT` replaces `oracle.endpoint`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use forge_core::oracle::{Backend, OracleConfig};
use forge_core::semantic::{Linkage, DEFAULT_THRESHOLD};
use serde::{Deserialize, Serialize};

use crate::error::PipelineError;

pub const ENDPOINT_ENV: &str = "FORGE_ORACLE_ENDPOINT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub work_dir: PathBuf,
    pub inputs: Inputs,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub seeds: Seeds,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub optimizer: OptimizerLimits,
    #[serde(default)]
    pub anchors: Option<Anchors>,
    #[serde(default)]
    pub report: ReportOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub sponsorships: PathBuf,
    pub bills: PathBuf,
    pub statements: PathBuf,
    /// Simulated co-sponsorship votes of fine-tuned models.
    pub votes: Option<PathBuf>,
    /// Question/answer pairs for the QA task.
    pub qa: Option<PathBuf>,
    /// Party manifesto sentences for the cloze task.
    pub manifesto: Option<PathBuf>,
    /// Positioning test scores of fine-tuned models.
    pub positioning_scores: Option<PathBuf>,
    /// Rankings produced by fine-tuned models, compared against the
    /// reference rankings of the held-out quintuplets.
    pub model_rankings: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    pub map: u64,
    pub quintuplets: u64,
    pub split: u64,
    pub ranking: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub hac: f64,
    pub linkage: Linkage,
    pub k: usize,
    pub ratio: f64,
    pub alpha: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            hac: DEFAULT_THRESHOLD,
            linkage: Linkage::Average,
            k: 5,
            ratio: 0.8,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerLimits {
    pub max_iterations: usize,
    pub patience: usize,
}

impl Default for OptimizerLimits {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            patience: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchors {
    pub left: String,
    pub right: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportOptions {
    pub formats: Vec<ReportFormat>,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            formats: vec![ReportFormat::Json, ReportFormat::Csv],
        }
    }
}

impl PipelineConfig {
    /// Reads, resolves and validates a config file, then applies the
    /// endpoint override from the environment.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve(base);
        cfg.apply_env(std::env::var(ENDPOINT_ENV).ok());
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.work_dir);
        let i = &mut self.inputs;
        for p in [&mut i.sponsorships, &mut i.bills, &mut i.statements] {
            fix(p);
        }
        for p in [
            &mut i.votes,
            &mut i.qa,
            &mut i.manifesto,
            &mut i.positioning_scores,
            &mut i.model_rankings,
            &mut self.oracle.cache_path,
            &mut self.oracle.embedding_cache_path,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// An endpoint from the environment wins over the file. It only matters
    /// for the http backend; with cache files it is ignored.
    pub fn apply_env(&mut self, endpoint: Option<String>) {
        let Some(url) = endpoint.filter(|u| !u.trim().is_empty()) else {
            return;
        };
        if self.oracle.backend == Backend::Http {
            self.oracle.endpoint = Some(url);
        } else {
            log::warn!("{ENDPOINT_ENV} is set but the oracle backend is cache_file; ignoring it");
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.work_dir.as_os_str().is_empty() {
            return bad("work_dir is empty".into());
        }
        let i = &self.inputs;
        for (name, p) in [
            ("sponsorships", &i.sponsorships),
            ("bills", &i.bills),
            ("statements", &i.statements),
        ] {
            if p.as_os_str().is_empty() {
                return bad(format!("inputs.{name} is empty"));
            }
        }
        let t = &self.thresholds;
        if !(t.hac > 0.0 && t.hac <= 1.0) {
            return bad(format!("thresholds.hac = {} must lie in (0, 1]", t.hac));
        }
        if t.k != 5 {
            return bad(format!(
                "thresholds.k = {} but the spectrum has 5 positions",
                t.k
            ));
        }
        if !(t.ratio > 0.0 && t.ratio < 1.0) {
            return bad(format!("thresholds.ratio = {} must lie in (0, 1)", t.ratio));
        }
        if !(t.alpha > 0.0 && t.alpha < 1.0) {
            return bad(format!("thresholds.alpha = {} must lie in (0, 1)", t.alpha));
        }
        if self.optimizer.max_iterations == 0 || self.optimizer.patience == 0 {
            return bad("optimizer limits must be at least 1".into());
        }
        if let Some(a) = &self.anchors {
            if a.left.trim().is_empty() || a.right.trim().is_empty() || a.left == a.right {
                return bad("anchors need two distinct legislator ids".into());
            }
        }
        self.oracle
            .validate()
            .map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn anchor_pair(&self) -> Option<(&str, &str)> {
        self.anchors
            .as_ref()
            .map(|a| (a.left.as_str(), a.right.as_str()))
    }
}
