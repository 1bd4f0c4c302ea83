//! Stage sequencing with run manifests.
//!
//! Stages always run in pipeline order. A stage is skipped as a cache hit
//! when the previous manifest recorded the same parameters and input
//! digests and its outputs still carry the recorded digests. An output
//! edited since it was produced is a `DigestMismatch` unless `force` is set.
//!
//! Artifacts live under `work_dir` with fixed names:
//!
//! | stage         | writes                                                        |
//! |---------------|---------------------------------------------------------------|
//! | ingest        | `ingest/{sponsorships,bills,statements,votes}.jsonl`          |
//! | matrix        | `matrix.csv`                                                  |
//! | score         | `scores.jsonl`                                                |
//! | map           | `mapping.json`, `statements_mapped.jsonl`                     |
//! | cluster       | `embeddings.jsonl`, `clusters.jsonl`                          |
//! | quintuplets   | `quintuplets.jsonl`, `reports/contradiction_by_distance.json` |
//! | rankset       | `ranked.jsonl`                                                |
//! | split         | `ranked_train.jsonl`, `ranked_eval.jsonl`                     |
//! | emit-training | `training/*.jsonl`, `inference/*.jsonl`                       |
//! | plan          | `stage_plan.json`                                             |
//! | eval          | `reports/agreement.jsonl`, `reports/positioning.jsonl`, ...   |

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::Context;
use forge_core::corpus::{write_jsonl, Bill, RecordKind, ScoreSample, Statement, VoteRecord};
use forge_core::cosponsor::incorporate_agent_votes;
use forge_core::ideology::IdeologyScore;
use forge_core::oracle::{Backend, ContradictionCache};
use forge_core::prompt::{emit_stage_plan, ChatRecord, Task};
use forge_core::quintuplet::{contradiction_by_distance, OptimizerConfig, Quintuplet};
use forge_core::semantic::{EmbeddingVector, SemanticCluster};
use forge_core::spectrum::{SpectrumMapping, DEFAULT_RESTARTS};
use forge_core::stats::RankedList;
use forge_core::{Execution, PositionLabel};
use serde::Serialize;
use serde_json::json;

use crate::config::{PipelineConfig, ReportFormat};
use crate::error::PipelineError;
use crate::manifest::{
    digest_bytes, FileDigest, RunManifest, StageRecord, StageStatus, MANIFEST_FILE,
};
use crate::ops::{self, ManifestoSentence, QaPair};
use crate::reports;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Matrix,
    Score,
    Map,
    Cluster,
    Quintuplets,
    Rankset,
    Split,
    EmitTraining,
    Plan,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 11] = [
        Self::Ingest,
        Self::Matrix,
        Self::Score,
        Self::Map,
        Self::Cluster,
        Self::Quintuplets,
        Self::Rankset,
        Self::Split,
        Self::EmitTraining,
        Self::Plan,
        Self::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Ingest => "ingest",
            Self::Matrix => "matrix",
            Self::Score => "score",
            Self::Map => "map",
            Self::Cluster => "cluster",
            Self::Quintuplets => "quintuplets",
            Self::Rankset => "rankset",
            Self::Split => "split",
            Self::EmitTraining => "emit-training",
            Self::Plan => "plan",
            Self::Eval => "eval",
        }
    }

    /// Parses a comma-separated stage list.
    pub fn parse_list(s: &str) -> Result<Vec<Stage>, PipelineError> {
        s.split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(Stage::from_str)
            .collect()
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = PipelineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| PipelineError::UnknownStage(s.to_string()))
    }
}

/// Paths of the pipeline artifacts inside a work directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }
}

pub const SPONSORSHIPS: &str = "ingest/sponsorships.jsonl";
pub const BILLS: &str = "ingest/bills.jsonl";
pub const STATEMENTS: &str = "ingest/statements.jsonl";
pub const VOTES: &str = "ingest/votes.jsonl";
pub const MATRIX: &str = "matrix.csv";
pub const SCORES: &str = "scores.jsonl";
pub const MAPPING: &str = "mapping.json";
pub const MAPPED: &str = "statements_mapped.jsonl";
pub const EMBEDDINGS: &str = "embeddings.jsonl";
pub const CLUSTERS: &str = "clusters.jsonl";
pub const QUINTUPLETS: &str = "quintuplets.jsonl";
pub const BY_DISTANCE: &str = "reports/contradiction_by_distance.json";
pub const RANKED: &str = "ranked.jsonl";
pub const RANKED_TRAIN: &str = "ranked_train.jsonl";
pub const RANKED_EVAL: &str = "ranked_eval.jsonl";
pub const TRAIN_RANKING: &str = "training/ranking.jsonl";
pub const TRAIN_BILL: &str = "training/bill.jsonl";
pub const TRAIN_QA: &str = "training/qa.jsonl";
pub const TRAIN_CLOZE: &str = "training/cloze.jsonl";
pub const INFER_RANKING: &str = "inference/ranking.jsonl";
pub const INFER_VOTE: &str = "inference/bill_vote.jsonl";
pub const PLAN: &str = "stage_plan.json";
pub const AGREEMENT: &str = "reports/agreement.jsonl";
pub const AGREEMENT_CSV: &str = "reports/agreement.csv";
pub const POSITIONING: &str = "reports/positioning.jsonl";
pub const TUKEY_CSV: &str = "reports/tukey.csv";
pub const AGENTS: &str = "reports/agents.jsonl";

enum Input {
    /// Produced by a pipeline stage, relative to the work directory.
    Artifact(&'static str, Stage),
    /// A file named in the config.
    External(PathBuf),
}

struct StageSpec {
    inputs: Vec<Input>,
    outputs: Vec<&'static str>,
    seed: Option<u64>,
    params: serde_json::Value,
}

fn spec(stage: Stage, cfg: &PipelineConfig) -> Result<StageSpec, PipelineError> {
    use Input::{Artifact, External};
    let i = &cfg.inputs;
    let t = &cfg.thresholds;
    let mut s = StageSpec {
        inputs: Vec::new(),
        outputs: Vec::new(),
        seed: None,
        params: json!({}),
    };
    match stage {
        Stage::Ingest => {
            s.inputs = vec![
                External(i.sponsorships.clone()),
                External(i.bills.clone()),
                External(i.statements.clone()),
            ];
            s.outputs = vec![SPONSORSHIPS, BILLS, STATEMENTS];
            if let Some(v) = &i.votes {
                s.inputs.push(External(v.clone()));
                s.outputs.push(VOTES);
            }
        }
        Stage::Matrix => {
            s.inputs = vec![Artifact(SPONSORSHIPS, Stage::Ingest)];
            s.outputs = vec![MATRIX];
        }
        Stage::Score => {
            s.inputs = vec![Artifact(MATRIX, Stage::Matrix)];
            s.outputs = vec![SCORES];
            s.params = json!({ "anchors": cfg.anchors });
        }
        Stage::Map => {
            s.inputs = vec![
                Artifact(SCORES, Stage::Score),
                Artifact(STATEMENTS, Stage::Ingest),
            ];
            s.outputs = vec![MAPPING, MAPPED];
            s.seed = Some(cfg.seeds.map);
            s.params = json!({ "k": t.k, "restarts": DEFAULT_RESTARTS });
        }
        Stage::Cluster => {
            s.inputs = vec![Artifact(MAPPED, Stage::Map)];
            if cfg.oracle.backend == Backend::CacheFile {
                let p = cfg.oracle.embedding_cache_path.clone().ok_or_else(|| {
                    PipelineError::Config(
                        "cluster needs oracle.embedding_cache_path with the cache_file backend"
                            .into(),
                    )
                })?;
                s.inputs.push(External(p));
            }
            s.outputs = vec![EMBEDDINGS, CLUSTERS];
            s.params = json!({
                "hac": t.hac,
                "linkage": t.linkage,
                "backend": cfg.oracle.backend,
                "model_tag": cfg.oracle.model_tag,
            });
        }
        Stage::Quintuplets | Stage::Rankset => {
            let cache = cfg.oracle.cache_path.clone().ok_or_else(|| {
                PipelineError::Config(format!(
                    "{stage} needs oracle.cache_path; build it with `forge oracle precompute`"
                ))
            })?;
            if stage == Stage::Quintuplets {
                s.inputs = vec![Artifact(CLUSTERS, Stage::Cluster), External(cache)];
                s.outputs = vec![QUINTUPLETS, BY_DISTANCE];
                s.seed = Some(cfg.seeds.quintuplets);
                s.params = json!({ "optimizer": cfg.optimizer });
            } else {
                s.inputs = vec![Artifact(QUINTUPLETS, Stage::Quintuplets), External(cache)];
                s.outputs = vec![RANKED];
            }
        }
        Stage::Split => {
            s.inputs = vec![Artifact(RANKED, Stage::Rankset)];
            s.outputs = vec![RANKED_TRAIN, RANKED_EVAL];
            s.seed = Some(cfg.seeds.split);
            s.params = json!({ "ratio": t.ratio });
        }
        Stage::EmitTraining => {
            s.inputs = vec![
                Artifact(RANKED_TRAIN, Stage::Split),
                Artifact(RANKED_EVAL, Stage::Split),
                Artifact(MAPPED, Stage::Map),
                Artifact(BILLS, Stage::Ingest),
            ];
            s.outputs = vec![TRAIN_RANKING, TRAIN_BILL, INFER_RANKING, INFER_VOTE];
            if let Some(p) = &i.qa {
                s.inputs.push(External(p.clone()));
                s.outputs.push(TRAIN_QA);
            }
            if let Some(p) = &i.manifesto {
                s.inputs.push(External(p.clone()));
                s.outputs.push(TRAIN_CLOZE);
            }
            s.seed = Some(cfg.seeds.ranking);
        }
        Stage::Plan => {
            s.inputs = [TRAIN_CLOZE, TRAIN_BILL, TRAIN_QA, TRAIN_RANKING]
                .into_iter()
                .map(|p| Artifact(p, Stage::EmitTraining))
                .collect();
            s.outputs = vec![PLAN];
        }
        Stage::Eval => {
            s.inputs = vec![Artifact(RANKED_EVAL, Stage::Split)];
            s.outputs = vec![AGREEMENT];
            if let Some(p) = &i.model_rankings {
                s.inputs.push(External(p.clone()));
            }
            let csv = cfg.report.formats.contains(&ReportFormat::Csv);
            if csv {
                s.outputs.push(AGREEMENT_CSV);
            }
            if let Some(p) = &i.positioning_scores {
                s.inputs.push(External(p.clone()));
                s.outputs.push(POSITIONING);
                if csv {
                    s.outputs.push(TUKEY_CSV);
                }
            }
            if i.votes.is_some() {
                s.inputs.extend([
                    Artifact(VOTES, Stage::Ingest),
                    Artifact(BILLS, Stage::Ingest),
                    Artifact(MATRIX, Stage::Matrix),
                    Artifact(MAPPING, Stage::Map),
                ]);
                s.outputs.push(AGENTS);
            }
            s.params =
                json!({ "alpha": t.alpha, "anchors": cfg.anchors, "formats": cfg.report.formats });
        }
    }
    Ok(s)
}

#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub exec: Execution,
    /// Re-run stages whose outputs were edited instead of failing.
    pub force: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            force: false,
        }
    }
}

/// Digest of the config with `work_dir` left out, so two runs of the same
/// configuration in different directories record the same value.
pub fn config_digest(cfg: &PipelineConfig) -> String {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(o) = v.as_object_mut() {
        o.remove("work_dir");
    }
    digest_bytes(v.to_string().as_bytes())
}

fn display_path(layout: &Layout, p: &Path) -> PathBuf {
    p.strip_prefix(&layout.root)
        .map(Path::to_path_buf)
        .unwrap_or_else(|_| p.to_path_buf())
}

fn digests(layout: &Layout, paths: &[PathBuf]) -> anyhow::Result<Vec<FileDigest>> {
    paths
        .iter()
        .map(|p| {
            let mut d = FileDigest::of(p)?;
            d.path = display_path(layout, p);
            Ok(d)
        })
        .collect()
}

/// Runs `stages` (put into pipeline order) and writes `manifest.json` in the
/// work directory. Records of stages not in this run are carried over from
/// the previous manifest.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    stages: &[Stage],
    opts: RunOptions,
) -> anyhow::Result<RunManifest> {
    let mut order: Vec<Stage> = stages.to_vec();
    order.sort();
    order.dedup();
    let layout = Layout::new(&cfg.work_dir);

    let specs: Vec<(Stage, StageSpec)> = order
        .iter()
        .map(|&st| spec(st, cfg).map(|s| (st, s)))
        .collect::<Result<_, _>>()?;
    for (k, (stage, s)) in specs.iter().enumerate() {
        for input in &s.inputs {
            match input {
                Input::External(p) => {
                    if !p.exists() {
                        return Err(PipelineError::Config(format!(
                            "{stage}: input {} does not exist",
                            p.display()
                        ))
                        .into());
                    }
                }
                Input::Artifact(rel, producer) => {
                    let earlier = order[..k].contains(producer);
                    if !earlier && !layout.path(rel).exists() {
                        return Err(PipelineError::MissingDependency {
                            stage: stage.name(),
                            producer: producer.name(),
                            artifact: rel.to_string(),
                        }
                        .into());
                    }
                }
            }
        }
    }

    fs::create_dir_all(&layout.root)
        .with_context(|| format!("creating {}", layout.root.display()))?;
    let manifest_path = layout.path(MANIFEST_FILE);
    let previous = if manifest_path.exists() {
        Some(RunManifest::load(&manifest_path)?)
    } else {
        None
    };
    let mut manifest = RunManifest::new(config_digest(cfg));
    let mut records: BTreeMap<Stage, StageRecord> = BTreeMap::new();
    if let Some(prev) = &previous {
        for st in Stage::ALL.iter().filter(|s| !order.contains(s)) {
            if let Some(r) = prev.stage(st.name()) {
                records.insert(*st, r.clone());
            }
        }
    }

    for (stage, s) in &specs {
        let started = Instant::now();
        let input_paths: Vec<PathBuf> = s
            .inputs
            .iter()
            .map(|i| match i {
                Input::External(p) => p.clone(),
                Input::Artifact(rel, _) => layout.path(rel),
            })
            .collect();
        let output_paths: Vec<PathBuf> = s.outputs.iter().map(|o| layout.path(o)).collect();
        let input_digests = digests(&layout, &input_paths)?;
        let params = digest_bytes(
            json!({ "seed": s.seed, "params": s.params })
                .to_string()
                .as_bytes(),
        );

        let prior = previous.as_ref().and_then(|m| m.stage(stage.name()));
        let reusable = prior.filter(|r| {
            r.params == params
                && r.inputs == input_digests
                && r.outputs.len() == output_paths.len()
                && output_paths.iter().all(|p| p.exists())
        });
        if let Some(prior) = reusable {
            let current = digests(&layout, &output_paths)?;
            match current.iter().zip(&prior.outputs).find(|(c, r)| c != r) {
                None => {
                    log::info!("{stage}: outputs up to date");
                    records.insert(
                        *stage,
                        StageRecord {
                            status: StageStatus::CacheHit,
                            wall_ms: started.elapsed().as_millis() as u64,
                            ..prior.clone()
                        },
                    );
                    continue;
                }
                Some((c, r)) if !opts.force => {
                    return Err(PipelineError::DigestMismatch {
                        stage: stage.name(),
                        path: c.path.display().to_string(),
                        recorded: r.sha256.clone(),
                        found: c.sha256.clone(),
                    }
                    .into());
                }
                Some(_) => log::warn!("{stage}: outputs were edited; re-running"),
            }
        }

        log::info!("{stage}: running");
        let notes =
            execute(*stage, cfg, &layout, opts.exec).with_context(|| format!("stage `{stage}`"))?;
        for p in &output_paths {
            if !p.exists() {
                anyhow::bail!("stage `{stage}` did not write {}", p.display());
            }
        }
        records.insert(
            *stage,
            StageRecord {
                stage: stage.name().to_string(),
                status: StageStatus::Ran,
                seed: s.seed,
                params,
                inputs: input_digests,
                outputs: digests(&layout, &output_paths)?,
                notes,
                wall_ms: started.elapsed().as_millis() as u64,
            },
        );
        manifest.stages = records.values().cloned().collect();
        manifest.save(&manifest_path)?;
    }
    manifest.stages = records.into_values().collect();
    manifest.finished_unix = crate::manifest::unix_now();
    manifest.save(&manifest_path)?;
    Ok(manifest)
}

fn load_cache(cfg: &PipelineConfig) -> anyhow::Result<ContradictionCache> {
    let path = cfg.oracle.cache_path.as_ref().expect("checked by spec");
    Ok(ContradictionCache::load(path)?)
}

#[derive(Serialize)]
struct ByDistance {
    quintuplets: usize,
    mean_contradiction: BTreeMap<String, Option<f64>>,
}

fn execute(
    stage: Stage,
    cfg: &PipelineConfig,
    layout: &Layout,
    exec: Execution,
) -> anyhow::Result<Vec<String>> {
    let p = |rel: &str| layout.path(rel);
    let mut notes = Vec::new();
    match stage {
        Stage::Ingest => {
            let i = &cfg.inputs;
            let mut jobs = vec![
                (RecordKind::Sponsorships, &i.sponsorships, SPONSORSHIPS),
                (RecordKind::Bills, &i.bills, BILLS),
                (RecordKind::Statements, &i.statements, STATEMENTS),
            ];
            if let Some(v) = &i.votes {
                jobs.push((RecordKind::Votes, v, VOTES));
            }
            for (kind, input, out) in jobs {
                let n = ops::ingest(kind, input, &p(out))?;
                notes.push(format!("{out}: {n} records"));
            }
        }
        Stage::Matrix => {
            let m = ops::matrix_from_sponsorships(&p(SPONSORSHIPS))?;
            notes.push(format!("{} legislators", m.len()));
            ops::write_matrix(&m, &p(MATRIX))?;
        }
        Stage::Score => {
            let m = ops::read_matrix(&p(MATRIX))?;
            let scores = ops::score_matrix(&m, cfg.anchor_pair())?;
            write_jsonl(&scores, p(SCORES))?;
        }
        Stage::Map => {
            let scores: Vec<IdeologyScore> = ops::load(&p(SCORES))?;
            let mapping = ops::map_scores(&scores, cfg.thresholds.k, cfg.seeds.map, exec)?;
            ops::write_json(&mapping, &p(MAPPING))?;
            let statements: Vec<Statement> = ops::load(&p(STATEMENTS))?;
            let (kept, dropped) = ops::label_statements(statements, &mapping);
            if !dropped.is_empty() {
                notes.push(format!(
                    "{} statements dropped: speaker not mapped",
                    dropped.len()
                ));
            }
            write_jsonl(&kept, p(MAPPED))?;
        }
        Stage::Cluster => {
            let statements: Vec<Statement> = ops::load(&p(MAPPED))?;
            let embeddings = ops::embed(&statements, &cfg.oracle)?;
            write_jsonl(&embeddings, p(EMBEDDINGS))?;
            let clusters = ops::cluster(
                &statements,
                &embeddings,
                cfg.thresholds.hac,
                cfg.thresholds.linkage,
                exec,
            )?;
            let full = clusters.iter().filter(|c| c.covers_all_positions()).count();
            notes.push(format!(
                "{} clusters, {full} cover all positions",
                clusters.len()
            ));
            write_jsonl(&clusters, p(CLUSTERS))?;
        }
        Stage::Quintuplets => {
            let clusters: Vec<SemanticCluster> = ops::load(&p(CLUSTERS))?;
            let cache = load_cache(cfg)?;
            let opt = OptimizerConfig {
                max_iterations: cfg.optimizer.max_iterations,
                patience: cfg.optimizer.patience,
                seed: cfg.seeds.quintuplets,
            };
            let batch = ops::quintuplets(&clusters, &cache, &opt, exec)?;
            notes.push(format!(
                "{} quintuplets, {} clusters skipped",
                batch.quintuplets.len(),
                batch.skipped.len()
            ));
            let by_distance = contradiction_by_distance(&batch.quintuplets, &cache)?;
            let report = ByDistance {
                quintuplets: batch.quintuplets.len(),
                mean_contradiction: (1..=4)
                    .map(|d| {
                        (
                            d.to_string(),
                            Some(by_distance[d - 1]).filter(|x| x.is_finite()),
                        )
                    })
                    .collect(),
            };
            write_jsonl(&batch.quintuplets, p(QUINTUPLETS))?;
            ops::write_json(&report, &p(BY_DISTANCE))?;
        }
        Stage::Rankset => {
            let quints: Vec<Quintuplet> = ops::load(&p(QUINTUPLETS))?;
            let ranked = ops::rankset(&quints, &load_cache(cfg)?)?;
            write_jsonl(&ranked, p(RANKED))?;
        }
        Stage::Split => {
            let ranked: Vec<RankedList> = ops::load(&p(RANKED))?;
            let (train, eval) =
                ops::split_by_quintuplet(&ranked, cfg.thresholds.ratio, cfg.seeds.split)?;
            notes.push(format!(
                "{} train lists, {} eval lists",
                train.len(),
                eval.len()
            ));
            write_jsonl(&train, p(RANKED_TRAIN))?;
            write_jsonl(&eval, p(RANKED_EVAL))?;
        }
        Stage::EmitTraining => {
            let statements: Vec<Statement> = ops::load(&p(MAPPED))?;
            let train: Vec<RankedList> = ops::load(&p(RANKED_TRAIN))?;
            let eval: Vec<RankedList> = ops::load(&p(RANKED_EVAL))?;
            let bills: Vec<Bill> = ops::load(&p(BILLS))?;
            let seed = cfg.seeds.ranking;
            write_jsonl(
                &ops::ranking_records(&train, &statements, seed)?,
                p(TRAIN_RANKING),
            )?;
            let inference: Vec<ChatRecord> = ops::ranking_records(&eval, &statements, seed)?
                .into_iter()
                .map(ChatRecord::into_inference)
                .collect();
            write_jsonl(&inference, p(INFER_RANKING))?;
            write_jsonl(&ops::bill_records(&bills)?, p(TRAIN_BILL))?;
            write_jsonl(
                &ops::vote_records(&bills, &PositionLabel::ALL)?,
                p(INFER_VOTE),
            )?;
            if let Some(path) = &cfg.inputs.qa {
                let pairs: Vec<QaPair> = ops::load(path)?;
                write_jsonl(&ops::qa_records(&pairs)?, p(TRAIN_QA))?;
            }
            if let Some(path) = &cfg.inputs.manifesto {
                let sentences: Vec<ManifestoSentence> = ops::load(path)?;
                let (records, skipped) = ops::cloze_records(&sentences)?;
                notes.push(format!(
                    "{} clozes, {skipped} sentences without a cloze",
                    records.len()
                ));
                write_jsonl(&records, p(TRAIN_CLOZE))?;
            }
        }
        Stage::Plan => {
            let datasets: BTreeMap<Task, PathBuf> = [
                (Task::Cloze, TRAIN_CLOZE),
                (Task::BillComprehension, TRAIN_BILL),
                (Task::QA, TRAIN_QA),
                (Task::Ranking, TRAIN_RANKING),
            ]
            .into_iter()
            .filter(|(_, rel)| p(rel).exists())
            .map(|(t, rel)| (t, PathBuf::from(rel)))
            .collect();
            emit_stage_plan(&datasets, &layout.root)?;
        }
        Stage::Eval => {
            let reference: Vec<RankedList> = ops::load(&p(RANKED_EVAL))?;
            let model = match &cfg.inputs.model_rankings {
                Some(path) => ops::load(path)?,
                None => {
                    notes.push(
                        "no model rankings given; agreement computed among reference rankings"
                            .into(),
                    );
                    reference.clone()
                }
            };
            let cells = reports::agreement_matrix(&model, &reference);
            write_jsonl(&cells, p(AGREEMENT))?;
            let csv = cfg.report.formats.contains(&ReportFormat::Csv);
            if csv {
                fs::write(p(AGREEMENT_CSV), reports::agreement_csv(&cells))?;
            }
            if let Some(path) = &cfg.inputs.positioning_scores {
                let samples: Vec<ScoreSample> = ops::load(path)?;
                let rows = reports::positioning(&samples, cfg.thresholds.alpha);
                write_jsonl(&rows, p(POSITIONING))?;
                if csv {
                    fs::write(p(TUKEY_CSV), reports::tukey_csv(&rows))?;
                }
            }
            if cfg.inputs.votes.is_some() {
                let votes: Vec<VoteRecord> = ops::load(&p(VOTES))?;
                let bills: Vec<Bill> = ops::load(&p(BILLS))?;
                let m = ops::read_matrix(&p(MATRIX))?;
                let mapping: SpectrumMapping = ops::read_json(&p(MAPPING))?;
                let mut agents: Vec<&str> = votes.iter().map(|v| v.agent_id.as_str()).collect();
                agents.sort_unstable();
                agents.dedup();
                let mut rows = Vec::new();
                for agent in agents {
                    let augmented = incorporate_agent_votes(&m, &votes, &bills, agent)?;
                    let scores = ops::score_matrix(&augmented, cfg.anchor_pair())?;
                    rows.extend(reports::compare_agent(&scores, &mapping, agent)?);
                }
                write_jsonl(&rows, p(AGENTS))?;
            }
        }
    }
    Ok(notes)
}

/// Embeddings are written by `cluster`; exposed for the CLI subcommand.
pub fn load_embeddings(path: &Path) -> anyhow::Result<Vec<EmbeddingVector>> {
    ops::load(path)
}
