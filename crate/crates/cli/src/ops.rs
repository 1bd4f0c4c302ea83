//! File-level operations shared by the subcommands and the pipeline.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use forge_core::corpus::{
    load_jsonl, split_train_eval, write_jsonl, Bill, Leaning, Record, RecordKind, ScoreSample,
    SponsorshipRecord, Statement, VoteRecord,
};
use forge_core::cosponsor::{build_matrix, CosponsorMatrix};
use forge_core::ideology::{ideology_scores, IdeologyScore};
use forge_core::oracle::{ContradictionLookup, Oracle, OracleConfig};
use forge_core::prompt::{
    build_bill_record, build_cloze_record, build_qa_record, build_ranking_record,
    cloze_from_sentence, BillMode, ChatRecord,
};
use forge_core::quintuplet::{optimize_all, position_rerank, Batch, OptimizerConfig, Quintuplet};
use forge_core::semantic::{cluster_statements, EmbeddingVector, Linkage, SemanticCluster};
use forge_core::spectrum::{kmeans_map_with, SpectrumMapping, DEFAULT_RESTARTS};
use forge_core::stats::RankedList;
use forge_core::{Execution, PositionLabel};
use serde::{Deserialize, Serialize};

/// A question/answer pair for the QA task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QaPair {
    pub question: String,
    pub answer: String,
    pub position: PositionLabel,
}

impl Record for QaPair {
    fn violation(&self) -> Option<&'static str> {
        if self.question.trim().is_empty() {
            Some("question")
        } else if self.answer.trim().is_empty() {
            Some("answer")
        } else {
            None
        }
    }
}

/// A party manifesto sentence with the leaning of its source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestoSentence {
    pub text: String,
    pub leaning: Leaning,
}

impl Record for ManifestoSentence {
    fn violation(&self) -> Option<&'static str> {
        self.text.trim().is_empty().then_some("text")
    }
}

/// One legislator's spectrum position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionAssignment {
    pub legislator_id: String,
    pub position: PositionLabel,
}

impl Record for PositionAssignment {
    fn unique_key(&self) -> Option<String> {
        Some(self.legislator_id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        self.legislator_id
            .trim()
            .is_empty()
            .then_some("legislator_id")
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn load<T: Record>(path: &Path) -> anyhow::Result<Vec<T>> {
    load_jsonl(path).with_context(|| format!("loading {}", path.display()))
}

fn copy_records<T: Record>(input: &Path, out: &Path) -> anyhow::Result<usize> {
    let records: Vec<T> = load(input)?;
    write_jsonl(&records, out)?;
    Ok(records.len())
}

/// Validates a corpus file and writes it back in canonical form.
pub fn ingest(kind: RecordKind, input: &Path, out: &Path) -> anyhow::Result<usize> {
    match kind {
        RecordKind::Statements => copy_records::<Statement>(input, out),
        RecordKind::Bills => copy_records::<Bill>(input, out),
        RecordKind::Sponsorships => copy_records::<SponsorshipRecord>(input, out),
        RecordKind::Votes => copy_records::<VoteRecord>(input, out),
        RecordKind::Scores => copy_records::<ScoreSample>(input, out),
    }
}

pub fn read_matrix(path: &Path) -> anyhow::Result<CosponsorMatrix> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(CosponsorMatrix::read_csv(f)?)
}

pub fn write_matrix(m: &CosponsorMatrix, path: &Path) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    m.write_csv(std::io::BufWriter::new(f))?;
    Ok(())
}

pub fn matrix_from_sponsorships(path: &Path) -> anyhow::Result<CosponsorMatrix> {
    let records: Vec<SponsorshipRecord> = load(path)?;
    Ok(build_matrix(&records))
}

pub fn score_matrix(
    m: &CosponsorMatrix,
    anchors: Option<(&str, &str)>,
) -> anyhow::Result<Vec<IdeologyScore>> {
    Ok(ideology_scores(m, anchors)?)
}

pub fn map_scores(
    scores: &[IdeologyScore],
    k: usize,
    seed: u64,
    exec: Execution,
) -> anyhow::Result<SpectrumMapping> {
    Ok(kmeans_map_with(scores, k, seed, DEFAULT_RESTARTS, exec)?)
}

/// Fills missing statement positions from the speaker's mapped position.
/// Statements whose speaker is not mapped are dropped; their ids are
/// returned alongside.
pub fn label_statements(
    statements: Vec<Statement>,
    mapping: &SpectrumMapping,
) -> (Vec<Statement>, Vec<String>) {
    let mut kept = Vec::with_capacity(statements.len());
    let mut dropped = Vec::new();
    for mut s in statements {
        if s.position.is_none() {
            s.position = mapping.assignments.get(&s.speaker_id).copied();
        }
        if s.position.is_some() {
            kept.push(s);
        } else {
            dropped.push(s.id);
        }
    }
    (kept, dropped)
}

pub fn embed(
    statements: &[Statement],
    oracle: &OracleConfig,
) -> anyhow::Result<Vec<EmbeddingVector>> {
    let oracle = Oracle::from_config(oracle)?;
    Ok(oracle.embed_statements(statements)?)
}

pub fn cluster(
    statements: &[Statement],
    embeddings: &[EmbeddingVector],
    threshold: f64,
    linkage: Linkage,
    exec: Execution,
) -> anyhow::Result<Vec<SemanticCluster>> {
    Ok(cluster_statements(
        statements, embeddings, threshold, linkage, exec,
    )?)
}

pub fn quintuplets<L: ContradictionLookup + Sync + ?Sized>(
    clusters: &[SemanticCluster],
    cache: &L,
    cfg: &OptimizerConfig,
    exec: Execution,
) -> anyhow::Result<Batch> {
    Ok(optimize_all(clusters, cache, cfg, exec)?)
}

/// One re-ranked list per position per quintuplet.
pub fn rankset<L: ContradictionLookup + ?Sized>(
    quints: &[Quintuplet],
    cache: &L,
) -> anyhow::Result<Vec<RankedList>> {
    let mut out = Vec::with_capacity(quints.len() * 5);
    for q in quints {
        for p in PositionLabel::ALL {
            out.push(RankedList {
                source_position: p,
                quintuplet_id: q.cluster_id.clone(),
                order: position_rerank(q, cache, p)?.to_vec(),
                ranks: None,
            });
        }
    }
    Ok(out)
}

/// Splits ranked lists into train and eval by quintuplet, so the five lists
/// of a quintuplet stay together.
pub fn split_by_quintuplet(
    ranked: &[RankedList],
    ratio: f64,
    seed: u64,
) -> anyhow::Result<(Vec<RankedList>, Vec<RankedList>)> {
    let mut ids: Vec<String> = ranked.iter().map(|r| r.quintuplet_id.clone()).collect();
    ids.sort();
    ids.dedup();
    let (train, _) =
        split_train_eval(&ids, ratio, "quintuplet", |_| Some("all".to_string()), seed)?;
    let train: std::collections::HashSet<String> = train.into_iter().collect();
    Ok(ranked
        .iter()
        .cloned()
        .partition(|r| train.contains(&r.quintuplet_id)))
}

/// Issue part of a cluster id (`{issue}#{nnnn}`).
pub fn issue_of(cluster_id: &str) -> &str {
    cluster_id
        .rsplit_once('#')
        .map_or(cluster_id, |(issue, _)| issue)
}

pub fn ranking_records(
    ranked: &[RankedList],
    statements: &[Statement],
    seed: u64,
) -> anyhow::Result<Vec<ChatRecord>> {
    let text: HashMap<&str, &str> = statements
        .iter()
        .map(|s| (s.id.as_str(), s.text.as_str()))
        .collect();
    ranked
        .iter()
        .map(|r| {
            let texts = r
                .order
                .iter()
                .map(|id| {
                    text.get(id.as_str())
                        .map(|t| t.to_string())
                        .with_context(|| {
                            format!("statement `{id}` of {} not found", r.quintuplet_id)
                        })
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            Ok(build_ranking_record(
                issue_of(&r.quintuplet_id),
                &texts,
                r.source_position,
                seed,
            )?)
        })
        .collect()
}

pub fn bill_records(bills: &[Bill]) -> anyhow::Result<Vec<ChatRecord>> {
    Ok(bills
        .iter()
        .map(|b| build_bill_record(b, BillMode::Comprehension))
        .collect::<Result<_, _>>()?)
}

pub fn vote_records(
    bills: &[Bill],
    positions: &[PositionLabel],
) -> anyhow::Result<Vec<ChatRecord>> {
    let mut out = Vec::with_capacity(bills.len() * positions.len());
    for p in positions {
        for b in bills {
            out.push(build_bill_record(b, BillMode::Vote(*p))?);
        }
    }
    Ok(out)
}

pub fn qa_records(pairs: &[QaPair]) -> anyhow::Result<Vec<ChatRecord>> {
    Ok(pairs
        .iter()
        .map(|q| build_qa_record(&q.question, &q.answer, q.position))
        .collect::<Result<_, _>>()?)
}

/// Cloze records for every sentence that yields a cloze, and the number of
/// sentences skipped.
pub fn cloze_records(sentences: &[ManifestoSentence]) -> anyhow::Result<(Vec<ChatRecord>, usize)> {
    let mut out = Vec::new();
    let mut skipped = 0;
    for s in sentences {
        match cloze_from_sentence(&s.text) {
            Some(c) => out.push(build_cloze_record(&c, s.leaning)?),
            None => skipped += 1,
        }
    }
    Ok((out, skipped))
}

/// Reads either a mapping JSON document or position-assignment JSON Lines.
pub fn read_assignments(path: &Path) -> anyhow::Result<BTreeMap<String, PositionLabel>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(m) = serde_json::from_str::<SpectrumMapping>(&text) {
        return Ok(m.assignments);
    }
    let rows: Vec<PositionAssignment> = forge_core::corpus::parse_jsonl(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(rows
        .into_iter()
        .map(|r| (r.legislator_id, r.position))
        .collect())
}

/// Aligns two assignment maps on their shared legislators.
pub fn paired_labels(
    truth: &BTreeMap<String, PositionLabel>,
    pred: &BTreeMap<String, PositionLabel>,
) -> anyhow::Result<(Vec<PositionLabel>, Vec<PositionLabel>)> {
    let (mut t, mut p) = (Vec::new(), Vec::new());
    for (id, a) in truth {
        if let Some(b) = pred.get(id) {
            t.push(*a);
            p.push(*b);
        }
    }
    if t.is_empty() {
        bail!("the two assignment files share no legislator");
    }
    Ok((t, p))
}
