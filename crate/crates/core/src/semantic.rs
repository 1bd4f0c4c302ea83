//! Semantic grouping of same-issue statements.
//!
//! Statements are first split by topic, then merged bottom-up by cosine
//! similarity of their embeddings until no pair of clusters links at or
//! above the threshold.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PositionLabel, Statement};
use crate::exec::Execution;

pub const DEFAULT_THRESHOLD: f64 = 0.7;

#[derive(Debug, Error, PartialEq)]
pub enum SemanticError {
    #[error("embedding dimensions differ ({0} vs {1})")]
    DimMismatch(usize, usize),
    #[error("embedding for `{0}` has zero norm")]
    ZeroVector(String),
    #[error("threshold {0} must lie strictly between 0 and 1")]
    InvalidThreshold(f64),
    #[error("no embedding for statement `{0}`")]
    MissingEmbedding(String),
    #[error("statement `{0}` has no spectrum position")]
    MissingPosition(String),
    #[error("duplicate embedding for `{0}`")]
    DuplicateEmbedding(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingVector {
    pub statement_id: String,
    pub values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl crate::corpus::Record for EmbeddingVector {
    fn unique_key(&self) -> Option<String> {
        Some(self.statement_id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if self.statement_id.trim().is_empty() {
            Some("statement_id")
        } else if self.values.is_empty()
            || self.norm() == 0.0
            || self.values.iter().any(|v| !v.is_finite())
        {
            Some("values")
        } else {
            None
        }
    }
}

pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, SemanticError> {
    if a.dim() != b.dim() {
        return Err(SemanticError::DimMismatch(a.dim(), b.dim()));
    }
    let (na, nb) = (a.norm(), b.norm());
    if na == 0.0 {
        return Err(SemanticError::ZeroVector(a.statement_id.clone()));
    }
    if nb == 0.0 {
        return Err(SemanticError::ZeroVector(b.statement_id.clone()));
    }
    let dot: f64 = a.values.iter().zip(&b.values).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Complete,
}

impl std::str::FromStr for Linkage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(Self::Average),
            "complete" => Ok(Self::Complete),
            other => Err(format!("unknown linkage `{other}`")),
        }
    }
}

/// One agglomeration step. Clusters are named by their smallest member id.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub left: String,
    pub right: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hac {
    pub merges: Vec<Merge>,
    /// Member ids, sorted; clusters ordered by their smallest member.
    pub clusters: Vec<Vec<String>>,
}

struct Node {
    key: String,
    members: Vec<usize>,
    alive: bool,
}

/// Agglomerates while the best linkage similarity is at least `threshold`.
/// Equal similarities are broken by the lexicographically smallest pair of
/// cluster keys, which makes the result independent of input order.
pub fn hac(
    vectors: &[EmbeddingVector],
    threshold: f64,
    linkage: Linkage,
) -> Result<Hac, SemanticError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(SemanticError::InvalidThreshold(threshold));
    }
    let n = vectors.len();
    // link[a][b]: summed similarity (average) or minimum similarity (complete)
    let mut link = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = cosine_similarity(&vectors[i], &vectors[j])?;
            link[i][j] = s;
            link[j][i] = s;
        }
    }
    if let Some(v) = vectors.iter().find(|v| v.norm() == 0.0) {
        return Err(SemanticError::ZeroVector(v.statement_id.clone()));
    }
    let mut nodes: Vec<Node> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| Node {
            key: v.statement_id.clone(),
            members: vec![i],
            alive: true,
        })
        .collect();

    let score = |link: &Vec<Vec<f64>>, nodes: &[Node], a: usize, b: usize| match linkage {
        Linkage::Average => link[a][b] / (nodes[a].members.len() * nodes[b].members.len()) as f64,
        Linkage::Complete => link[a][b],
    };

    let mut merges = Vec::new();
    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in (0..n).filter(|&a| nodes[a].alive) {
            for b in (a + 1..n).filter(|&b| nodes[b].alive) {
                let s = score(&link, &nodes, a, b);
                let better = match best {
                    None => true,
                    Some((bs, ba, bb)) => {
                        s > bs || (s == bs && pair_key(&nodes, a, b) < pair_key(&nodes, ba, bb))
                    }
                };
                if better {
                    best = Some((s, a, b));
                }
            }
        }
        let Some((sim, a, b)) = best.filter(|(s, _, _)| *s >= threshold) else {
            break;
        };
        let (left, right) = pair_key(&nodes, a, b);
        merges.push(Merge {
            left: left.to_string(),
            right: right.to_string(),
            similarity: sim,
        });
        // fold b into a
        for c in (0..n).filter(|&c| nodes[c].alive && c != a && c != b) {
            let merged = match linkage {
                Linkage::Average => link[a][c] + link[b][c],
                Linkage::Complete => link[a][c].min(link[b][c]),
            };
            link[a][c] = merged;
            link[c][a] = merged;
        }
        let moved = std::mem::take(&mut nodes[b].members);
        nodes[a].members.extend(moved);
        nodes[b].alive = false;
        if nodes[b].key < nodes[a].key {
            nodes[a].key = nodes[b].key.clone();
        }
    }

    let mut clusters: Vec<Vec<String>> = nodes
        .iter()
        .filter(|n| n.alive)
        .map(|n| {
            let mut ids: Vec<String> = n
                .members
                .iter()
                .map(|&i| vectors[i].statement_id.clone())
                .collect();
            ids.sort();
            ids
        })
        .collect();
    clusters.sort();
    Ok(Hac { merges, clusters })
}

fn pair_key<'a>(nodes: &'a [Node], a: usize, b: usize) -> (&'a str, &'a str) {
    let (x, y) = (nodes[a].key.as_str(), nodes[b].key.as_str());
    if x <= y {
        (x, y)
    } else {
        (y, x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SemanticCluster {
    pub cluster_id: String,
    pub issue: String,
    pub member_ids: Vec<String>,
    pub per_position_members: BTreeMap<PositionLabel, Vec<String>>,
}

impl SemanticCluster {
    pub fn candidates(&self, position: PositionLabel) -> &[String] {
        self.per_position_members
            .get(&position)
            .map_or(&[], Vec::as_slice)
    }

    pub fn covers_all_positions(&self) -> bool {
        PositionLabel::ALL
            .iter()
            .all(|p| !self.candidates(*p).is_empty())
    }
}

impl crate::corpus::Record for SemanticCluster {
    fn unique_key(&self) -> Option<String> {
        Some(self.cluster_id.clone())
    }

    fn violation(&self) -> Option<&'static str> {
        if self.member_ids.is_empty() {
            Some("member_ids")
        } else {
            None
        }
    }
}

/// Groups statements by topic, then runs HAC inside each topic.
pub fn cluster_statements(
    statements: &[Statement],
    embeddings: &[EmbeddingVector],
    threshold: f64,
    linkage: Linkage,
    exec: Execution,
) -> Result<Vec<SemanticCluster>, SemanticError> {
    let mut by_id: HashMap<&str, &EmbeddingVector> = HashMap::new();
    for e in embeddings {
        if by_id.insert(e.statement_id.as_str(), e).is_some() {
            return Err(SemanticError::DuplicateEmbedding(e.statement_id.clone()));
        }
    }
    let mut issues: BTreeMap<&str, Vec<&Statement>> = BTreeMap::new();
    let mut position: HashMap<&str, PositionLabel> = HashMap::new();
    for s in statements {
        let p = s
            .position
            .ok_or_else(|| SemanticError::MissingPosition(s.id.clone()))?;
        position.insert(s.id.as_str(), p);
        issues.entry(s.topic.as_str()).or_default().push(s);
    }
    let jobs: Vec<(&str, Vec<EmbeddingVector>)> = issues
        .into_iter()
        .map(|(issue, members)| {
            let vecs = members
                .iter()
                .map(|s| {
                    by_id
                        .get(s.id.as_str())
                        .map(|e| (*e).clone())
                        .ok_or_else(|| SemanticError::MissingEmbedding(s.id.clone()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((issue, vecs))
        })
        .collect::<Result<_, SemanticError>>()?;

    let results = exec.map(&jobs, |(issue, vecs)| {
        hac(vecs, threshold, linkage).map(|h| (*issue, h))
    });
    let mut out = Vec::new();
    for r in results {
        let (issue, h) = r?;
        for (k, members) in h.clusters.into_iter().enumerate() {
            let mut per_position: BTreeMap<PositionLabel, Vec<String>> = BTreeMap::new();
            for m in &members {
                per_position
                    .entry(position[m.as_str()])
                    .or_default()
                    .push(m.clone());
            }
            out.push(SemanticCluster {
                cluster_id: format!("{issue}#{k:04}"),
                issue: issue.to_string(),
                member_ids: members,
                per_position_members: per_position,
            });
        }
    }
    Ok(out)
}
