//! Two-stage fine-tuning manifest.
//!
//! Stage one trains a Left, a Center and a Right model on cloze, bill
//! comprehension and QA records. Stage two refines each of the five
//! positions from the stage-one model of its leaning on QA and ranking
//! records. Each dataset entry names the record targets to select from the
//! file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{PromptError, Target, Task};
use crate::corpus::{Leaning, PositionLabel};

pub const PLAN_FILE: &str = "stage_plan.json";

const STAGE1_TASKS: [Task; 3] = [Task::Cloze, Task::BillComprehension, Task::QA];
const STAGE2_TASKS: [Task; 2] = [Task::QA, Task::Ranking];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tuning {
    pub rank: u32,
    pub alpha: u32,
    pub learning_rate: f64,
    pub schedule: String,
    pub epochs: u32,
    pub quantization: String,
}

impl Default for Tuning {
    fn default() -> Self {
        Self {
            rank: 16,
            alpha: 16,
            learning_rate: 2e-4,
            schedule: "cosine".into(),
            epochs: 2,
            quantization: "4-bit".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRef {
    pub task: Task,
    pub path: PathBuf,
    pub targets: Vec<Target>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage1Entry {
    pub model_tag: String,
    pub datasets: Vec<DatasetRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage2Entry {
    pub parent: String,
    pub model_tag: String,
    pub datasets: Vec<DatasetRef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StagePlan {
    pub stage1: BTreeMap<Leaning, Stage1Entry>,
    pub stage2: BTreeMap<PositionLabel, Stage2Entry>,
    pub tuning: Tuning,
}

impl StagePlan {
    pub fn build(datasets: &BTreeMap<Task, PathBuf>) -> Result<Self, PromptError> {
        for task in STAGE1_TASKS.iter().chain(&STAGE2_TASKS) {
            if !datasets.contains_key(task) {
                return Err(PromptError::MissingDataset(*task));
            }
        }
        let stage1 = Leaning::ALL
            .into_iter()
            .map(|l| {
                let mut targets = vec![Target::Leaning(l)];
                targets.extend(
                    PositionLabel::ALL
                        .into_iter()
                        .filter(|p| p.leaning() == l)
                        .map(Target::Position),
                );
                let entry = Stage1Entry {
                    model_tag: stage1_tag(l),
                    datasets: STAGE1_TASKS
                        .iter()
                        .map(|t| DatasetRef {
                            task: *t,
                            path: datasets[t].clone(),
                            targets: targets.clone(),
                        })
                        .collect(),
                };
                (l, entry)
            })
            .collect();
        let stage2 = PositionLabel::ALL
            .into_iter()
            .map(|p| {
                let entry = Stage2Entry {
                    parent: stage1_tag(p.leaning()),
                    model_tag: format!("stage2-{}", p.as_str().to_lowercase()),
                    datasets: STAGE2_TASKS
                        .iter()
                        .map(|t| DatasetRef {
                            task: *t,
                            path: datasets[t].clone(),
                            targets: vec![Target::Position(p)],
                        })
                        .collect(),
                };
                (p, entry)
            })
            .collect();
        Ok(Self {
            stage1,
            stage2,
            tuning: Tuning::default(),
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan serializes");
        s.push('\n');
        s
    }
}

fn stage1_tag(l: Leaning) -> String {
    format!("stage1-{}", l.as_str().to_lowercase())
}

/// Builds the plan and writes it to `out_dir/stage_plan.json`.
pub fn emit_stage_plan(
    datasets: &BTreeMap<Task, PathBuf>,
    out_dir: &Path,
) -> Result<StagePlan, PromptError> {
    let plan = StagePlan::build(datasets)?;
    let io = |e: std::io::Error| PromptError::Io(format!("{}: {e}", out_dir.display()));
    fs::create_dir_all(out_dir).map_err(io)?;
    fs::write(out_dir.join(PLAN_FILE), plan.to_json()).map_err(io)?;
    Ok(plan)
}
