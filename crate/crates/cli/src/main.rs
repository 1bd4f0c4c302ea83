use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use forge_cli::config::{PipelineConfig, ENDPOINT_ENV};
use forge_cli::error::{exit_code, PipelineError, EXIT_OK};
use forge_cli::ops::{self, ManifestoSentence, QaPair};
use forge_cli::pipeline::{run_pipeline, RunOptions, Stage};
use forge_cli::{reports, synth};
use forge_core::corpus::{
    split_train_eval, stratified_sample, write_jsonl, Bill, Record, RecordKind, ScoreSample,
    Statement, VoteRecord,
};
use forge_core::cosponsor::incorporate_agent_votes;
use forge_core::ideology::IdeologyScore;
use forge_core::oracle::{precompute_cache, Backend, ContradictionCache, OracleConfig};
use forge_core::prompt::{emit_stage_plan, ChatRecord, Task};
use forge_core::quintuplet::{OptimizerConfig, Quintuplet};
use forge_core::semantic::{Linkage, SemanticCluster, DEFAULT_THRESHOLD};
use forge_core::spectrum::{cluster_quality, SpectrumMapping};
use forge_core::stats::RankedList;
use forge_core::{Execution, PositionLabel};
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(
    name = "forge",
    version,
    about = "Spectrum-aligned training data from legislative corpora"
)]
struct Cli {
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a JSON Lines corpus and write it back canonically.
    Ingest {
        #[arg(long)]
        kind: RecordKind,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified sample of JSON Lines rows.
    Sample {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        target: usize,
        #[arg(long, default_value = "policy_area")]
        key: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Stratified train/eval split of JSON Lines rows.
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        ratio: f64,
        #[arg(long, default_value = "position")]
        stratify: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: PathBuf,
    },
    /// Build the co-sponsorship matrix.
    Matrix(MatrixArgs),
    /// Ideology scores from a matrix.
    Score(ScoreArgs),
    /// Map scores onto the five spectrum positions.
    Map(MapArgs),
    /// Group statements into per-issue semantic clusters.
    Cluster {
        #[arg(long)]
        statements: PathBuf,
        /// Embedding cache (text/values JSON Lines).
        #[arg(long)]
        embeddings: PathBuf,
        /// Fills missing statement positions from the speaker's position.
        #[arg(long)]
        mapping: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value = "average")]
        linkage: Linkage,
        #[arg(long)]
        out: PathBuf,
    },
    /// Talk to the contradiction service.
    Oracle {
        #[command(subcommand)]
        command: OracleCommand,
    },
    /// Pick the most contradictory quintuplet of every cluster.
    Quintuplets {
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long, default_value_t = 50)]
        patience: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-rank every quintuplet from each position.
    Rankset {
        #[arg(long)]
        quints: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render chat-format training records.
    EmitTraining {
        #[arg(long)]
        task: Task,
        #[arg(long = "in")]
        input: PathBuf,
        /// Statements, for the ranking task.
        #[arg(long)]
        statements: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write inference records (assistant turn empty).
        #[arg(long)]
        inference: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the two-stage fine-tuning plan.
    Plan {
        #[arg(long)]
        cloze: Option<PathBuf>,
        #[arg(long)]
        bill: Option<PathBuf>,
        #[arg(long)]
        qa: Option<PathBuf>,
        #[arg(long)]
        ranking: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Assessment reports.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
    /// Run pipeline stages from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated stages; all stages when omitted.
        #[arg(long)]
        stages: Option<String>,
        /// Re-run stages whose outputs were edited.
        #[arg(long)]
        force: bool,
    },
    /// Write a seeded synthetic corpus and a config that runs on it.
    Synth {
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct MatrixArgs {
    #[command(subcommand)]
    command: Option<MatrixCommand>,
    #[arg(long)]
    sponsorships: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MatrixCommand {
    /// Append a simulated agent's votes as a co-sponsor row.
    Augment {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        votes: PathBuf,
        #[arg(long)]
        bills: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ScoreArgs {
    #[command(subcommand)]
    command: Option<ScoreCommand>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Left and right anchor legislators, `LEFT,RIGHT`.
    #[arg(long)]
    anchors: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ScoreCommand {
    /// Place an agent within each position's score distribution.
    Compare {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        agent: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct MapArgs {
    #[command(subcommand)]
    command: Option<MapCommand>,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum MapCommand {
    /// Compare a mapping against reference positions.
    Quality {
        #[arg(long = "true")]
        truth: PathBuf,
        #[arg(long)]
        pred: PathBuf,
    },
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Query the service for every pair and write a contradiction cache.
    Precompute {
        #[arg(long)]
        statements: PathBuf,
        /// All within-cluster pairs.
        #[arg(long, conflicts_with = "pairs")]
        clusters: Option<PathBuf>,
        /// JSON Lines of `{"a": id, "b": id}`.
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        #[arg(long, default_value = "roberta-large-mnli")]
        model_tag: String,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Mean Spearman agreement between two sets of ranked lists.
    RankAgreement {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// ANOVA and Tukey contrasts of positioning test scores.
    Positioning {
        #[arg(long)]
        scores: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// An arbitrary JSON object row.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(transparent)]
struct Row(serde_json::Map<String, serde_json::Value>);

impl Record for Row {
    fn violation(&self) -> Option<&'static str> {
        None
    }
}

impl Row {
    fn field(&self, name: &str) -> Option<String> {
        match self.0.get(name)? {
            serde_json::Value::Null => None,
            serde_json::Value::String(s) => Some(s.clone()),
            other => Some(other.to_string()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PairIds {
    a: String,
    b: String,
}

impl Record for PairIds {
    fn violation(&self) -> Option<&'static str> {
        (self.a == self.b).then_some("b")
    }
}

fn required<'a>(value: &'a Option<PathBuf>, flag: &str) -> anyhow::Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| usage(format!("--{flag} is required")))
}

fn usage(message: String) -> anyhow::Error {
    PipelineError::Usage(message).into()
}

fn parse_anchors(s: &str) -> anyhow::Result<(String, String)> {
    match s.split_once(',') {
        Some((l, r)) if !l.trim().is_empty() && !r.trim().is_empty() => {
            Ok((l.trim().into(), r.trim().into()))
        }
        _ => Err(usage("--anchors expects LEFT,RIGHT".into())),
    }
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    match cli.command {
        Command::Ingest { kind, input, out } => {
            let n = ops::ingest(kind, &input, &out)?;
            eprintln!("{n} records");
        }
        Command::Sample {
            input,
            target,
            key,
            seed,
            out,
        } => {
            let rows: Vec<Row> = ops::load(&input)?;
            let missing = rows.iter().position(|r| r.field(&key).is_none());
            if let Some(i) = missing {
                return Err(usage(format!("row {} has no `{key}`", i + 1)));
            }
            let picked =
                stratified_sample(&rows, target, |r| r.field(&key).unwrap_or_default(), seed)?;
            write_jsonl(&picked, &out)?;
        }
        Command::Split {
            input,
            ratio,
            stratify,
            seed,
            train,
            eval,
        } => {
            let rows: Vec<Row> = ops::load(&input)?;
            let (tr, ev) = split_train_eval(&rows, ratio, &stratify, |r| r.field(&stratify), seed)?;
            write_jsonl(&tr, &train)?;
            write_jsonl(&ev, &eval)?;
            eprintln!("{} train, {} eval", tr.len(), ev.len());
        }
        Command::Matrix(args) => match args.command {
            None => {
                let m =
                    ops::matrix_from_sponsorships(required(&args.sponsorships, "sponsorships")?)?;
                ops::write_matrix(&m, required(&args.out, "out")?)?;
            }
            Some(MatrixCommand::Augment {
                matrix,
                votes,
                bills,
                agent,
                out,
            }) => {
                let m = ops::read_matrix(&matrix)?;
                let votes: Vec<VoteRecord> = ops::load(&votes)?;
                let bills: Vec<Bill> = ops::load(&bills)?;
                ops::write_matrix(&incorporate_agent_votes(&m, &votes, &bills, &agent)?, &out)?;
            }
        },
        Command::Score(args) => match args.command {
            None => {
                let m = ops::read_matrix(required(&args.matrix, "matrix")?)?;
                let anchors = args.anchors.as_deref().map(parse_anchors).transpose()?;
                let scores =
                    ops::score_matrix(&m, anchors.as_ref().map(|(l, r)| (l.as_str(), r.as_str())))?;
                write_jsonl(&scores, required(&args.out, "out")?)?;
            }
            Some(ScoreCommand::Compare {
                scores,
                mapping,
                agent,
                out,
            }) => {
                let scores: Vec<IdeologyScore> = ops::load(&scores)?;
                let mapping: SpectrumMapping = ops::read_json(&mapping)?;
                let rows = reports::compare_agent(&scores, &mapping, &agent)?;
                match out {
                    Some(p) => write_jsonl(&rows, p)?,
                    None => print_json(&rows)?,
                }
            }
        },
        Command::Map(args) => match args.command {
            None => {
                let scores: Vec<IdeologyScore> = ops::load(required(&args.scores, "scores")?)?;
                let mapping = ops::map_scores(&scores, args.k, args.seed, exec)?;
                ops::write_json(&mapping, required(&args.out, "out")?)?;
            }
            Some(MapCommand::Quality { truth, pred }) => {
                let truth = ops::read_assignments(&truth)?;
                let pred = ops::read_assignments(&pred)?;
                let (t, p) = ops::paired_labels(&truth, &pred)?;
                print_json(&cluster_quality(&t, &p)?)?;
            }
        },
        Command::Cluster {
            statements,
            embeddings,
            mapping,
            threshold,
            linkage,
            out,
        } => {
            let mut stmts: Vec<Statement> = ops::load(&statements)?;
            if let Some(m) = mapping {
                let mapping: SpectrumMapping = ops::read_json(&m)?;
                let (kept, dropped) = ops::label_statements(stmts, &mapping);
                if !dropped.is_empty() {
                    log::warn!("{} statements dropped: speaker not mapped", dropped.len());
                }
                stmts = kept;
            }
            let oracle = OracleConfig {
                embedding_cache_path: Some(embeddings),
                ..OracleConfig::default()
            };
            let vectors = ops::embed(&stmts, &oracle)?;
            write_jsonl(
                &ops::cluster(&stmts, &vectors, threshold, linkage, exec)?,
                &out,
            )?;
        }
        Command::Oracle {
            command:
                OracleCommand::Precompute {
                    statements,
                    clusters,
                    pairs,
                    endpoint,
                    model_tag,
                    batch_size,
                    out,
                },
        } => {
            let stmts: Vec<Statement> = ops::load(&statements)?;
            let by_id: HashMap<&str, &Statement> =
                stmts.iter().map(|s| (s.id.as_str(), s)).collect();
            let ids: Vec<(String, String)> = match (clusters, pairs) {
                (Some(c), None) => {
                    let clusters: Vec<SemanticCluster> = ops::load(&c)?;
                    clusters
                        .iter()
                        .flat_map(|c| {
                            let m = &c.member_ids;
                            (0..m.len()).flat_map(move |i| {
                                (i + 1..m.len()).map(move |j| (m[i].clone(), m[j].clone()))
                            })
                        })
                        .collect()
                }
                (None, Some(p)) => ops::load::<PairIds>(&p)?
                    .into_iter()
                    .map(|p| (p.a, p.b))
                    .collect(),
                _ => return Err(usage("give either --clusters or --pairs".into())),
            };
            let pairs = ids
                .iter()
                .map(|(a, b)| {
                    let get = |id: &str| {
                        by_id
                            .get(id)
                            .map(|s| (*s).clone())
                            .with_context(|| format!("statement `{id}` not found"))
                    };
                    Ok((get(a)?, get(b)?))
                })
                .collect::<anyhow::Result<Vec<_>>>()?;
            let cfg = OracleConfig {
                backend: Backend::Http,
                endpoint: Some(endpoint),
                model_tag,
                batch_size,
                ..OracleConfig::default()
            };
            let cache = precompute_cache(&pairs, &cfg, &out)?;
            eprintln!("{} pairs cached", cache.len());
        }
        Command::Quintuplets {
            clusters,
            cache,
            seed,
            max_iterations,
            patience,
            out,
        } => {
            let clusters: Vec<SemanticCluster> = ops::load(&clusters)?;
            let cache = ContradictionCache::load(&cache)?;
            let cfg = OptimizerConfig {
                max_iterations,
                patience,
                seed,
            };
            let batch = ops::quintuplets(&clusters, &cache, &cfg, exec)?;
            eprintln!(
                "{} quintuplets, {} clusters skipped",
                batch.quintuplets.len(),
                batch.skipped.len()
            );
            write_jsonl(&batch.quintuplets, &out)?;
        }
        Command::Rankset { quints, cache, out } => {
            let quints: Vec<Quintuplet> = ops::load(&quints)?;
            let cache = ContradictionCache::load(&cache)?;
            write_jsonl(&ops::rankset(&quints, &cache)?, &out)?;
        }
        Command::EmitTraining {
            task,
            input,
            statements,
            seed,
            inference,
            out,
        } => {
            let mut records: Vec<ChatRecord> = match task {
                Task::Ranking => {
                    let ranked: Vec<RankedList> = ops::load(&input)?;
                    let stmts: Vec<Statement> = ops::load(required(&statements, "statements")?)?;
                    ops::ranking_records(&ranked, &stmts, seed)?
                }
                Task::BillComprehension => ops::bill_records(&ops::load::<Bill>(&input)?)?,
                Task::BillVote => {
                    ops::vote_records(&ops::load::<Bill>(&input)?, &PositionLabel::ALL)?
                }
                Task::QA => ops::qa_records(&ops::load::<QaPair>(&input)?)?,
                Task::Cloze => {
                    let (records, skipped) =
                        ops::cloze_records(&ops::load::<ManifestoSentence>(&input)?)?;
                    eprintln!("{skipped} sentences without a cloze");
                    records
                }
                Task::PositioningAnswer => {
                    return Err(usage(
                        "positioning prompts are built from test items, not a corpus".into(),
                    ))
                }
            };
            if inference {
                records = records
                    .into_iter()
                    .map(ChatRecord::into_inference)
                    .collect();
            }
            write_jsonl(&records, &out)?;
        }
        Command::Plan {
            cloze,
            bill,
            qa,
            ranking,
            out_dir,
        } => {
            let datasets = [
                (Task::Cloze, cloze),
                (Task::BillComprehension, bill),
                (Task::QA, qa),
                (Task::Ranking, ranking),
            ]
            .into_iter()
            .filter_map(|(t, p)| p.map(|p| (t, p)))
            .collect();
            emit_stage_plan(&datasets, &out_dir)?;
        }
        Command::Eval { command } => match command {
            EvalCommand::RankAgreement { a, b, out, csv } => {
                let a: Vec<RankedList> = ops::load(&a)?;
                let b: Vec<RankedList> = ops::load(&b)?;
                let cells = reports::agreement_matrix(&a, &b);
                write_jsonl(&cells, &out)?;
                if let Some(p) = csv {
                    fs::write(&p, reports::agreement_csv(&cells))
                        .with_context(|| format!("writing {}", p.display()))?;
                }
            }
            EvalCommand::Positioning {
                scores,
                alpha,
                out,
                csv,
            } => {
                let samples: Vec<ScoreSample> = ops::load(&scores)?;
                let rows = reports::positioning(&samples, alpha);
                write_jsonl(&rows, &out)?;
                if let Some(p) = csv {
                    fs::write(&p, reports::tukey_csv(&rows))
                        .with_context(|| format!("writing {}", p.display()))?;
                }
            }
        },
        Command::Run {
            config,
            stages,
            force,
        } => {
            let cfg = PipelineConfig::load(&config)?;
            let stages = match stages {
                Some(s) => Stage::parse_list(&s)?,
                None => Stage::ALL.to_vec(),
            };
            let manifest = run_pipeline(&cfg, &stages, RunOptions { exec, force })?;
            for s in &manifest.stages {
                eprintln!("{:<14} {:?} {} ms", s.stage, s.status, s.wall_ms);
            }
        }
        Command::Synth { out_dir, seed } => {
            let corpus = synth::generate(synth::SynthOptions { seed });
            synth::write_corpus(&corpus, &out_dir)?;
            eprintln!("wrote {}", out_dir.join(synth::CONFIG_FILE).display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
