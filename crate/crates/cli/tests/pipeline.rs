use std::fs;
use std::path::{Path, PathBuf};

use forge_cli::config::PipelineConfig;
use forge_cli::error::{exit_code, PipelineError, EXIT_VALIDATION};
use forge_cli::manifest::{StageStatus, MANIFEST_FILE};
use forge_cli::pipeline::{run_pipeline, RunOptions, Stage};
use forge_cli::synth::{self, SynthOptions};
use forge_core::Execution;

fn setup(dir: &Path) -> PipelineConfig {
    synth::write_corpus(&synth::generate(SynthOptions::default()), dir).unwrap();
    PipelineConfig::load(&dir.join(synth::CONFIG_FILE)).unwrap()
}

fn files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn opts(exec: Execution) -> RunOptions {
    RunOptions { exec, force: false }
}

#[test]
fn rerun_is_all_cache_hits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let first = run_pipeline(&cfg, &Stage::ALL, RunOptions::default()).unwrap();
    assert_eq!(first.stages.len(), Stage::ALL.len());
    assert!(first.stages.iter().all(|s| s.status == StageStatus::Ran));
    let second = run_pipeline(&cfg, &Stage::ALL, RunOptions::default()).unwrap();
    assert!(second
        .stages
        .iter()
        .all(|s| s.status == StageStatus::CacheHit));
    for (a, b) in first.stages.iter().zip(&second.stages) {
        assert_eq!(a.outputs, b.outputs);
        assert_eq!(a.inputs, b.inputs);
    }
}

#[test]
fn two_work_dirs_and_both_execution_modes_agree() {
    let dir = tempfile::tempdir().unwrap();
    let ca = setup(dir.path());
    let mut cb = ca.clone();
    cb.work_dir = dir.path().join("elsewhere/work");
    let ma = run_pipeline(&ca, &Stage::ALL, opts(Execution::Sequential)).unwrap();
    let mb = run_pipeline(&cb, &Stage::ALL, opts(Execution::default())).unwrap();
    assert_eq!(ma.config_sha256, mb.config_sha256);
    let (wa, wb) = (&ca.work_dir, &cb.work_dir);
    let listing = files(wa);
    assert_eq!(listing, files(wb));
    for f in listing.iter().filter(|f| f.as_os_str() != MANIFEST_FILE) {
        assert_eq!(
            fs::read(wa.join(f)).unwrap(),
            fs::read(wb.join(f)).unwrap(),
            "{}",
            f.display()
        );
    }
    for (x, y) in ma.stages.iter().zip(&mb.stages) {
        assert_eq!(x.outputs, y.outputs, "{}", x.stage);
        assert_eq!(x.inputs, y.inputs, "{}", x.stage);
    }
}

#[test]
fn missing_upstream_artifact_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let err = run_pipeline(&cfg, &[Stage::Cluster], RunOptions::default()).unwrap_err();
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::MissingDependency {
            stage, producer, ..
        }) => {
            assert_eq!(*stage, "cluster");
            assert_eq!(*producer, "map");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert_eq!(exit_code(&err), EXIT_VALIDATION);
    assert!(!cfg.work_dir.join(MANIFEST_FILE).exists());
}

#[test]
fn stages_run_in_pipeline_order_regardless_of_request() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let m = run_pipeline(
        &cfg,
        &[Stage::Matrix, Stage::Ingest, Stage::Matrix],
        RunOptions::default(),
    )
    .unwrap();
    let names: Vec<&str> = m.stages.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(names, ["ingest", "matrix"]);
}

#[test]
fn empty_stage_list_writes_an_empty_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    let m = run_pipeline(&cfg, &[], RunOptions::default()).unwrap();
    assert!(m.stages.is_empty());
    assert!(cfg.work_dir.join(MANIFEST_FILE).exists());
}

#[test]
fn partial_runs_keep_earlier_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    run_pipeline(&cfg, &[Stage::Ingest, Stage::Matrix], RunOptions::default()).unwrap();
    let m = run_pipeline(&cfg, &[Stage::Score], RunOptions::default()).unwrap();
    let names: Vec<&str> = m.stages.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(names, ["ingest", "matrix", "score"]);
    assert_eq!(m.stage("score").unwrap().status, StageStatus::Ran);
}

#[test]
fn edited_output_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path());
    run_pipeline(&cfg, &[Stage::Ingest, Stage::Matrix], RunOptions::default()).unwrap();
    let matrix = cfg.work_dir.join("matrix.csv");
    let mut text = fs::read_to_string(&matrix).unwrap();
    text.push('\n');
    fs::write(&matrix, text).unwrap();
    let err = run_pipeline(&cfg, &[Stage::Matrix], RunOptions::default()).unwrap_err();
    assert!(matches!(
        err.downcast_ref(),
        Some(PipelineError::DigestMismatch {
            stage: "matrix",
            ..
        })
    ));
    let forced = run_pipeline(
        &cfg,
        &[Stage::Matrix],
        RunOptions {
            force: true,
            ..RunOptions::default()
        },
    )
    .unwrap();
    assert_eq!(forced.stage("matrix").unwrap().status, StageStatus::Ran);
}

#[test]
fn changed_parameters_rerun_the_stage_and_downstream() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = setup(dir.path());
    let stages = [Stage::Ingest, Stage::Matrix, Stage::Score, Stage::Map];
    run_pipeline(&cfg, &stages, RunOptions::default()).unwrap();
    cfg.seeds.map += 1;
    let m = run_pipeline(&cfg, &stages, RunOptions::default()).unwrap();
    let status: Vec<StageStatus> = m.stages.iter().map(|s| s.status).collect();
    assert_eq!(
        status,
        [
            StageStatus::CacheHit,
            StageStatus::CacheHit,
            StageStatus::CacheHit,
            StageStatus::Ran
        ]
    );
}

#[test]
fn missing_contradiction_cache_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = setup(dir.path());
    cfg.oracle.cache_path = None;
    let err = run_pipeline(&cfg, &Stage::ALL, RunOptions::default()).unwrap_err();
    assert!(
        matches!(err.downcast_ref(), Some(PipelineError::Config(m)) if m.contains("precompute"))
    );
    assert_eq!(exit_code(&err), EXIT_VALIDATION);
}

#[test]
fn stage_names_parse() {
    assert_eq!(
        Stage::parse_list("ingest, emit-training,eval").unwrap(),
        [Stage::Ingest, Stage::EmitTraining, Stage::Eval]
    );
    assert!(
        matches!(Stage::parse_list("ingest,bogus"), Err(PipelineError::UnknownStage(s)) if s == "bogus")
    );
}
