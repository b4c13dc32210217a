mod common;

use anodec::config::{RunConfig, Setup};
use anodec::pipeline::{Manifest, Outcome, Run, Stage, CHECKPOINT, MANIFEST};
use anodec::PipelineError;
use anodec::formats::read_json;
use anodec_core::eval::Distribution;

fn files(run: &Run, stage: Stage) -> Vec<String> {
    let mut v: Vec<String> = std::fs::read_dir(run.stage_dir(stage))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

#[test]
fn collect_writes_six_trials_of_full_length() {
    for (setup, rows) in [(Setup::Unloaded, 501), (Setup::Loaded, 801)] {
        let dir = tempfile::tempdir().unwrap();
        let run = Run::open(dir.path(), RunConfig::preset(setup, true)).unwrap();
        assert_eq!(run.collect().unwrap(), Outcome::Ran);
        for i in 0..6 {
            let text = std::fs::read_to_string(run.stage_dir(Stage::Collect).join(format!("trial_{i}.csv"))).unwrap();
            assert_eq!(text.lines().count(), rows + 1);
        }
        let ds = run.load_dataset().unwrap();
        assert_eq!(ds.train().len(), 5);
        assert_eq!(ds.interaction_time(), if setup == Setup::Unloaded { 30.0 } else { 48.0 });
        let m: Manifest = read_json(&run.stage_dir(Stage::Collect).join(MANIFEST)).unwrap();
        assert_eq!(m.config_hash, run.config.hash());
        assert_eq!(m.seed, run.stage_seed(Stage::Collect));
        assert_eq!(m.files.len(), 6);
    }
}

#[test]
fn fresh_pipeline_produces_full_tree_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    let outcomes = run.pipeline(true).unwrap();
    assert!(outcomes.iter().all(|(_, o)| *o == Outcome::Ran));
    assert_eq!(files(&run, Stage::Collect).len(), 8);
    for stage in [Stage::TrainModel, Stage::TrainController] {
        let f = files(&run, stage);
        for name in [CHECKPOINT, "report.json", "loss.csv", MANIFEST] {
            assert!(f.contains(&name.to_string()), "{stage:?} lacks {name}");
        }
    }
    let suite = run.load_evaluation().unwrap();
    assert_eq!(suite.trials.len(), 2 * 4);
    assert_eq!(suite.summary.len(), 2 * Distribution::ALL.len());
    let disturbed = run.load_disturbed().unwrap().unwrap();
    assert_eq!(disturbed.trials.len(), 4);

    let again = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    assert!(again.pipeline(true).unwrap().iter().all(|(_, o)| *o == Outcome::Skipped));
}

#[test]
fn resume_after_model_skips_collection() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    run.collect().unwrap();
    run.train_model().unwrap();
    let before = std::fs::metadata(run.stage_dir(Stage::Collect).join(MANIFEST)).unwrap().modified().unwrap();
    let outcomes = run.pipeline(false).unwrap();
    assert_eq!(outcomes[0], (Stage::Collect, Outcome::Skipped));
    assert_eq!(outcomes[1], (Stage::TrainModel, Outcome::Skipped));
    assert_eq!(outcomes[2], (Stage::TrainController, Outcome::Ran));
    let after = std::fs::metadata(run.stage_dir(Stage::Collect).join(MANIFEST)).unwrap().modified().unwrap();
    assert_eq!(before, after);
}

#[test]
fn stages_require_their_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    assert!(matches!(run.train_model(), Err(PipelineError::Stage { .. })));
    assert!(matches!(run.evaluate(false), Err(PipelineError::Stage { .. })));
}

#[test]
fn directory_is_bound_to_its_config() {
    let dir = tempfile::tempdir().unwrap();
    Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    let mut other = common::tiny(Setup::Unloaded);
    other.seed = 1;
    let err = Run::open(dir.path(), other).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn tampered_outputs_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    run.collect().unwrap();
    let p = run.stage_dir(Stage::Collect).join("trial_2.csv");
    let mut text = std::fs::read_to_string(&p).unwrap();
    text.push_str("9,0,0,0\n");
    std::fs::write(&p, text).unwrap();
    assert!(run.collect().is_err());
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ra = Run::open(a.path(), common::tiny(Setup::Loaded)).unwrap();
    let rb = Run::open(b.path(), common::tiny(Setup::Loaded)).unwrap();
    ra.pipeline(false).unwrap();
    rb.pipeline(false).unwrap();
    for stage in Stage::ALL {
        let ma = std::fs::read(ra.stage_dir(stage).join(MANIFEST)).unwrap();
        let mb = std::fs::read(rb.stage_dir(stage).join(MANIFEST)).unwrap();
        assert_eq!(ma, mb, "{stage:?}");
    }
}

#[test]
fn stage_seeds_are_independent_of_each_other() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run::open(dir.path(), common::tiny(Setup::Unloaded)).unwrap();
    let seeds: Vec<u64> = Stage::ALL.iter().map(|s| run.stage_seed(*s)).collect();
    let mut unique = seeds.clone();
    unique.dedup();
    assert_eq!(unique.len(), 4);
}
