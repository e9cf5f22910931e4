mod common;

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use common::{pipeline, synthetic_config, tree, workspace_root};
use crisisnews::manifest::{RunManifest, MANIFEST_FILE};
use crisisnews::{Overrides, PipelineError, Stage};
use tempfile::TempDir;

/// One full run shared by the read-only tests.
fn full_run() -> &'static Path {
    static RUN: OnceLock<TempDir> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        pipeline(dir.path(), Overrides::default()).run().unwrap();
        dir
    })
    .path()
}

#[test]
fn bundled_data_is_the_generator_output() {
    let dir = TempDir::new().unwrap();
    crisisnews::synthetic::generate(dir.path(), crisisnews::synthetic::DEFAULT_SEED).unwrap();
    let fresh = tree(dir.path());
    let bundled = tree(&workspace_root().join("data/synthetic"));
    assert_eq!(fresh.keys().collect::<Vec<_>>(), bundled.keys().collect::<Vec<_>>());
    for (name, bytes) in &fresh {
        assert!(bundled[name] == *bytes, "data/synthetic/{name} differs from the generator output");
    }
}

#[test]
fn full_run_records_every_stage() {
    let out = full_run();
    let manifest: RunManifest = serde_json::from_slice(&fs::read(out.join(MANIFEST_FILE)).unwrap()).unwrap();
    let stages: Vec<Stage> = manifest.stages.iter().map(|e| e.stage).collect();
    assert_eq!(stages, Stage::ALL.to_vec());
    assert_eq!(manifest.input_hashes.len(), 5);
    for name in ["agreement", "coverage", "sympathy_bias", "logistic", "balanced_accuracy", "sympathy_ratio", "propagation"] {
        assert!(out.join(format!("report/{name}.md")).is_file(), "{name}.md");
        assert!(out.join(format!("report/{name}.csv")).is_file(), "{name}.csv");
    }
    assert_eq!(tree(&out.join("report/hourly")).len(), 4);
}

#[test]
fn report_matches_golden_files() {
    let report = tree(&full_run().join("report"));
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let md: Vec<(&String, &Vec<u8>)> = report.iter().filter(|(k, _)| k.ends_with(".md")).collect();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::create_dir_all(&golden).unwrap();
        for (name, bytes) in &md {
            fs::write(golden.join(name), bytes).unwrap();
        }
        return;
    }
    for (name, bytes) in md {
        let want = fs::read_to_string(golden.join(name)).unwrap_or_else(|_| panic!("missing golden {name}; run with UPDATE_GOLDEN=1"));
        assert_eq!(String::from_utf8_lossy(bytes), want, "{name}");
    }
}

#[test]
fn rerunning_a_stage_reproduces_its_files() {
    let dir = TempDir::new().unwrap();
    let p = pipeline(dir.path(), Overrides { no_classifier: true, ..Overrides::default() });
    p.run().unwrap();
    let before = tree(dir.path().join("stages").as_path());
    for stage in [Stage::Sample, Stage::Aggregate, Stage::Stats] {
        p.run_stage(stage).unwrap();
    }
    let after = tree(dir.path().join("stages").as_path());
    assert!(before == after, "stage outputs changed on rerun");
}

#[test]
fn missing_and_modified_upstream_outputs_are_refused() {
    let dir = TempDir::new().unwrap();
    let p = pipeline(dir.path(), Overrides::default());
    for stage in [Stage::Ingest, Stage::Filter, Stage::Dedup] {
        p.run_stage(stage).unwrap();
    }
    fs::remove_dir_all(dir.path().join("stages/dedup")).unwrap();
    let err = p.run_stage(Stage::Stats).unwrap_err();
    assert!(matches!(&err, PipelineError::MissingUpstream { required, .. } if required == "dedup"), "{err}");
    assert!(err.to_string().contains("dedup"));

    let filtered = dir.path().join("stages/filter/beirut-arab.jsonl");
    let mut text = fs::read_to_string(&filtered).unwrap();
    text.push('\n');
    fs::write(&filtered, text).unwrap();
    let err = p.run_stage(Stage::Dedup).unwrap_err();
    assert!(matches!(&err, PipelineError::StaleUpstream { required, .. } if required == "filter"), "{err}");
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn changed_config_marks_outputs_stale() {
    let dir = TempDir::new().unwrap();
    pipeline(dir.path(), Overrides::default()).run_stage(Stage::Ingest).unwrap();
    let other = pipeline(dir.path(), Overrides { sample_target: Some(10), ..Overrides::default() });
    let err = other.run_stage(Stage::Filter).unwrap_err();
    assert!(matches!(err, PipelineError::StaleUpstream { .. }), "{err}");
}

#[test]
fn disabled_classifier_omits_its_tables() {
    let dir = TempDir::new().unwrap();
    let p = pipeline(dir.path(), Overrides { no_classifier: true, ..Overrides::default() });
    let records = p.run().unwrap();
    assert!(records.iter().all(|r| !["embed", "train", "predict"].contains(&r.stage.as_str())));
    let report = fs::read_to_string(dir.path().join("report/report.md")).unwrap();
    assert!(report.contains("the classifier is disabled, so stage `train` did not run"), "{report}");
    assert!(report.contains("the classifier is disabled, so stage `predict` did not run"), "{report}");
    assert!(!dir.path().join("report/balanced_accuracy.md").exists());
    assert!(dir.path().join("report/logistic.md").is_file());
    assert!(matches!(p.run_stage(Stage::Train), Err(PipelineError::Usage(_))));
}

fn cli(args: &[&str], out: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_crisisnews"))
        .args(args)
        .env("CRISISNEWS_OUTPUT_DIR", out)
        .output()
        .unwrap()
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let config = synthetic_config();
    let config = config.to_str().unwrap();
    assert_eq!(cli(&["--help"], dir.path()).status.code(), Some(0));
    assert_eq!(cli(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(cli(&["validate-config", "-c", config], dir.path()).status.code(), Some(0));
    assert_eq!(cli(&["validate-config", "-c", "/nonexistent.toml"], dir.path()).status.code(), Some(1));

    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(config).unwrap().replace("folds = 10", "folds = 1");
    fs::write(&bad, text.replace("../", &format!("{}/", workspace_root().display()))).unwrap();
    let out = cli(&["validate-config", "-c", bad.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));

    let out = cli(&["stage", "stats", "-c", config], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ingest"));
    let out = cli(&["stage", "ingest", "-c", config], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("stages/ingest/stage.json").is_file());
}
