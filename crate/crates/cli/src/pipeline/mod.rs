//! The stage DAG: upstream checks, per-stage output directories and the
//! run manifest.

mod analysis;
mod labels;
mod models;
mod preprocess;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crisisnews_core::corpus::{read_slice, CorpusSlice, Event, Region};
use crisisnews_core::rng::derive_seed;

pub use analysis::{
    BiasTest, CoverageResult, DimensionBias, DownsampleSummary, HoldoutResult, PropagationResult, StatsOutput,
    TemporalResult,
};
pub use labels::{read_labeled, AgreementRow, LabeledRow, TrustSummary};
pub use models::{LanguageModelSummary, SliceRatio, TrainSummary};

use crate::config::{sha256_file, PipelineConfig};
use crate::error::{PipelineError, Result};
use crate::manifest::{
    check_record, hash_files, io_err, write_json, ManifestEntry, RecordStatus, RunManifest, Stage, StageRecord,
    RECORD_FILE,
};

/// The four event × media-region slices, in report order.
pub fn slice_keys() -> [(Event, Region); 4] {
    [
        (Event::Beirut, Region::Western),
        (Event::Beirut, Region::Arab),
        (Event::Paris, Region::Western),
        (Event::Paris, Region::Arab),
    ]
}

pub fn slice_label(event: Event, region: Region) -> String {
    format!("{event}-{region}")
}

/// Working state of one stage while it runs.
pub struct StageCtx {
    pub dir: PathBuf,
    pub record: StageRecord,
}

impl StageCtx {
    /// Path of an output file, creating its parent directories.
    pub fn path(&self, rel: &str) -> Result<PathBuf> {
        let p = self.dir.join(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        Ok(p)
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{}: {msg}", self.record.stage);
        self.record.notes.push(msg);
    }

    pub fn input(&mut self, key: impl Into<String>, n: usize) {
        self.record.inputs.insert(key.into(), n);
    }

    pub fn output(&mut self, key: impl Into<String>, n: usize) {
        self.record.outputs.insert(key.into(), n);
    }

    pub fn write_json<T: serde::Serialize>(&self, rel: &str, value: &T) -> Result<()> {
        write_json(&self.path(rel)?, value)
    }
}

pub struct Pipeline {
    pub cfg: PipelineConfig,
    pub config_hash: String,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        cfg.validate()?;
        let config_hash = cfg.hash()?;
        Ok(Self { cfg, config_hash })
    }

    pub fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    pub fn stage_dir(&self, stage: Stage) -> PathBuf {
        match stage {
            Stage::Report => self.out().join("report"),
            s => self.out().join("stages").join(s.as_str()),
        }
    }

    pub fn seed(&self, label: &str) -> u64 {
        derive_seed(self.cfg.seed, label)
    }

    pub fn status(&self, stage: Stage) -> RecordStatus {
        check_record(&self.stage_dir(stage), &self.config_hash)
    }

    /// Fails on the first upstream stage, in pipeline order, whose outputs
    /// are missing or stale.
    pub fn require(&self, stage: Stage) -> Result<()> {
        for up in stage.ancestors() {
            match self.status(up) {
                RecordStatus::Current(_) => {}
                RecordStatus::Missing => {
                    return Err(PipelineError::MissingUpstream { stage: stage.to_string(), required: up.to_string() })
                }
                RecordStatus::Stale(reason) => {
                    return Err(PipelineError::StaleUpstream {
                        stage: stage.to_string(),
                        required: up.to_string(),
                        reason,
                    })
                }
            }
        }
        Ok(())
    }

    /// Every stage in order; the classifier stages are left out when the
    /// classifier is disabled.
    pub fn run(&self) -> Result<Vec<StageRecord>> {
        Stage::ALL
            .into_iter()
            .filter(|s| self.cfg.classifier.enabled || !s.is_classifier())
            .map(|s| self.run_stage(s))
            .collect()
    }

    pub fn run_stage(&self, stage: Stage) -> Result<StageRecord> {
        if stage.is_classifier() && !self.cfg.classifier.enabled {
            return Err(PipelineError::Usage(format!("stage `{stage}` needs the classifier, which is disabled")));
        }
        self.require(stage)?;
        let dir = self.stage_dir(stage);
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io_err(&dir))?;
        }
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        log::info!("stage {stage}: start");
        let started = Instant::now();
        let mut cx = StageCtx {
            dir: dir.clone(),
            record: StageRecord { stage: stage.to_string(), config_hash: self.config_hash.clone(), ..StageRecord::default() },
        };
        match stage {
            Stage::Ingest => preprocess::ingest(self, &mut cx),
            Stage::Filter => preprocess::filter(self, &mut cx),
            Stage::Dedup => preprocess::dedup(self, &mut cx),
            Stage::Langgate => preprocess::langgate(self, &mut cx),
            Stage::Slice => preprocess::slice(self, &mut cx),
            Stage::Sample => preprocess::sample(self, &mut cx),
            Stage::Aggregate => labels::aggregate(self, &mut cx),
            Stage::Stats => analysis::stats(self, &mut cx),
            Stage::Embed => models::embed(self, &mut cx),
            Stage::Train => models::train(self, &mut cx),
            Stage::Predict => models::predict(self, &mut cx),
            Stage::Report => crate::report::emit(self, &mut cx),
        }?;
        cx.record.files = hash_files(&dir)?;
        write_json(&dir.join(RECORD_FILE), &cx.record)?;
        let secs = started.elapsed().as_secs_f64();
        log::info!("stage {stage}: done in {secs:.2}s");
        self.update_manifest(stage, &cx.record, secs)?;
        Ok(cx.record)
    }

    fn update_manifest(&self, stage: Stage, record: &StageRecord, secs: f64) -> Result<()> {
        let mut input_hashes = BTreeMap::new();
        for (name, p) in self.cfg.input_paths() {
            input_hashes.insert(name.to_string(), sha256_file(p)?);
        }
        let fresh = RunManifest::new(&self.config_hash, self.cfg.seed, input_hashes);
        let mut manifest = RunManifest::load_or_new(self.out(), fresh);
        let rel_dir = self.stage_dir(stage);
        let rel_dir = rel_dir.strip_prefix(self.out()).unwrap_or(&rel_dir);
        manifest.upsert(ManifestEntry {
            stage,
            inputs: record.inputs.clone(),
            outputs: record.outputs.clone(),
            seeds: record.seeds.clone(),
            files: record.files.keys().map(|f| format!("{}/{f}", rel_dir.display())).collect(),
            wall_clock_secs: secs,
        });
        manifest.save(self.out())?;
        Ok(())
    }

    /// The four slices written by `stage`.
    pub fn read_slices(&self, stage: Stage) -> Result<Vec<CorpusSlice>> {
        let dir = self.stage_dir(stage);
        slice_keys().iter().map(|&(e, r)| Ok(read_slice(&dir.join(format!("{}.jsonl", slice_label(e, r))))?)).collect()
    }
}
