//! Stage records and the run manifest.
//!
//! Each stage directory holds a `stage.json` naming the config hash it ran
//! under and the digest of every file it wrote. Upstream checks compare
//! against those records, so a deleted or edited output is caught before a
//! downstream stage reads it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::config::sha256_file;
use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
#[value(rename_all = "lowercase")]
pub enum Stage {
    Ingest,
    Filter,
    Dedup,
    Langgate,
    Slice,
    Sample,
    Aggregate,
    Stats,
    Embed,
    Train,
    Predict,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 12] = [
        Stage::Ingest,
        Stage::Filter,
        Stage::Dedup,
        Stage::Langgate,
        Stage::Slice,
        Stage::Sample,
        Stage::Aggregate,
        Stage::Stats,
        Stage::Embed,
        Stage::Train,
        Stage::Predict,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Filter => "filter",
            Stage::Dedup => "dedup",
            Stage::Langgate => "langgate",
            Stage::Slice => "slice",
            Stage::Sample => "sample",
            Stage::Aggregate => "aggregate",
            Stage::Stats => "stats",
            Stage::Embed => "embed",
            Stage::Train => "train",
            Stage::Predict => "predict",
            Stage::Report => "report",
        }
    }

    /// Stages whose outputs this one reads directly. The report reads
    /// whatever is there and omits the rest.
    pub fn depends_on(self) -> &'static [Stage] {
        match self {
            Stage::Ingest | Stage::Report => &[],
            Stage::Filter => &[Stage::Ingest],
            Stage::Dedup => &[Stage::Filter],
            Stage::Langgate => &[Stage::Dedup],
            Stage::Slice => &[Stage::Langgate],
            Stage::Sample => &[Stage::Slice],
            Stage::Aggregate => &[Stage::Sample],
            Stage::Stats => &[Stage::Aggregate],
            Stage::Embed => &[Stage::Slice],
            Stage::Train => &[Stage::Embed, Stage::Aggregate],
            Stage::Predict => &[Stage::Train],
        }
    }

    /// Every transitive upstream stage, in pipeline order.
    pub fn ancestors(self) -> Vec<Stage> {
        let mut marked = [false; 12];
        let mut stack = self.depends_on().to_vec();
        while let Some(s) = stack.pop() {
            if !marked[s as usize] {
                marked[s as usize] = true;
                stack.extend_from_slice(s.depends_on());
            }
        }
        Stage::ALL.into_iter().filter(|s| marked[*s as usize]).collect()
    }

    pub fn is_classifier(self) -> bool {
        matches!(self, Stage::Embed | Stage::Train | Stage::Predict)
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| format!("unknown stage {s:?}"))
    }
}

pub const RECORD_FILE: &str = "stage.json";

/// Contents of `stage.json`. Holds nothing that varies between identical
/// runs, so stage directories can be compared byte for byte.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub inputs: BTreeMap<String, usize>,
    pub outputs: BTreeMap<String, usize>,
    /// Path relative to the stage directory, then SHA-256 of the contents.
    pub files: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

pub fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Files under `dir`, relative and sorted, skipping the stage record.
pub fn list_files(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in fs::read_dir(dir).map_err(io_err(dir))? {
            let path = entry.map_err(io_err(dir))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).expect("walk stays under root");
                let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                if rel != RECORD_FILE {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

pub fn hash_files(dir: &Path) -> Result<BTreeMap<String, String>> {
    list_files(dir)?.into_iter().map(|rel| Ok((rel.clone(), sha256_file(&dir.join(&rel))?))).collect()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone, PartialEq)]
pub enum RecordStatus {
    Current(StageRecord),
    Missing,
    Stale(String),
}

/// Whether the outputs in `dir` are present, unmodified and produced under
/// `config_hash`.
pub fn check_record(dir: &Path, config_hash: &str) -> RecordStatus {
    let path = dir.join(RECORD_FILE);
    if !path.is_file() {
        return RecordStatus::Missing;
    }
    let record: StageRecord = match read_json(&path) {
        Ok(r) => r,
        Err(e) => return RecordStatus::Stale(format!("unreadable {RECORD_FILE}: {e}")),
    };
    if record.config_hash != config_hash {
        return RecordStatus::Stale("produced under a different configuration".into());
    }
    for (rel, digest) in &record.files {
        let file = dir.join(rel);
        if !file.is_file() {
            return RecordStatus::Missing;
        }
        match sha256_file(&file) {
            Ok(d) if &d == digest => {}
            _ => return RecordStatus::Stale(format!("{rel} was modified")),
        }
    }
    RecordStatus::Current(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub stage: Stage,
    pub inputs: BTreeMap<String, usize>,
    pub outputs: BTreeMap<String, usize>,
    pub seeds: BTreeMap<String, u64>,
    /// Output files, relative to the output directory.
    pub files: Vec<String>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub core_version: String,
    pub config_hash: String,
    pub master_seed: u64,
    pub input_hashes: BTreeMap<String, String>,
    /// One entry per stage that ran, in pipeline order.
    pub stages: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(config_hash: &str, master_seed: u64, input_hashes: BTreeMap<String, String>) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: crisisnews_core::VERSION.to_string(),
            config_hash: config_hash.to_string(),
            master_seed,
            input_hashes,
            stages: Vec::new(),
        }
    }

    /// The manifest already in `out`, or a fresh one when there is none or
    /// it belongs to another configuration.
    pub fn load_or_new(out: &Path, fresh: RunManifest) -> RunManifest {
        match read_json::<RunManifest>(&out.join(MANIFEST_FILE)) {
            Ok(m) if m.config_hash == fresh.config_hash && m.master_seed == fresh.master_seed => m,
            _ => fresh,
        }
    }

    pub fn upsert(&mut self, entry: ManifestEntry) {
        self.stages.retain(|e| e.stage != entry.stage);
        self.stages.push(entry);
        self.stages.sort_by_key(|e| e.stage);
    }

    pub fn save(&self, out: &Path) -> Result<PathBuf> {
        let path = out.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ancestors_are_transitive_and_ordered() {
        assert_eq!(Stage::Stats.ancestors()[..3], [Stage::Ingest, Stage::Filter, Stage::Dedup]);
        assert_eq!(Stage::Stats.ancestors().len(), 7);
        let train = Stage::Train.ancestors();
        assert!(train.contains(&Stage::Embed) && train.contains(&Stage::Aggregate));
        assert!(!train.contains(&Stage::Stats));
        assert!(Stage::Ingest.ancestors().is_empty());
        assert!(Stage::Report.ancestors().is_empty());
    }

    #[test]
    fn names_round_trip() {
        for s in Stage::ALL {
            assert_eq!(s.as_str().parse::<Stage>().unwrap(), s);
        }
        assert!("dedupe".parse::<Stage>().is_err());
    }

    #[test]
    fn upsert_keeps_one_entry_per_stage_in_order() {
        let mut m = RunManifest::new("h", 1, BTreeMap::new());
        let entry = |stage, secs| ManifestEntry {
            stage,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seeds: BTreeMap::new(),
            files: vec![],
            wall_clock_secs: secs,
        };
        m.upsert(entry(Stage::Dedup, 1.0));
        m.upsert(entry(Stage::Ingest, 1.0));
        m.upsert(entry(Stage::Dedup, 2.0));
        let stages: Vec<Stage> = m.stages.iter().map(|e| e.stage).collect();
        assert_eq!(stages, [Stage::Ingest, Stage::Dedup]);
        assert_eq!(m.stages[1].wall_clock_secs, 2.0);
    }

    #[test]
    fn record_check_detects_edits_and_deletions() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.txt"), "one").unwrap();
        let record = StageRecord {
            stage: "dedup".into(),
            config_hash: "h".into(),
            files: hash_files(dir.path()).unwrap(),
            ..StageRecord::default()
        };
        write_json(&dir.path().join(RECORD_FILE), &record).unwrap();
        assert!(matches!(check_record(dir.path(), "h"), RecordStatus::Current(_)));
        assert!(matches!(check_record(dir.path(), "other"), RecordStatus::Stale(_)));
        fs::write(dir.path().join("a.txt"), "two").unwrap();
        assert!(matches!(check_record(dir.path(), "h"), RecordStatus::Stale(_)));
        fs::remove_file(dir.path().join("a.txt")).unwrap();
        assert_eq!(check_record(dir.path(), "h"), RecordStatus::Missing);
    }
}
