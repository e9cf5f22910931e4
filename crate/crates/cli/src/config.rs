//! Pipeline configuration, read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the file.

use std::fs;
use std::path::{Component, Path, PathBuf};

use chrono::{DateTime, Utc};
use crisisnews_core::classifier::CnnConfig;
use crisisnews_core::corpus::{default_exclusion_terms, normalize_term, Event, SchemaMap, TimeWindow};
use crisisnews_core::embeddings::SgnsConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed; every stochastic step derives its own seed from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    pub events: Events,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub sampling: Sampling,
    #[serde(default)]
    pub stats: StatsSettings,
    /// The seed field is ignored; each language gets a derived seed.
    #[serde(default)]
    pub embedding: SgnsConfig,
    #[serde(default)]
    pub classifier: ClassifierSettings,
    #[serde(default)]
    pub report: ReportSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub tweets: PerEvent<PathBuf>,
    #[serde(default)]
    pub schema: Schema,
    pub accounts: PathBuf,
    pub worker_labels: PathBuf,
    pub gold: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerEvent<T> {
    pub beirut: T,
    pub paris: T,
}

impl<T> PerEvent<T> {
    pub fn get(&self, event: Event) -> &T {
        match event {
            Event::Beirut => &self.beirut,
            Event::Paris => &self.paris,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    #[default]
    Canonical,
    TwitterV1,
}

impl Schema {
    pub fn map(self) -> SchemaMap {
        match self {
            Schema::Canonical => SchemaMap::canonical(),
            Schema::TwitterV1 => SchemaMap::twitter_v1(),
        }
    }
}

pub type Events = PerEvent<EventSettings>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSettings {
    pub start: DateTime<Utc>,
    pub duration_days: f64,
    /// Defaults to the terms naming the other attack.
    #[serde(default)]
    pub exclude_terms: Option<Vec<String>>,
}

impl EventSettings {
    pub fn window(&self) -> TimeWindow {
        TimeWindow { start: self.start, duration_days: self.duration_days }
    }

    pub fn terms(&self, event: Event) -> Vec<String> {
        match &self.exclude_terms {
            Some(t) => t.iter().map(|t| normalize_term(t)).collect(),
            None => default_exclusion_terms(event),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub dedup: f64,
    pub language: f64,
    pub trust: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { dedup: 0.1, language: 0.95, trust: 0.7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sampling {
    pub target: usize,
    /// Overrides the seed derived from the master seed.
    pub seed: Option<u64>,
}

impl Default for Sampling {
    fn default() -> Self {
        Self { target: 1000, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSettings {
    pub downsample_runs: usize,
    /// Common size for the downsampling runs; defaults to the smallest
    /// labelled slice.
    pub downsample_size: Option<usize>,
    pub continuity_correction: bool,
    pub holdout_fraction: f64,
}

impl Default for StatsSettings {
    fn default() -> Self {
        Self { downsample_runs: 1000, downsample_size: None, continuity_correction: true, holdout_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub enabled: bool,
    pub languages: Vec<String>,
    pub folds: usize,
    /// Languages with fewer labelled tweets get no model.
    pub min_examples: usize,
    /// The seed field is ignored; each language gets a derived seed.
    pub cnn: CnnConfig,
}

impl Default for ClassifierSettings {
    fn default() -> Self {
        Self {
            enabled: true,
            languages: ["en", "ar", "fr", "de"].map(String::from).to_vec(),
            folds: 10,
            min_examples: 30,
            cnn: CnnConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSettings {
    /// Slices with fewer unlabelled tweets report the labelled ratio instead.
    pub min_unlabeled: usize,
}

impl Default for ReportSettings {
    fn default() -> Self {
        Self { min_unlabeled: 10 }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub sample_target: Option<usize>,
    pub downsample_runs: Option<usize>,
    pub no_classifier: bool,
}

pub const OUTPUT_DIR_ENV: &str = "CRISISNEWS_OUTPUT_DIR";

/// Join `p` onto `base` when relative, folding `.` and `..` lexically.
fn resolve(base: &Path, p: &mut PathBuf) {
    let joined = if p.is_relative() { base.join(&*p) } else { p.clone() };
    let mut out = PathBuf::new();
    for c in joined.components() {
        match c {
            Component::CurDir => {}
            Component::ParentDir if matches!(out.components().next_back(), Some(Component::Normal(_))) => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    *p = out;
}

impl PipelineConfig {
    pub fn from_toml(text: &str, base: &Path) -> std::result::Result<Self, String> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| e.to_string())?;
        for p in [
            &mut cfg.output_dir,
            &mut cfg.inputs.tweets.beirut,
            &mut cfg.inputs.tweets.paris,
            &mut cfg.inputs.accounts,
            &mut cfg.inputs.worker_labels,
            &mut cfg.inputs.gold,
        ] {
            resolve(base, p);
        }
        Ok(cfg)
    }

    /// Read `path`, then apply the output directory from the environment
    /// and finally the command-line overrides.
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let config_err = |message: String| PipelineError::Config { path: path.to_path_buf(), message };
        let text = fs::read_to_string(path).map_err(|e| config_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let mut cfg = Self::from_toml(&text, base).map_err(config_err)?;
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()) {
            cfg.output_dir = PathBuf::from(dir);
        }
        cfg.apply(overrides);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = dir.clone();
        }
        if let Some(t) = o.sample_target {
            self.sampling.target = t;
        }
        if let Some(r) = o.downsample_runs {
            self.stats.downsample_runs = r;
        }
        if o.no_classifier {
            self.classifier.enabled = false;
        }
    }

    /// Every problem found, so one run of `validate-config` lists them all.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, p) in self.input_paths() {
            if !p.is_file() {
                out.push(format!("inputs.{name}: {} does not exist", p.display()));
            }
        }
        let t = &self.thresholds;
        if !(t.dedup > 0.0 && t.dedup < 1.0) {
            out.push(format!("thresholds.dedup must lie in (0, 1), got {}", t.dedup));
        }
        if !(t.language > 0.0 && t.language <= 1.0) {
            out.push(format!("thresholds.language must lie in (0, 1], got {}", t.language));
        }
        if !(0.0..=1.0).contains(&t.trust) {
            out.push(format!("thresholds.trust must lie in [0, 1], got {}", t.trust));
        }
        for event in Event::ALL {
            let e = self.events.get(event);
            if !(e.duration_days > 0.0 && e.duration_days.is_finite()) {
                out.push(format!("events.{event}.duration_days must be positive, got {}", e.duration_days));
            }
        }
        if self.sampling.target == 0 {
            out.push("sampling.target must be positive".into());
        }
        let s = &self.stats;
        if s.downsample_runs == 0 {
            out.push("stats.downsample_runs must be positive".into());
        }
        if s.downsample_size == Some(0) {
            out.push("stats.downsample_size must be positive".into());
        }
        if !(s.holdout_fraction > 0.0 && s.holdout_fraction < 1.0) {
            out.push(format!("stats.holdout_fraction must lie in (0, 1), got {}", s.holdout_fraction));
        }
        let e = &self.embedding;
        if e.dim == 0 || e.window == 0 || e.epochs == 0 || e.min_count == 0 {
            out.push("embedding.dim, window, epochs and min_count must be positive".into());
        }
        if !(e.learning_rate > 0.0 && e.learning_rate.is_finite()) {
            out.push(format!("embedding.learning_rate must be positive, got {}", e.learning_rate));
        }
        let c = &self.classifier;
        if let Err(err) = c.cnn.validate() {
            out.push(format!("classifier.cnn: {err}"));
        }
        if c.cnn.embedding_dim != e.dim {
            out.push(format!("classifier.cnn.embedding_dim ({}) must equal embedding.dim ({})", c.cnn.embedding_dim, e.dim));
        }
        if c.cnn.num_classes != 2 {
            out.push("classifier.cnn.num_classes must be 2 (sympathetic, unsympathetic)".into());
        }
        if c.folds < 2 {
            out.push(format!("classifier.folds must be at least 2, got {}", c.folds));
        }
        for lang in &c.languages {
            if !["en", "ar", "fr", "de"].contains(&lang.as_str()) {
                out.push(format!("classifier.languages: unsupported language {lang:?}"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.problems();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::InvalidConfig(problems))
        }
    }

    pub fn input_paths(&self) -> [(&'static str, &Path); 5] {
        [
            ("tweets.beirut", &self.inputs.tweets.beirut),
            ("tweets.paris", &self.inputs.tweets.paris),
            ("accounts", &self.inputs.accounts),
            ("worker_labels", &self.inputs.worker_labels),
            ("gold", &self.inputs.gold),
        ]
    }

    /// SHA-256 over the configuration with the output directory dropped
    /// and every input path replaced by the digest of the file's contents,
    /// so the hash does not depend on where the run happens.
    pub fn hash(&self) -> Result<String> {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.embedding.seed = 0;
        view.classifier.cnn.seed = 0;
        view.classifier.enabled = true;
        let digests = self
            .input_paths()
            .map(|(_, p)| sha256_file(p).map(PathBuf::from))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let [b, p, a, w, g]: [PathBuf; 5] = digests.try_into().expect("five inputs");
        view.inputs.tweets.beirut = b;
        view.inputs.tweets.paris = p;
        view.inputs.accounts = a;
        view.inputs.worker_labels = w;
        view.inputs.gold = g;
        let bytes = serde_json::to_vec(&view)?;
        Ok(hex::encode(Sha256::digest(bytes)))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })?;
    Ok(hex::encode(Sha256::digest(bytes)))
}
