//! Tweet corpus ingestion and the preprocessing chain that turns raw event
//! collections into the four event x media-region datasets.

mod dedup;
mod filters;
mod ingest;
mod io;
mod langid;
mod temporal;

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dedup::{levenshtein, levenshtein_bounded, near_dedup};
pub use filters::{default_exclusion_terms, filter_by_accounts, filter_by_terms, normalize_term, remove_retweets};
pub use ingest::{ingest_jsonl, parse_timestamp, IngestReport, SchemaMap};
pub use io::{read_accounts, read_slice, write_slice};
pub use langid::{
    language_gate, GateOutcome, Identification, Language, LanguageIdentifier, NaiveBayesIdentifier, MIN_SEED_CHARS,
};
pub use temporal::{
    aligned_hourly_volume, day_bucket_draws, hourly_volume, stratified_day_sample, temporal_slice, TimeWindow,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{malformed} of {total} lines are malformed")]
    TooManyMalformed { malformed: usize, total: usize },
    #[error("account list is empty")]
    EmptyAccounts,
    #[error("duplicate account username {0:?}")]
    DuplicateUsername(String),
    #[error("threshold {0} outside (0, 1)")]
    InvalidThreshold(f64),
    #[error("window duration must be positive, got {0} days")]
    InvalidWindow(f64),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("sample target must be positive")]
    ZeroTarget,
    #[error("language identifier training: {0}")]
    Training(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Beirut,
    Paris,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Western,
    Arab,
}

impl Event {
    pub const ALL: [Event; 2] = [Event::Beirut, Event::Paris];

    pub fn as_str(self) -> &'static str {
        match self {
            Event::Beirut => "beirut",
            Event::Paris => "paris",
        }
    }
}

impl Region {
    pub const ALL: [Region; 2] = [Region::Western, Region::Arab];

    pub fn as_str(self) -> &'static str {
        match self {
            Region::Western => "western",
            Region::Arab => "arab",
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "beirut" => Ok(Event::Beirut),
            "paris" => Ok(Event::Paris),
            other => Err(format!("unknown event {other:?}")),
        }
    }
}

impl FromStr for Region {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "western" => Ok(Region::Western),
            "arab" => Ok(Region::Arab),
            other => Err(format!("unknown region {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    pub id: String,
    pub created_at: DateTime<Utc>,
    pub text: String,
    pub user_id: String,
    #[serde(default)]
    pub user_followers: u64,
    #[serde(default)]
    pub retweet_count: u64,
    #[serde(default)]
    pub is_retweet: bool,
    #[serde(default)]
    pub hashtags: Vec<String>,
    /// ISO 639-1 code.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<String>,
    /// Set only when `lang` was assigned by a language identifier.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang_confidence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsAccount {
    pub username: String,
    pub user_id: String,
    pub region: Region,
    pub country: String,
    pub follower_count: u64,
}

/// One applied filter: its name, parameters and the counts around it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub step: String,
    pub detail: serde_json::Value,
    pub input_count: usize,
    pub output_count: usize,
}

/// Tweets sorted by `(created_at, id)` with unique ids, plus the filters
/// that produced them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusSlice {
    pub event: Option<Event>,
    pub media_region: Option<Region>,
    pub tweets: Vec<TweetRecord>,
    pub provenance: Vec<FilterRecord>,
}

impl CorpusSlice {
    /// Sort by time and drop repeated ids, keeping each id's earliest record.
    pub fn from_tweets(mut tweets: Vec<TweetRecord>) -> Self {
        tweets.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        let mut seen = BTreeSet::new();
        tweets.retain(|t| seen.insert(t.id.clone()));
        Self { event: None, media_region: None, tweets, provenance: Vec::new() }
    }

    pub fn tagged(mut self, event: Option<Event>, region: Option<Region>) -> Self {
        self.event = event;
        self.media_region = region;
        self
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.tweets.iter().map(|t| t.id.as_str()).collect()
    }

    /// A slice with the same tags and provenance holding `tweets`, plus one
    /// new provenance entry for `step`.
    pub(crate) fn derive(&self, tweets: Vec<TweetRecord>, step: &str, detail: serde_json::Value) -> Self {
        let mut provenance = self.provenance.clone();
        provenance.push(FilterRecord {
            step: step.to_string(),
            detail,
            input_count: self.tweets.len(),
            output_count: tweets.len(),
        });
        Self { event: self.event, media_region: self.media_region, tweets, provenance }
    }

    /// Short label such as `beirut-western`.
    pub fn label(&self) -> String {
        match (self.event, self.media_region) {
            (Some(e), Some(r)) => format!("{e}-{r}"),
            (Some(e), None) => e.to_string(),
            (None, Some(r)) => r.to_string(),
            (None, None) => "corpus".to_string(),
        }
    }
}
