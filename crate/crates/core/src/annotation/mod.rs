//! Crowd label aggregation and agreement statistics.

mod io;
mod kappa;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{read_gold, read_worker_labels, write_aggregated};
pub use kappa::{category_counts, cohen_kappa, cohen_kappa_with_categories, fleiss_kappa, CohenKappa, Weighting};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("tweet {tweet_id}: need at least 3 labels, got {got}")]
    TooFewLabels { tweet_id: String, got: usize },
    #[error("labels passed to majority_vote belong to more than one tweet ({0} and {1})")]
    MixedTweets(String, String),
    #[error("ragged count matrix: row {row} has {got} entries, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("rating vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} items, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("statistic undefined: {0}")]
    Undefined(String),
    #[error("label {0:?} is not among the supplied categories")]
    UnknownCategory(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sympathy {
    Unsympathetic,
    Sympathetic,
}

/// Ordered scale, so linear-weighted kappa can use the derived `Ord`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sentiment {
    Negative,
    Neutral,
    Positive,
}

impl Sympathy {
    pub fn as_str(self) -> &'static str {
        match self {
            Sympathy::Sympathetic => "sympathetic",
            Sympathy::Unsympathetic => "unsympathetic",
        }
    }

    /// 1 for sympathetic, 0 otherwise; the ordinal used by the rank tests.
    pub fn score(self) -> f64 {
        match self {
            Sympathy::Sympathetic => 1.0,
            Sympathy::Unsympathetic => 0.0,
        }
    }
}

impl Sentiment {
    pub const ALL: [Sentiment; 3] = [Sentiment::Negative, Sentiment::Neutral, Sentiment::Positive];

    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Negative => "negative",
            Sentiment::Neutral => "neutral",
            Sentiment::Positive => "positive",
        }
    }

    pub fn score(self) -> f64 {
        match self {
            Sentiment::Negative => -1.0,
            Sentiment::Neutral => 0.0,
            Sentiment::Positive => 1.0,
        }
    }
}

impl fmt::Display for Sympathy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sympathy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sympathetic" | "symp" | "1" | "yes" | "true" => Ok(Sympathy::Sympathetic),
            "unsympathetic" | "unsymp" | "0" | "no" | "false" => Ok(Sympathy::Unsympathetic),
            other => Err(format!("unknown sympathy label {other:?}")),
        }
    }
}

impl FromStr for Sentiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "negative" | "neg" | "-1" => Ok(Sentiment::Negative),
            "neutral" | "neu" | "0" => Ok(Sentiment::Neutral),
            "positive" | "pos" | "1" => Ok(Sentiment::Positive),
            other => Err(format!("unknown sentiment label {other:?}")),
        }
    }
}

/// One worker's judgment of one tweet. Labels are `None` only when the
/// worker ticked "not applicable".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkerLabel {
    pub tweet_id: String,
    pub worker_id: String,
    pub sympathy: Option<Sympathy>,
    pub sentiment: Option<Sentiment>,
    pub not_applicable: bool,
}

impl WorkerLabel {
    pub fn new(tweet_id: &str, worker_id: &str, sympathy: Sympathy, sentiment: Sentiment) -> Self {
        Self {
            tweet_id: tweet_id.to_string(),
            worker_id: worker_id.to_string(),
            sympathy: Some(sympathy),
            sentiment: Some(sentiment),
            not_applicable: false,
        }
    }

    pub fn not_applicable(tweet_id: &str, worker_id: &str) -> Self {
        Self {
            tweet_id: tweet_id.to_string(),
            worker_id: worker_id.to_string(),
            sympathy: None,
            sentiment: None,
            not_applicable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldItem {
    pub tweet_id: String,
    pub sympathy: Sympathy,
    pub sentiment: Sentiment,
}

/// Final label of one tweet.
///
/// `n_workers` counts the labels that were not "not applicable". The two
/// agreement fractions are plurality size over `n_workers` for each
/// dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregatedLabel {
    pub tweet_id: String,
    pub sympathy: Option<Sympathy>,
    pub sentiment: Option<Sentiment>,
    pub n_workers: usize,
    pub sympathy_agreement: f64,
    pub sentiment_agreement: f64,
    pub unresolved: bool,
}

impl AggregatedLabel {
    /// Both labels, when the tweet is usable downstream.
    pub fn resolved(&self) -> Option<(Sympathy, Sentiment)> {
        match (self.unresolved, self.sympathy, self.sentiment) {
            (false, Some(s), Some(t)) => Some((s, t)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrustOutcome {
    pub trusted: BTreeSet<String>,
    /// Gold accuracy of every worker with at least one gold answer.
    pub accuracy: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Workers whose joint (sympathy, sentiment) accuracy on gold items is at
/// least `cutoff`. A "not applicable" answer to a gold item counts as a miss.
pub fn trust_filter(workers: &BTreeMap<String, Vec<WorkerLabel>>, gold: &[GoldItem], cutoff: f64) -> TrustOutcome {
    let gold: BTreeMap<&str, &GoldItem> = gold.iter().map(|g| (g.tweet_id.as_str(), g)).collect();
    let mut out = TrustOutcome::default();
    for (worker, answers) in workers {
        let graded: Vec<bool> = answers
            .iter()
            .filter_map(|a| {
                gold.get(a.tweet_id.as_str()).map(|g| {
                    !a.not_applicable && a.sympathy == Some(g.sympathy) && a.sentiment == Some(g.sentiment)
                })
            })
            .collect();
        if graded.is_empty() {
            let msg = format!("worker {worker} answered no gold items and is excluded");
            log::warn!("{msg}");
            out.warnings.push(msg);
            continue;
        }
        let acc = graded.iter().filter(|&&m| m).count() as f64 / graded.len() as f64;
        out.accuracy.insert(worker.clone(), acc);
        // 7/10 must land on the inclusive side of 0.7
        if acc + 1e-12 >= cutoff {
            out.trusted.insert(worker.clone());
        }
    }
    out
}

/// Group labels by worker, the shape `trust_filter` expects.
pub fn labels_by_worker(labels: &[WorkerLabel]) -> BTreeMap<String, Vec<WorkerLabel>> {
    let mut map: BTreeMap<String, Vec<WorkerLabel>> = BTreeMap::new();
    for l in labels {
        map.entry(l.worker_id.clone()).or_default().push(l.clone());
    }
    map
}

/// Strict plurality winner and its size; `None` on a tie for first place.
fn plurality<T: Ord + Copy>(values: impl Iterator<Item = T>) -> (Option<T>, usize) {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in values {
        *counts.entry(v).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let mut winners = counts.iter().filter(|(_, &c)| c == best);
    match (winners.next(), winners.next()) {
        (Some((&v, _)), None) => (Some(v), best),
        _ => (None, best),
    }
}

/// Aggregate the labels of a single tweet.
///
/// A majority of "not applicable" answers, fewer than three remaining
/// labels, or a tie in either dimension marks the tweet unresolved.
pub fn majority_vote(labels: &[WorkerLabel]) -> Result<AggregatedLabel, AnnotationError> {
    let tweet_id = labels.first().map(|l| l.tweet_id.clone()).unwrap_or_default();
    if labels.len() < 3 {
        return Err(AnnotationError::TooFewLabels { tweet_id, got: labels.len() });
    }
    if let Some(other) = labels.iter().find(|l| l.tweet_id != tweet_id) {
        return Err(AnnotationError::MixedTweets(tweet_id, other.tweet_id.clone()));
    }
    let na = labels.iter().filter(|l| l.not_applicable).count();
    let valid: Vec<&WorkerLabel> = labels.iter().filter(|l| !l.not_applicable).collect();
    let n_workers = valid.len();
    let (sympathy, symp_size) = plurality(valid.iter().filter_map(|l| l.sympathy));
    let (sentiment, sent_size) = plurality(valid.iter().filter_map(|l| l.sentiment));
    let frac = |size: usize| if n_workers == 0 { 0.0 } else { size as f64 / n_workers as f64 };
    let unresolved = 2 * na > labels.len() || n_workers < 3 || sympathy.is_none() || sentiment.is_none();
    Ok(AggregatedLabel {
        tweet_id,
        sympathy,
        sentiment,
        n_workers,
        sympathy_agreement: frac(symp_size),
        sentiment_agreement: frac(sent_size),
        unresolved,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregation {
    /// One entry per tweet with at least three trusted labels, ordered by tweet id.
    pub labels: Vec<AggregatedLabel>,
    /// Tweets left with fewer than three trusted labels.
    pub insufficient: Vec<String>,
}

/// Majority-vote every tweet, keeping only labels from `trusted` workers when
/// a set is given. Repeat answers by the same worker keep the first.
pub fn aggregate_all(labels: &[WorkerLabel], trusted: Option<&BTreeSet<String>>) -> Aggregation {
    let mut by_tweet: BTreeMap<&str, Vec<WorkerLabel>> = BTreeMap::new();
    let mut seen: BTreeSet<(&str, &str)> = BTreeSet::new();
    for l in labels {
        if trusted.is_some_and(|t| !t.contains(&l.worker_id)) {
            continue;
        }
        if !seen.insert((&l.tweet_id, &l.worker_id)) {
            continue;
        }
        by_tweet.entry(&l.tweet_id).or_default().push(l.clone());
    }
    let mut out = Aggregation::default();
    for (tweet, group) in by_tweet {
        match majority_vote(&group) {
            Ok(agg) => out.labels.push(agg),
            Err(_) => out.insufficient.push(tweet.to_string()),
        }
    }
    out
}
