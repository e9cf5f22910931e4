use std::collections::BTreeMap;

use chrono::{DateTime, Duration, DurationRound, TimeZone, Utc};
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::{CorpusError, CorpusSlice};
use crate::rng::substream;

const DAY_SECS: i64 = 86_400;

/// Half-open interval `[start, start + duration_days)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start: DateTime<Utc>,
    pub duration_days: f64,
}

impl TimeWindow {
    pub fn new(start: DateTime<Utc>, duration_days: f64) -> Result<Self, CorpusError> {
        if !(duration_days > 0.0 && duration_days.is_finite()) {
            return Err(CorpusError::InvalidWindow(duration_days));
        }
        Ok(Self { start, duration_days })
    }

    /// Beirut coverage: first news tweet at 2015-11-12 18:52:30 UTC, 3.3 days.
    pub fn beirut() -> Self {
        Self { start: Utc.with_ymd_and_hms(2015, 11, 12, 18, 52, 30).unwrap(), duration_days: 3.3 }
    }

    /// Paris coverage: first news tweet at 2015-11-13 21:15:20 UTC, 3.22 days.
    pub fn paris() -> Self {
        Self { start: Utc.with_ymd_and_hms(2015, 11, 13, 21, 15, 20).unwrap(), duration_days: 3.22 }
    }

    pub fn end(&self) -> DateTime<Utc> {
        self.start + Duration::nanoseconds((self.duration_days * DAY_SECS as f64 * 1e9).round() as i64)
    }

    pub fn contains(&self, t: DateTime<Utc>) -> bool {
        self.start <= t && t < self.end()
    }
}

pub fn temporal_slice(corpus: &CorpusSlice, window: &TimeWindow) -> CorpusSlice {
    let kept = corpus.tweets.iter().filter(|t| window.contains(t.created_at)).cloned().collect();
    let detail = serde_json::json!({
        "start": window.start.to_rfc3339(),
        "end": window.end().to_rfc3339(),
        "duration_days": window.duration_days,
    });
    corpus.derive(kept, "temporal_slice", detail)
}

/// Per-bucket draw sizes for a target total.
///
/// Each bucket gets `round(size · target / total)`. The rounding residue is
/// then absorbed starting from the largest bucket (earliest on ties), moving
/// to the next largest only when a bucket is exhausted. A target at or above
/// the total returns every bucket whole.
pub fn day_bucket_draws(sizes: &[usize], target: usize) -> Vec<usize> {
    let total: usize = sizes.iter().sum();
    if target >= total {
        return sizes.to_vec();
    }
    let c = target as f64 / total as f64;
    let mut draws: Vec<usize> = sizes.iter().map(|&s| ((s as f64 * c).round() as usize).min(s)).collect();
    let mut by_size: Vec<usize> = (0..sizes.len()).collect();
    by_size.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut drawn: usize = draws.iter().sum();
    for &b in &by_size {
        if drawn < target {
            let add = (target - drawn).min(sizes[b] - draws[b]);
            draws[b] += add;
            drawn += add;
        } else if drawn > target {
            let cut = (drawn - target).min(draws[b]);
            draws[b] -= cut;
            drawn -= cut;
        }
    }
    draws
}

/// Sample `target_n` tweets spread proportionally over consecutive 24-hour
/// buckets measured from the earliest tweet. Bucket `b` draws from substream
/// `b` of `seed`; the result keeps time order.
pub fn stratified_day_sample(corpus: &CorpusSlice, target_n: usize, seed: u64) -> Result<CorpusSlice, CorpusError> {
    if target_n == 0 {
        return Err(CorpusError::ZeroTarget);
    }
    let first = corpus.tweets.first().ok_or(CorpusError::EmptyCorpus)?.created_at;
    let mut buckets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in corpus.tweets.iter().enumerate() {
        let b = ((t.created_at - first).num_seconds() / DAY_SECS) as usize;
        buckets.entry(b).or_default().push(i);
    }
    let n_buckets = buckets.keys().next_back().map_or(0, |b| b + 1);
    let members: Vec<Vec<usize>> = (0..n_buckets).map(|b| buckets.remove(&b).unwrap_or_default()).collect();
    let sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    let draws = day_bucket_draws(&sizes, target_n);
    let mut chosen = Vec::with_capacity(target_n.min(corpus.len()));
    for (b, (idx, &k)) in members.iter().zip(&draws).enumerate() {
        let mut rng = substream(seed, b as u64);
        chosen.extend(sample(&mut rng, idx.len(), k).into_iter().map(|j| idx[j]));
    }
    chosen.sort_unstable();
    let kept = chosen.into_iter().map(|i| corpus.tweets[i].clone()).collect();
    let detail = serde_json::json!({ "target": target_n, "seed": seed, "bucket_sizes": sizes, "draws": draws });
    Ok(corpus.derive(kept, "stratified_day_sample", detail))
}

fn hour_counts(corpus: &CorpusSlice) -> BTreeMap<DateTime<Utc>, usize> {
    let mut counts = BTreeMap::new();
    for t in &corpus.tweets {
        let hour = t.created_at.duration_trunc(Duration::hours(1)).expect("hour truncation");
        *counts.entry(hour).or_insert(0) += 1;
    }
    counts
}

fn hour_range(first: DateTime<Utc>, last: DateTime<Utc>) -> impl Iterator<Item = DateTime<Utc>> {
    let hours = (last - first).num_hours();
    (0..=hours).map(move |h| first + Duration::hours(h))
}

fn scale(count: usize, total: usize, normalize: bool) -> f64 {
    if normalize {
        count as f64 / total as f64
    } else {
        count as f64
    }
}

/// Tweets per UTC hour from the first to the last occupied hour, with empty
/// hours filled with zero. `normalize` divides by the slice total.
pub fn hourly_volume(corpus: &CorpusSlice, normalize: bool) -> Vec<(DateTime<Utc>, f64)> {
    let counts = hour_counts(corpus);
    let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    let total = corpus.len();
    hour_range(first, last).map(|h| (h, scale(counts.get(&h).copied().unwrap_or(0), total, normalize))).collect()
}

/// Two hourly series over the union of their hour ranges, each normalised
/// by its own total when `normalize` is set.
pub fn aligned_hourly_volume(a: &CorpusSlice, b: &CorpusSlice, normalize: bool) -> Vec<(DateTime<Utc>, f64, f64)> {
    let (ca, cb) = (hour_counts(a), hour_counts(b));
    let first = ca.keys().next().into_iter().chain(cb.keys().next()).min().copied();
    let last = ca.keys().next_back().into_iter().chain(cb.keys().next_back()).max().copied();
    let (Some(first), Some(last)) = (first, last) else {
        return Vec::new();
    };
    hour_range(first, last)
        .map(|h| {
            let va = scale(ca.get(&h).copied().unwrap_or(0), a.len(), normalize);
            let vb = scale(cb.get(&h).copied().unwrap_or(0), b.len(), normalize);
            (h, va, vb)
        })
        .collect()
}
