use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use chrono::{DateTime, NaiveDateTime, TimeZone, Utc};
use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CorpusError, CorpusSlice, TweetRecord};

/// Where each tweet field lives in a JSON record. Paths are dotted
/// (`user.id_str`); the first path that resolves to a non-null value wins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub id: Vec<String>,
    pub created_at: Vec<String>,
    pub text: Vec<String>,
    pub user_id: Vec<String>,
    #[serde(default)]
    pub user_followers: Vec<String>,
    #[serde(default)]
    pub retweet_count: Vec<String>,
    /// A boolean, or any non-null object (such as `retweeted_status`).
    #[serde(default)]
    pub is_retweet: Vec<String>,
    /// An array of strings or of `{"text": ...}` objects. When absent,
    /// hashtags are extracted from the text.
    #[serde(default)]
    pub hashtags: Vec<String>,
    #[serde(default)]
    pub lang: Vec<String>,
    #[serde(default)]
    pub lang_confidence: Vec<String>,
}

fn paths(p: &[&str]) -> Vec<String> {
    p.iter().map(|s| s.to_string()).collect()
}

impl SchemaMap {
    /// The flat layout written by [`super::write_slice`].
    pub fn canonical() -> Self {
        Self {
            id: paths(&["id"]),
            created_at: paths(&["created_at"]),
            text: paths(&["text"]),
            user_id: paths(&["user_id"]),
            user_followers: paths(&["user_followers"]),
            retweet_count: paths(&["retweet_count"]),
            is_retweet: paths(&["is_retweet"]),
            hashtags: paths(&["hashtags"]),
            lang: paths(&["lang"]),
            lang_confidence: paths(&["lang_confidence"]),
        }
    }

    /// Archived Twitter REST/streaming v1.1 objects. Twitter's own `lang`
    /// carries no confidence and is not imported.
    pub fn twitter_v1() -> Self {
        Self {
            id: paths(&["id_str", "id"]),
            created_at: paths(&["created_at"]),
            text: paths(&["extended_tweet.full_text", "full_text", "text"]),
            user_id: paths(&["user.id_str", "user.id"]),
            user_followers: paths(&["user.followers_count"]),
            retweet_count: paths(&["retweet_count"]),
            is_retweet: paths(&["retweeted_status"]),
            hashtags: paths(&["entities.hashtags"]),
            lang: Vec::new(),
            lang_confidence: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IngestReport {
    /// Non-blank lines read.
    pub lines: usize,
    pub malformed: usize,
    /// Records dropped because their id had been seen already.
    pub duplicate_ids: usize,
}

fn lookup<'a>(record: &'a Value, candidates: &[String]) -> Option<&'a Value> {
    candidates.iter().find_map(|path| {
        let v = path.split('.').try_fold(record, |v, key| v.get(key))?;
        (!v.is_null()).then_some(v)
    })
}

fn as_id(v: &Value) -> Option<String> {
    match v {
        Value::String(s) if !s.trim().is_empty() => Some(s.trim().to_string()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn as_count(v: &Value) -> Option<u64> {
    match v {
        Value::Number(n) => n.as_u64().or_else(|| n.as_f64().filter(|f| *f >= 0.0).map(|f| f as u64)),
        Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

fn hashtag_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"#([\p{L}\p{M}\p{N}_]+)").unwrap())
}

/// Hashtags written in `text`, lowercased, without the `#`.
pub(crate) fn hashtags_in(text: &str) -> Vec<String> {
    hashtag_regex().captures_iter(text).map(|c| c[1].to_lowercase()).collect()
}

/// Accepts the classic Twitter format (`Thu Nov 12 18:52:30 +0000 2015`),
/// RFC 3339, `YYYY-MM-DD HH:MM:SS` (read as UTC) and Unix epoch seconds or
/// milliseconds. Sub-second parts are dropped.
pub fn parse_timestamp(v: &Value) -> Option<DateTime<Utc>> {
    let from_epoch = |x: f64| {
        let secs = if x.abs() >= 1e11 { x / 1000.0 } else { x };
        Utc.timestamp_opt(secs.floor() as i64, 0).single()
    };
    let parsed = match v {
        Value::Number(n) => from_epoch(n.as_f64()?),
        Value::String(s) => {
            let s = s.trim();
            if let Ok(t) = DateTime::parse_from_str(s, "%a %b %d %H:%M:%S %z %Y") {
                Some(t.with_timezone(&Utc))
            } else if let Ok(t) = DateTime::parse_from_rfc3339(s) {
                Some(t.with_timezone(&Utc))
            } else if let Some(t) = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S UTC"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            {
                Some(t.and_utc())
            } else {
                s.parse::<f64>().ok().and_then(from_epoch)
            }
        }
        _ => None,
    }?;
    Utc.timestamp_opt(parsed.timestamp(), 0).single()
}

fn parse_record(line: &str, schema: &SchemaMap) -> Option<TweetRecord> {
    let record: Value = serde_json::from_str(line).ok()?;
    if !record.is_object() {
        return None;
    }
    let id = lookup(&record, &schema.id).and_then(as_id)?;
    let created_at = lookup(&record, &schema.created_at).and_then(parse_timestamp)?;
    let text = lookup(&record, &schema.text)?.as_str()?.to_string();
    let user_id = lookup(&record, &schema.user_id).and_then(as_id)?;
    let count = |p: &[String]| lookup(&record, p).and_then(as_count).unwrap_or(0);
    let is_retweet = match lookup(&record, &schema.is_retweet) {
        Some(Value::Bool(b)) => *b,
        Some(Value::Object(_)) => true,
        _ => false,
    };
    let hashtags = match lookup(&record, &schema.hashtags) {
        Some(Value::Array(items)) => items
            .iter()
            .filter_map(|h| match h {
                Value::String(s) => Some(s.trim_start_matches('#').to_lowercase()),
                Value::Object(o) => o.get("text").and_then(Value::as_str).map(str::to_lowercase),
                _ => None,
            })
            .collect(),
        _ => hashtags_in(&text),
    };
    let lang = lookup(&record, &schema.lang).and_then(Value::as_str).map(str::to_string);
    let lang_confidence = lang.as_ref().and(lookup(&record, &schema.lang_confidence)).and_then(Value::as_f64);
    Some(TweetRecord {
        id,
        created_at,
        text,
        user_id,
        user_followers: count(&schema.user_followers),
        retweet_count: count(&schema.retweet_count),
        is_retweet,
        hashtags,
        lang,
        lang_confidence,
    })
}

/// Read a JSON-lines tweet file. Blank lines are ignored; lines that fail to
/// parse or lack a required field (id, timestamp, text, user id) are counted
/// and skipped. More than half the lines malformed is an error.
pub fn ingest_jsonl(path: &Path, schema: &SchemaMap) -> Result<(CorpusSlice, IngestReport), CorpusError> {
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut report = IngestReport::default();
    let mut tweets = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        report.lines += 1;
        match parse_record(&line, schema) {
            Some(t) => tweets.push(t),
            None => report.malformed += 1,
        }
    }
    if 2 * report.malformed > report.lines {
        return Err(CorpusError::TooManyMalformed { malformed: report.malformed, total: report.lines });
    }
    if report.malformed > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), report.malformed);
    }
    let parsed = tweets.len();
    let slice = CorpusSlice::from_tweets(tweets);
    report.duplicate_ids = parsed - slice.len();
    let detail = serde_json::json!({
        "source": path.file_name().map(|n| n.to_string_lossy().into_owned()),
        "malformed": report.malformed,
        "duplicate_ids": report.duplicate_ids,
    });
    let slice = CorpusSlice::default().derive(slice.tweets, "ingest", detail);
    Ok((slice, report))
}
