use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AggregatedLabel, AnnotationError, GoldItem, Sentiment, Sympathy, WorkerLabel};

#[derive(Deserialize)]
struct WorkerRow {
    tweet_id: String,
    worker_id: String,
    #[serde(default)]
    sympathy: String,
    #[serde(default)]
    sentiment: String,
    #[serde(default)]
    na: String,
}

#[derive(Deserialize)]
struct GoldRow {
    tweet_id: String,
    sympathy: String,
    sentiment: String,
}

#[derive(Serialize)]
struct AggregatedRow<'a> {
    tweet_id: &'a str,
    sympathy: &'a str,
    sentiment: &'a str,
    n_workers: usize,
    sympathy_agreement: f64,
    sentiment_agreement: f64,
    unresolved: bool,
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "0" | "false" | "no" => Ok(false),
        "1" | "true" | "yes" => Ok(true),
        other => Err(format!("unknown boolean {other:?}")),
    }
}

/// Read worker labels from CSV with columns `tweet_id, worker_id, sympathy,
/// sentiment, na`. Rows with `na` set may leave both labels blank.
pub fn read_worker_labels(path: &Path) -> Result<Vec<WorkerLabel>, AnnotationError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<WorkerRow>() {
        let row = row?;
        let line = out.len() as u64 + 2;
        let err = |m: String| AnnotationError::Parse { path: path.display().to_string(), line, message: m };
        let not_applicable = parse_bool(&row.na).map_err(err)?;
        let parse_opt = |s: &str, required: bool| -> Result<Option<String>, String> {
            if s.trim().is_empty() {
                if required {
                    Err("label missing on a row without the not-applicable flag".into())
                } else {
                    Ok(None)
                }
            } else {
                Ok(Some(s.to_string()))
            }
        };
        let sympathy = parse_opt(&row.sympathy, !not_applicable)
            .and_then(|s| s.map(|s| s.parse::<Sympathy>()).transpose())
            .map_err(err)?;
        let sentiment = parse_opt(&row.sentiment, !not_applicable)
            .and_then(|s| s.map(|s| s.parse::<Sentiment>()).transpose())
            .map_err(err)?;
        out.push(WorkerLabel {
            tweet_id: row.tweet_id,
            worker_id: row.worker_id,
            sympathy: if not_applicable { None } else { sympathy },
            sentiment: if not_applicable { None } else { sentiment },
            not_applicable,
        });
    }
    Ok(out)
}

/// Read gold items from CSV with columns `tweet_id, sympathy, sentiment`.
pub fn read_gold(path: &Path) -> Result<Vec<GoldItem>, AnnotationError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in reader.deserialize::<GoldRow>() {
        let row = row?;
        let line = out.len() as u64 + 2;
        let err = |m: String| AnnotationError::Parse { path: path.display().to_string(), line, message: m };
        out.push(GoldItem {
            tweet_id: row.tweet_id,
            sympathy: row.sympathy.parse().map_err(err)?,
            sentiment: row.sentiment.parse().map_err(err)?,
        });
    }
    Ok(out)
}

pub fn write_aggregated(path: &Path, labels: &[AggregatedLabel]) -> Result<(), AnnotationError> {
    let mut writer = csv::Writer::from_path(path)?;
    for l in labels {
        writer.serialize(AggregatedRow {
            tweet_id: &l.tweet_id,
            sympathy: l.sympathy.map_or("", Sympathy::as_str),
            sentiment: l.sentiment.map_or("", Sentiment::as_str),
            n_workers: l.n_workers,
            sympathy_agreement: l.sympathy_agreement,
            sentiment_agreement: l.sentiment_agreement,
            unresolved: l.unresolved,
        })?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn worker_csv_round() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "tweet_id,worker_id,sympathy,sentiment,na").unwrap();
        writeln!(f, "1,w1,sympathetic,positive,0").unwrap();
        writeln!(f, "1,w2,,,1").unwrap();
        let labels = read_worker_labels(f.path()).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0].sympathy, Some(Sympathy::Sympathetic));
        assert!(labels[1].not_applicable);
        assert_eq!(labels[1].sentiment, None);
    }

    #[test]
    fn missing_label_without_flag_is_an_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "tweet_id,worker_id,sympathy,sentiment,na").unwrap();
        writeln!(f, "1,w1,sympathetic,,0").unwrap();
        let err = read_worker_labels(f.path()).unwrap_err();
        assert!(matches!(err, AnnotationError::Parse { line: 2, .. }), "{err}");
    }
}
