use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use crisisnews_core::annotation::{
    aggregate_all, category_counts, fleiss_kappa, labels_by_worker, read_gold, read_worker_labels, trust_filter,
    write_aggregated, AggregatedLabel, Sentiment, Sympathy, WorkerLabel,
};
use crisisnews_core::corpus::{Event, Region};
use serde::{Deserialize, Serialize};

use super::{Pipeline, StageCtx};
use crate::error::Result;
use crate::manifest::Stage;

/// A sliced tweet with a resolved crowd label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub tweet_id: String,
    pub slice: String,
    pub event: Event,
    pub region: Region,
    pub lang: String,
    pub sympathy: Sympathy,
    pub sentiment: Sentiment,
    pub retweet_count: u64,
    pub user_followers: u64,
    pub in_sample: bool,
    pub text: String,
}

pub fn read_labeled(path: &Path) -> Result<Vec<LabeledRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    Ok(reader.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementRow {
    pub lang: String,
    pub tweets: usize,
    pub label: String,
    /// Mean plurality share among trusted answers, in percent.
    pub agreement_pct: f64,
    /// Over the first three trusted answers per tweet; `None` when undefined.
    pub fleiss_kappa: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustSummary {
    pub cutoff: f64,
    pub workers: usize,
    pub trusted: Vec<String>,
    pub accuracy: BTreeMap<String, f64>,
    pub aggregated: usize,
    pub unresolved: usize,
    pub insufficient: usize,
    pub warnings: Vec<String>,
}

fn kappa<T: PartialEq + Copy>(items: &[Vec<T>], cats: &[T]) -> Option<f64> {
    fleiss_kappa(&category_counts(items, cats, 3)).ok().filter(|k| k.is_finite())
}

fn agreement(rows: &[LabeledRow], labels: &BTreeMap<&str, &AggregatedLabel>, answers: &BTreeMap<&str, Vec<&WorkerLabel>>) -> Vec<AgreementRow> {
    let mut by_lang: BTreeMap<&str, Vec<&LabeledRow>> = BTreeMap::new();
    for r in rows {
        by_lang.entry(r.lang.as_str()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (lang, rows) in by_lang {
        let agg: Vec<&AggregatedLabel> = rows.iter().map(|r| labels[r.tweet_id.as_str()]).collect();
        let first3 = |r: &&LabeledRow| -> Vec<&WorkerLabel> { answers[r.tweet_id.as_str()].iter().take(3).copied().collect() };
        let symp: Vec<Vec<Sympathy>> = rows.iter().map(|r| first3(r).iter().filter_map(|l| l.sympathy).collect()).collect();
        let sent: Vec<Vec<Sentiment>> = rows.iter().map(|r| first3(r).iter().filter_map(|l| l.sentiment).collect()).collect();
        let n = rows.len() as f64;
        out.push(AgreementRow {
            lang: lang.to_string(),
            tweets: rows.len(),
            label: "Sentiment".into(),
            agreement_pct: 100.0 * agg.iter().map(|a| a.sentiment_agreement).sum::<f64>() / n,
            fleiss_kappa: kappa(&sent, &Sentiment::ALL),
        });
        out.push(AgreementRow {
            lang: lang.to_string(),
            tweets: rows.len(),
            label: "Sympathy".into(),
            agreement_pct: 100.0 * agg.iter().map(|a| a.sympathy_agreement).sum::<f64>() / n,
            fleiss_kappa: kappa(&symp, &[Sympathy::Unsympathetic, Sympathy::Sympathetic]),
        });
    }
    out
}

pub fn aggregate(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let worker_labels = read_worker_labels(&p.cfg.inputs.worker_labels)?;
    let gold = read_gold(&p.cfg.inputs.gold)?;
    cx.input("worker_labels", worker_labels.len());
    cx.input("gold_items", gold.len());
    let by_worker = labels_by_worker(&worker_labels);
    let trust = trust_filter(&by_worker, &gold, p.cfg.thresholds.trust);
    for w in &trust.warnings {
        cx.note(w.clone());
    }
    let agg = aggregate_all(&worker_labels, Some(&trust.trusted));
    write_aggregated(&cx.path("labels.csv")?, &agg.labels)?;
    let unresolved = agg.labels.iter().filter(|l| l.resolved().is_none()).count();
    cx.output("aggregated", agg.labels.len());
    cx.output("unresolved", unresolved);

    let labels: BTreeMap<&str, &AggregatedLabel> = agg.labels.iter().map(|l| (l.tweet_id.as_str(), l)).collect();
    let sample_dir = p.stage_dir(Stage::Sample);
    let mut rows = Vec::new();
    for slice in p.read_slices(Stage::Slice)? {
        let label = slice.label();
        let sampled = crisisnews_core::corpus::read_slice(&sample_dir.join(format!("{label}.jsonl")))?;
        let sampled: BTreeSet<&str> = sampled.tweets.iter().map(|t| t.id.as_str()).collect();
        let before = rows.len();
        for t in &slice.tweets {
            let Some((sympathy, sentiment)) = labels.get(t.id.as_str()).and_then(|l| l.resolved()) else {
                continue;
            };
            rows.push(LabeledRow {
                tweet_id: t.id.clone(),
                slice: label.clone(),
                event: slice.event.expect("tagged slice"),
                region: slice.media_region.expect("tagged slice"),
                lang: t.lang.clone().unwrap_or_default(),
                sympathy,
                sentiment,
                retweet_count: t.retweet_count,
                user_followers: t.user_followers,
                in_sample: sampled.contains(t.id.as_str()),
                text: t.text.clone(),
            });
        }
        cx.output(format!("labeled.{label}"), rows.len() - before);
    }
    let mut w = csv::Writer::from_path(cx.path("labeled.csv")?)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(crate::manifest::io_err(&cx.dir))?;

    let mut answers: BTreeMap<&str, Vec<&WorkerLabel>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for l in worker_labels.iter().filter(|l| trust.trusted.contains(&l.worker_id)) {
        if seen.insert((l.tweet_id.as_str(), l.worker_id.as_str())) && !l.not_applicable {
            answers.entry(l.tweet_id.as_str()).or_default().push(l);
        }
    }
    cx.write_json("agreement.json", &agreement(&rows, &labels, &answers))?;
    cx.write_json(
        "trust.json",
        &TrustSummary {
            cutoff: p.cfg.thresholds.trust,
            workers: by_worker.len(),
            trusted: trust.trusted.iter().cloned().collect(),
            accuracy: trust.accuracy.clone(),
            aggregated: agg.labels.len(),
            unresolved,
            insufficient: agg.insufficient.len(),
            warnings: trust.warnings.clone(),
        },
    )
}
