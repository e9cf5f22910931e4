use std::collections::BTreeMap;

use chrono::{DurationRound, TimeDelta};
use crisisnews_core::annotation::{Sentiment, Sympathy};
use crisisnews_core::corpus::{aligned_hourly_volume, hourly_volume, CorpusSlice, Event, Region};
use crisisnews_core::stats::{
    chi_square_independence, chi_square_yates, cramers_v, downsample_fisher, evaluate_predictions, holdout_split,
    logistic_fit, mann_whitney, spearman, ClassificationMetrics, ContingencyTable, DownsampleConfig,
    FisherCombination, LogisticModel, MannWhitney, MannWhitneyOptions, StatsError, TestResult, YatesResult,
};
use serde::{Deserialize, Serialize};

use super::labels::{read_labeled, LabeledRow};
use super::{slice_label, Pipeline, StageCtx};
use crate::error::Result;
use crate::manifest::Stage;

/// Region × event volume test over the sliced tweets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageResult {
    /// Rows Western, Arab; columns Beirut, Paris.
    pub counts: [[u64; 2]; 2],
    pub yates: Option<YatesResult>,
}

/// Hourly co-movement of the two regions' coverage of one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalResult {
    pub event: Event,
    pub hours: usize,
    /// Spearman ρ of the normalized Western and Arab hourly series.
    pub spearman: Option<TestResult>,
    /// χ² of the region × hour count table, over hours with any tweet.
    pub independence: Option<TestResult>,
    pub cramers_v: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownsampleSummary {
    pub sample_size: usize,
    pub runs: usize,
    pub combination: FisherCombination,
    /// Mean Z over the runs; negative when Western scores are lower.
    pub mean_z: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionBias {
    pub western_mean: f64,
    pub arab_mean: f64,
    /// Western scores as the first sample.
    pub mann_whitney: MannWhitney,
    pub downsampled: Option<DownsampleSummary>,
}

/// Western against Arab crowd labels for one event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasTest {
    pub event: Event,
    pub western_n: usize,
    pub arab_n: usize,
    pub sympathy: Option<DimensionBias>,
    pub sentiment: Option<DimensionBias>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub train_n: usize,
    pub test_n: usize,
    pub model: LogisticModel,
    pub metrics: ClassificationMetrics<Sympathy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationResult {
    pub n: usize,
    pub sympathy_retweets: Option<TestResult>,
    pub sentiment_retweets: Option<TestResult>,
    pub followers_retweets: Option<TestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOutput {
    pub coverage: CoverageResult,
    pub temporal: Vec<TemporalResult>,
    pub bias: Vec<BiasTest>,
    pub logistic: Option<LogisticModel>,
    pub holdout: Option<HoldoutResult>,
    pub propagation: PropagationResult,
}

fn optional<T>(cx: &mut StageCtx, what: &str, r: std::result::Result<T, StatsError>) -> Option<T> {
    r.map_err(|e| cx.note(format!("{what}: {e}"))).ok()
}

fn coverage(cx: &mut StageCtx, slices: &BTreeMap<(Event, Region), CorpusSlice>) -> CoverageResult {
    let mut counts = [[0u64; 2]; 2];
    for (&(e, r), s) in slices {
        counts[r as usize][e as usize] = s.len() as u64;
    }
    let table = ContingencyTable::new(counts.iter().map(|r| r.to_vec()).collect()).map(|t| {
        t.with_names(&["western", "arab"], &["beirut", "paris"])
    });
    let yates = optional(cx, "coverage test", table.and_then(|t| chi_square_yates(&t)));
    CoverageResult { counts, yates }
}

fn write_hourly(p: &Pipeline, cx: &StageCtx, s: &CorpusSlice) -> Result<()> {
    let event = s.event.expect("tagged slice");
    let origin = p.cfg.events.get(event).start.duration_trunc(TimeDelta::hours(1)).expect("hour truncation");
    let mut w = csv::Writer::from_path(cx.path(&format!("hourly/{}.csv", s.label()))?)?;
    w.write_record(["hour", "hours_since_start", "tweets", "normalized"])?;
    for (hour, count) in hourly_volume(s, false) {
        let norm = count / s.len() as f64;
        w.write_record([
            hour.format("%Y-%m-%dT%H:00:00Z").to_string(),
            (hour - origin).num_hours().to_string(),
            count.to_string(),
            norm.to_string(),
        ])?;
    }
    w.flush().map_err(crate::manifest::io_err(&cx.dir))?;
    Ok(())
}

fn temporal(cx: &mut StageCtx, event: Event, western: &CorpusSlice, arab: &CorpusSlice) -> TemporalResult {
    let normalized = aligned_hourly_volume(western, arab, true);
    let (w, a): (Vec<f64>, Vec<f64>) = normalized.iter().map(|(_, w, a)| (*w, *a)).unzip();
    let rho = if western.is_empty() || arab.is_empty() {
        cx.note(format!("{event}: a slice is empty, no hourly correlation"));
        None
    } else {
        optional(cx, &format!("{event} hourly correlation"), spearman(&w, &a))
    };
    let counts: Vec<(u64, u64)> = aligned_hourly_volume(western, arab, false)
        .iter()
        .map(|(_, w, a)| (*w as u64, *a as u64))
        .filter(|(w, a)| w + a > 0)
        .collect();
    let table = ContingencyTable::new(vec![counts.iter().map(|c| c.0).collect(), counts.iter().map(|c| c.1).collect()]);
    let (independence, v) = match table {
        Ok(t) if t.cols() >= 2 => (
            optional(cx, &format!("{event} region x hour test"), chi_square_independence(&t)),
            optional(cx, &format!("{event} region x hour association"), cramers_v(&t)),
        ),
        _ => {
            cx.note(format!("{event}: fewer than two occupied hours, no region x hour association"));
            (None, None)
        }
    };
    TemporalResult { event, hours: normalized.len(), spearman: rho, independence, cramers_v: v }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn dimension(
    p: &Pipeline,
    cx: &mut StageCtx,
    what: &str,
    western: &[f64],
    arab: &[f64],
    sample_size: usize,
) -> Option<DimensionBias> {
    if western.is_empty() || arab.is_empty() {
        cx.note(format!("{what}: no labelled tweets on one side"));
        return None;
    }
    let options = MannWhitneyOptions { continuity_correction: p.cfg.stats.continuity_correction, ..MannWhitneyOptions::default() };
    let mw = optional(cx, what, mann_whitney(western, arab, &options))?;
    let seed = p.seed(&format!("downsample/{what}"));
    cx.record.seeds.insert(format!("downsample/{what}"), seed);
    let config = DownsampleConfig { runs: p.cfg.stats.downsample_runs, seed, sample_size: Some(sample_size), mann_whitney: options };
    let downsampled = optional(cx, &format!("{what} downsampling"), downsample_fisher(western, arab, &config)).map(|d| {
        DownsampleSummary {
            sample_size: d.sample_size,
            runs: d.per_run_p.len(),
            combination: d.combination,
            mean_z: mean(&d.per_run_z),
            warnings: d.warnings,
        }
    });
    Some(DimensionBias { western_mean: mean(western), arab_mean: mean(arab), mann_whitney: mw, downsampled })
}

fn bias(p: &Pipeline, cx: &mut StageCtx, rows: &[LabeledRow], event: Event, sample_size: usize) -> BiasTest {
    let side = |region: Region| -> Vec<&LabeledRow> { rows.iter().filter(|r| r.event == event && r.region == region).collect() };
    let (w, a) = (side(Region::Western), side(Region::Arab));
    let scores = |rows: &[&LabeledRow], f: fn(&LabeledRow) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
    let symp = |r: &LabeledRow| r.sympathy.score();
    let sent = |r: &LabeledRow| r.sentiment.score();
    BiasTest {
        event,
        western_n: w.len(),
        arab_n: a.len(),
        sympathy: dimension(p, cx, &format!("{event}/sympathy"), &scores(&w, symp), &scores(&a, symp), sample_size),
        sentiment: dimension(p, cx, &format!("{event}/sentiment"), &scores(&w, sent), &scores(&a, sent), sample_size),
    }
}

fn holdout(p: &Pipeline, cx: &mut StageCtx, rows: &[LabeledRow]) -> Option<HoldoutResult> {
    let seed = p.seed("holdout");
    cx.record.seeds.insert("holdout".into(), seed);
    let (train, test) = optional(cx, "holdout split", holdout_split(rows.len(), p.cfg.stats.holdout_fraction, seed))?;
    let pick = |idx: &[usize]| -> (Vec<Sentiment>, Vec<Sympathy>) { idx.iter().map(|&i| (rows[i].sentiment, rows[i].sympathy)).unzip() };
    let (x_train, y_train) = pick(&train);
    let (x_test, y_test) = pick(&test);
    let model = optional(cx, "holdout logistic fit", logistic_fit(&x_train, &y_train))?;
    let pred: Vec<Sympathy> = x_test.iter().map(|&s| model.predict(s)).collect();
    let metrics = optional(cx, "holdout metrics", evaluate_predictions(&pred, &y_test))?;
    Some(HoldoutResult { train_n: train.len(), test_n: test.len(), model, metrics })
}

fn propagation(cx: &mut StageCtx, rows: &[LabeledRow]) -> PropagationResult {
    let retweets: Vec<f64> = rows.iter().map(|r| r.retweet_count as f64).collect();
    let column = |f: fn(&LabeledRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    PropagationResult {
        n: rows.len(),
        sympathy_retweets: optional(cx, "sympathy vs retweets", spearman(&column(|r| r.sympathy.score()), &retweets)),
        sentiment_retweets: optional(cx, "sentiment vs retweets", spearman(&column(|r| r.sentiment.score()), &retweets)),
        followers_retweets: optional(cx, "followers vs retweets", spearman(&column(|r| r.user_followers as f64), &retweets)),
    }
}

pub fn stats(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let slices: BTreeMap<(Event, Region), CorpusSlice> = p
        .read_slices(Stage::Slice)?
        .into_iter()
        .map(|s| ((s.event.expect("tagged slice"), s.media_region.expect("tagged slice")), s))
        .collect();
    for (&(e, r), s) in &slices {
        cx.input(slice_label(e, r), s.len());
        write_hourly(p, cx, s)?;
    }
    let rows = read_labeled(&p.stage_dir(Stage::Aggregate).join("labeled.csv"))?;
    cx.input("labeled", rows.len());

    let coverage = coverage(cx, &slices);
    let temporal = Event::ALL
        .into_iter()
        .map(|e| temporal(cx, e, &slices[&(e, Region::Western)], &slices[&(e, Region::Arab)]))
        .collect();

    let smallest = slices
        .keys()
        .map(|&(e, r)| rows.iter().filter(|row| row.event == e && row.region == r).count())
        .min()
        .unwrap_or(0);
    let sample_size = p.cfg.stats.downsample_size.unwrap_or(smallest).max(1);
    cx.output("downsample_size", sample_size);
    let bias = Event::ALL.into_iter().map(|e| bias(p, cx, &rows, e, sample_size)).collect();

    let (sentiment, sympathy): (Vec<Sentiment>, Vec<Sympathy>) = rows.iter().map(|r| (r.sentiment, r.sympathy)).unzip();
    let logistic = optional(cx, "logistic fit", logistic_fit(&sentiment, &sympathy));
    let holdout = holdout(p, cx, &rows);
    let propagation = propagation(cx, &rows);
    cx.write_json("stats.json", &StatsOutput { coverage, temporal, bias, logistic, holdout, propagation })
}
