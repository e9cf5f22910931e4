use std::collections::BTreeMap;

use crisisnews_core::corpus::{
    filter_by_accounts, filter_by_terms, ingest_jsonl, language_gate, near_dedup, read_accounts, read_slice,
    remove_retweets, stratified_day_sample, temporal_slice, write_slice, CorpusError, CorpusSlice, Event,
    IngestReport, NaiveBayesIdentifier,
};
use crisisnews_core::rng::derive_seed;
use serde::Serialize;

use super::{slice_keys, slice_label, Pipeline, StageCtx};
use crate::error::{PipelineError, Result};
use crate::manifest::Stage;

fn write(cx: &StageCtx, rel: &str, slice: &CorpusSlice) -> Result<()> {
    Ok(write_slice(&cx.path(rel)?, slice)?)
}

pub fn ingest(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let schema = p.cfg.inputs.schema.map();
    let mut reports: BTreeMap<String, IngestReport> = BTreeMap::new();
    for event in Event::ALL {
        let (slice, report) = ingest_jsonl(p.cfg.inputs.tweets.get(event), &schema)?;
        let slice = slice.tagged(Some(event), None);
        cx.input(format!("{event}.lines"), report.lines);
        cx.output(event.to_string(), slice.len());
        if report.malformed > 0 {
            cx.note(format!("{event}: skipped {} malformed lines", report.malformed));
        }
        if report.duplicate_ids > 0 {
            cx.note(format!("{event}: dropped {} repeated tweet ids", report.duplicate_ids));
        }
        write(cx, &format!("{event}.jsonl"), &slice)?;
        reports.insert(event.to_string(), report);
    }
    cx.write_json("ingest.json", &reports)
}

pub fn filter(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let accounts = read_accounts(&p.cfg.inputs.accounts)?;
    cx.input("accounts", accounts.len());
    let ingest_dir = p.stage_dir(Stage::Ingest);
    for event in Event::ALL {
        let corpus = read_slice(&ingest_dir.join(format!("{event}.jsonl")))?;
        cx.input(event.to_string(), corpus.len());
        let originals = remove_retweets(&corpus);
        cx.output(format!("{event}.without_retweets"), originals.len());
        let terms = p.cfg.events.get(event).terms(event);
        for (e, region) in slice_keys().into_iter().filter(|k| k.0 == event) {
            let group: Vec<_> = accounts.iter().filter(|a| a.region == region).cloned().collect();
            let by_account = match filter_by_accounts(&originals, &group) {
                Err(CorpusError::EmptyAccounts) => {
                    return Err(PipelineError::Data(format!("the account list has no {region} accounts")))
                }
                other => other?,
            };
            let kept = filter_by_terms(&by_account, &terms).tagged(Some(e), Some(region));
            let label = slice_label(e, region);
            cx.output(label.clone(), kept.len());
            write(cx, &format!("{label}.jsonl"), &kept)?;
        }
    }
    Ok(())
}

/// Apply `f` to each of the four slices written by `from`.
fn per_slice(
    p: &Pipeline,
    cx: &mut StageCtx,
    from: Stage,
    mut f: impl FnMut(&mut StageCtx, &str, CorpusSlice) -> Result<CorpusSlice>,
) -> Result<()> {
    for slice in p.read_slices(from)? {
        let label = slice.label();
        cx.input(label.clone(), slice.len());
        let kept = f(cx, &label, slice)?;
        cx.output(label.clone(), kept.len());
        write(cx, &format!("{label}.jsonl"), &kept)?;
    }
    Ok(())
}

pub fn dedup(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let threshold = p.cfg.thresholds.dedup;
    per_slice(p, cx, Stage::Filter, |_, _, s| Ok(near_dedup(&s, threshold)?))
}

#[derive(Serialize)]
struct GateSummary {
    accepted: usize,
    review: usize,
    dropped_spanish: usize,
    language_counts: BTreeMap<String, usize>,
}

pub fn langgate(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let identifier = NaiveBayesIdentifier::builtin();
    let min_conf = p.cfg.thresholds.language;
    let mut summary = BTreeMap::new();
    per_slice(p, cx, Stage::Dedup, |cx, label, s| {
        let gate = language_gate(&s, &identifier, min_conf);
        if !gate.review.is_empty() {
            cx.note(format!("{label}: {} tweets below confidence {min_conf} queued for review", gate.review.len()));
        }
        write(cx, &format!("review/{label}.jsonl"), &gate.review)?;
        summary.insert(
            label.to_string(),
            GateSummary {
                accepted: gate.accepted.len(),
                review: gate.review.len(),
                dropped_spanish: gate.dropped_spanish,
                language_counts: gate.language_counts,
            },
        );
        Ok(gate.accepted)
    })?;
    cx.write_json("languages.json", &summary)
}

pub fn slice(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    per_slice(p, cx, Stage::Langgate, |_, _, s| {
        let event = s.event.expect("slices are tagged with their event");
        Ok(temporal_slice(&s, &p.cfg.events.get(event).window()))
    })
}

pub fn sample(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let target = p.cfg.sampling.target;
    let mut sheet = csv::Writer::from_path(cx.path("to_annotate.csv")?)?;
    sheet.write_record(["tweet_id", "slice", "lang", "text"])?;
    for s in p.read_slices(Stage::Slice)? {
        let label = s.label();
        let seed = match p.cfg.sampling.seed {
            Some(seed) => derive_seed(seed, &label),
            None => p.seed(&format!("sample/{label}")),
        };
        cx.record.seeds.insert(label.clone(), seed);
        cx.input(label.clone(), s.len());
        let drawn = match stratified_day_sample(&s, target, seed) {
            Err(CorpusError::EmptyCorpus) => {
                cx.note(format!("{label}: slice is empty, nothing to sample"));
                s.clone()
            }
            other => other?,
        };
        if s.len() < target && !s.is_empty() {
            cx.note(format!("{label}: {} tweets, fewer than the target {target}; all are kept", s.len()));
        }
        for t in &drawn.tweets {
            sheet.write_record([t.id.as_str(), &label, t.lang.as_deref().unwrap_or(""), &t.text])?;
        }
        cx.output(label.clone(), drawn.len());
        write(cx, &format!("{label}.jsonl"), &drawn)?;
    }
    sheet.flush().map_err(crate::manifest::io_err(&cx.dir))?;
    Ok(())
}
