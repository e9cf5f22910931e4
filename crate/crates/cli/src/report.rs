//! Markdown and CSV report bundle built from the stage outputs.
//!
//! Every table is optional: when the stage it reads has not run, or its
//! outputs no longer match the configuration, the table is replaced by a
//! notice and the rest of the report is still written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;

use crisisnews_core::corpus::{Event, Region};
use crisisnews_core::stats::{Coefficient, TestResult};
use serde::de::DeserializeOwned;

use crate::error::Result;
use crate::manifest::{io_err, read_json, RecordStatus, Stage};
use crate::pipeline::{
    AgreementRow, DimensionBias, Pipeline, SliceRatio, StageCtx, StatsOutput, TrainSummary, slice_keys, slice_label,
};

/// File read by a table, relative to the output directory, with its digest.
type Source = (String, String);

struct Section {
    name: &'static str,
    title: &'static str,
    body: std::result::Result<Body, String>,
}

#[derive(Default)]
struct Body {
    markdown: String,
    csv: Vec<(String, Vec<String>, Vec<Vec<String>>)>,
    sources: Vec<Source>,
}

fn round(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s + 0.0
}

fn f3(x: f64) -> String {
    format!("{:.3}", round(x, 3))
}

fn pval(p: f64) -> String {
    if p == 0.0 {
        "< 1e-300".to_string()
    } else if p < 1e-3 {
        format!("{p:.2e}")
    } else {
        f3(p)
    }
}

fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

fn opt(x: Option<f64>, f: fn(f64) -> String) -> String {
    x.map_or_else(|| "n/a".to_string(), f)
}

fn raw(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Parsed `file` from `stage`, or the notice explaining why it is missing.
fn load<T: DeserializeOwned>(p: &Pipeline, stage: Stage, file: &str) -> std::result::Result<(T, Source), String> {
    if stage.is_classifier() && !p.cfg.classifier.enabled {
        return Err(format!("omitted: the classifier is disabled, so stage `{stage}` did not run"));
    }
    let record = match p.status(stage) {
        RecordStatus::Current(r) => r,
        RecordStatus::Missing => return Err(format!("omitted: stage `{stage}` has not run")),
        RecordStatus::Stale(reason) => return Err(format!("omitted: the output of stage `{stage}` is stale ({reason})")),
    };
    let Some(digest) = record.files.get(file) else {
        return Err(format!("omitted: stage `{stage}` wrote no {file}"));
    };
    let dir = p.stage_dir(stage);
    let value = read_json(&dir.join(file)).map_err(|e| format!("omitted: {e}"))?;
    let rel = dir.join(file);
    let rel = rel.strip_prefix(p.out()).unwrap_or(&rel).display().to_string();
    Ok((value, (rel, digest.clone())))
}

fn agreement(p: &Pipeline) -> std::result::Result<Body, String> {
    let (rows, source): (Vec<AgreementRow>, _) = load(p, Stage::Aggregate, "agreement.json")?;
    let md_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.lang.to_uppercase(),
                r.tweets.to_string(),
                r.label.clone(),
                format!("{:.1}", round(r.agreement_pct, 1)),
                opt(r.fleiss_kappa, f3),
            ]
        })
        .collect();
    let csv_rows = rows
        .iter()
        .map(|r| vec![r.lang.clone(), r.tweets.to_string(), r.label.clone(), r.agreement_pct.to_string(), raw(r.fleiss_kappa)])
        .collect();
    let mut md = md_table(&["Lang.", "# Tweets", "Label", "a=3 (%)", "Fleiss' Kappa"], &md_rows);
    md.push_str("\nAgreement is the mean share of trusted answers that match the majority label. ");
    md.push_str("Fleiss' kappa uses the first three trusted answers of each tweet.\n");
    Ok(Body {
        markdown: md,
        csv: vec![("agreement".into(), strings(&["lang", "tweets", "label", "agreement_pct", "fleiss_kappa"]), csv_rows)],
        sources: vec![source],
    })
}

fn coefficient_cell(c: &Coefficient) -> String {
    format!("{}{} ({})", f3(c.estimate), stars(c.p_value), f3(c.se))
}

fn logistic(p: &Pipeline) -> std::result::Result<Body, String> {
    let (stats, source): (StatsOutput, _) = load(p, Stage::Stats, "stats.json")?;
    let Some(m) = &stats.logistic else {
        return Err("omitted: the logistic model could not be fitted (see the stats stage notes)".into());
    };
    let rows = vec![
        vec!["Sentiment_NEUT".to_string(), coefficient_cell(&m.neutral)],
        vec!["Sentiment_POS".to_string(), coefficient_cell(&m.positive)],
        vec!["Intercept".to_string(), coefficient_cell(&m.intercept)],
        vec!["McFadden R²".to_string(), f3(m.mcfadden_r2)],
        vec!["Deviance".to_string(), format!("{:.1}", round(m.deviance, 1))],
        vec!["AIC".to_string(), format!("{:.1}", round(m.aic, 1))],
        vec!["N".to_string(), m.n.to_string()],
    ];
    let mut md = md_table(&["", "Sympathy"], &rows);
    md.push_str("\nCoefficient (standard error); * p < .05, ** p < .01, *** p < .001. Negative sentiment is the reference level.\n");
    let _ = writeln!(
        md,
        "\nAgainst the intercept-only model: χ²({}, N={}) = {:.1}, p = {}.",
        m.lr_df,
        m.n,
        round(m.lr_chi2, 1),
        pval(m.lr_p_value)
    );
    let mut csv_rows: Vec<Vec<String>> = [&m.neutral, &m.positive, &m.intercept]
        .iter()
        .map(|c| vec![c.name.clone(), c.estimate.to_string(), c.se.to_string(), c.z.to_string(), c.p_value.to_string()])
        .collect();
    let blank = || (String::new(), String::new(), String::new());
    for (name, v) in [
        ("mcfadden_r2", m.mcfadden_r2),
        ("deviance", m.deviance),
        ("null_deviance", m.null_deviance),
        ("aic", m.aic),
        ("lr_chi2", m.lr_chi2),
        ("lr_p_value", m.lr_p_value),
        ("n", m.n as f64),
    ] {
        let (a, b, c) = blank();
        csv_rows.push(vec![name.to_string(), v.to_string(), a, b, c]);
    }
    if let Some(h) = &stats.holdout {
        let symp = h.metrics.class(&crisisnews_core::annotation::Sympathy::Sympathetic);
        let _ = writeln!(
            md,
            "\nHeld-out evaluation ({} train, {} test): accuracy {}, balanced accuracy {}, sympathetic precision {}, recall {}.",
            h.train_n,
            h.test_n,
            f3(h.metrics.accuracy),
            f3(h.metrics.balanced_accuracy),
            opt(symp.and_then(|c| c.precision), f3),
            opt(symp.and_then(|c| c.recall), f3),
        );
        for (name, v) in [("holdout_accuracy", Some(h.metrics.accuracy)), ("holdout_balanced_accuracy", Some(h.metrics.balanced_accuracy))] {
            let (a, b, c) = blank();
            csv_rows.push(vec![name.to_string(), raw(v), a, b, c]);
        }
    }
    Ok(Body {
        markdown: md,
        csv: vec![("logistic".into(), strings(&["term", "estimate", "se", "z", "p_value"]), csv_rows)],
        sources: vec![source],
    })
}

fn classifier(p: &Pipeline) -> std::result::Result<Body, String> {
    let (summary, source): (TrainSummary, _) = load(p, Stage::Train, "summary.json")?;
    if summary.languages.is_empty() {
        return Err("omitted: no language had enough labelled tweets for a model (see the train stage notes)".into());
    }
    let mut md = format!(
        "Overall balanced accuracy, weighted by language size: {}\n\n",
        opt(summary.overall_balanced_accuracy, f3)
    );
    let mut md_rows = Vec::new();
    let mut csv_rows = Vec::new();
    for (lang, s) in &summary.languages {
        let (sy, un) = (&s.sympathetic_metrics, &s.unsympathetic_metrics);
        md_rows.push(vec![
            lang.to_uppercase(),
            s.n.to_string(),
            f3(s.balanced_accuracy),
            opt(sy.precision, f3),
            opt(sy.recall, f3),
            opt(un.precision, f3),
            opt(un.recall, f3),
        ]);
        csv_rows.push(vec![
            lang.clone(),
            s.n.to_string(),
            s.balanced_accuracy.to_string(),
            s.mean_fold_balanced_accuracy.to_string(),
            raw(sy.precision),
            raw(sy.recall),
            raw(un.precision),
            raw(un.recall),
        ]);
    }
    csv_rows.push(vec!["overall".into(), summary.languages.values().map(|s| s.n).sum::<usize>().to_string(), raw(summary.overall_balanced_accuracy), String::new(), String::new(), String::new(), String::new(), String::new()]);
    md.push_str(&md_table(
        &["Lang.", "N", "Balanced acc.", "Precision (symp.)", "Recall (symp.)", "Precision (unsymp.)", "Recall (unsymp.)"],
        &md_rows,
    ));
    let folds = summary.languages.values().next().map_or(0, |s| s.folds);
    let _ = writeln!(md, "\n{folds}-fold stratified cross-validation; metrics over the pooled out-of-fold predictions.");
    Ok(Body {
        markdown: md,
        csv: vec![(
            "balanced_accuracy".into(),
            strings(&[
                "lang",
                "n",
                "balanced_accuracy",
                "mean_fold_balanced_accuracy",
                "precision_sympathetic",
                "recall_sympathetic",
                "precision_unsympathetic",
                "recall_unsympathetic",
            ]),
            csv_rows,
        )],
        sources: vec![source],
    })
}

fn sympathy_ratio(p: &Pipeline) -> std::result::Result<Body, String> {
    let (ratios, source): (Vec<SliceRatio>, _) = load(p, Stage::Predict, "ratios.json")?;
    let min = p.cfg.report.min_unlabeled;
    let by_key: BTreeMap<(Event, Region), &SliceRatio> = ratios.iter().map(|r| ((r.event, r.region), r)).collect();
    let cell = |r: &SliceRatio| -> (String, Option<f64>, usize, &'static str) {
        if r.unlabeled < min {
            (format!("{} (N={})†", opt(r.labeled_ratio, f3), r.labeled), r.labeled_ratio, r.labeled, "labeled")
        } else {
            (format!("{} (N={})", opt(r.ratio, f3), r.predicted), r.ratio, r.predicted, "predicted")
        }
    };
    let mut md_rows = Vec::new();
    let mut csv_rows = Vec::new();
    for region in [Region::Arab, Region::Western] {
        let mut row = vec![match region {
            Region::Arab => "Arab".to_string(),
            Region::Western => "Western".to_string(),
        }];
        for event in [Event::Paris, Event::Beirut] {
            let Some(r) = by_key.get(&(event, region)) else {
                row.push("n/a".into());
                continue;
            };
            let (text, value, n, basis) = cell(r);
            row.push(text);
            csv_rows.push(vec![
                slice_label(event, region),
                raw(value),
                n.to_string(),
                basis.to_string(),
                r.unlabeled.to_string(),
                r.without_model.to_string(),
                raw(r.labeled_ratio),
                r.labeled.to_string(),
            ]);
        }
        md_rows.push(row);
    }
    let mut md = md_table(&["", "Paris", "Beirut"], &md_rows);
    let _ = writeln!(
        md,
        "\nShare of unlabelled tweets the classifier marks sympathetic. † Fewer than {min} unlabelled tweets; the share among crowd-labelled tweets is shown instead."
    );
    csv_rows.sort();
    Ok(Body {
        markdown: md,
        csv: vec![(
            "sympathy_ratio".into(),
            strings(&["slice", "ratio", "n", "basis", "unlabeled", "without_model", "labeled_ratio", "labeled"]),
            csv_rows,
        )],
        sources: vec![source],
    })
}

fn test_cells(t: &Option<TestResult>) -> (String, String) {
    t.as_ref().map_or(("n/a".into(), "n/a".into()), |t| (f3(t.statistic), pval(t.p_value)))
}

fn coverage(p: &Pipeline) -> std::result::Result<Body, String> {
    let (stats, source): (StatsOutput, _) = load(p, Stage::Stats, "stats.json")?;
    let c = &stats.coverage;
    let rows = vec![
        vec!["Western".to_string(), c.counts[0][0].to_string(), c.counts[0][1].to_string()],
        vec!["Arab".to_string(), c.counts[1][0].to_string(), c.counts[1][1].to_string()],
    ];
    let mut md = md_table(&["Media", "Beirut", "Paris"], &rows);
    let mut csv_rows: Vec<Vec<String>> = Vec::new();
    match &c.yates {
        Some(y) => {
            let _ = writeln!(
                md,
                "\nχ²(1) with Yates' correction = {}, p = {}, φ = {}, odds ratio = {}.",
                f3(y.test.statistic),
                pval(y.test.p_value),
                f3(y.phi),
                opt(y.odds_ratio, f3)
            );
            csv_rows.push(vec!["all".into(), "yates_chi2".into(), y.test.statistic.to_string(), y.test.p_value.to_string()]);
            csv_rows.push(vec!["all".into(), "phi".into(), y.phi.to_string(), String::new()]);
        }
        None => md.push_str("\nThe region × event test is undefined for these counts.\n"),
    }
    md.push('\n');
    let mut hourly = Vec::new();
    for t in &stats.temporal {
        let (rho, rho_p) = test_cells(&t.spearman);
        let (chi, chi_p) = test_cells(&t.independence);
        hourly.push(vec![t.event.to_string(), t.hours.to_string(), rho, rho_p, opt(t.cramers_v, f3), chi, chi_p]);
        if let Some(s) = &t.spearman {
            csv_rows.push(vec![t.event.to_string(), "hourly_spearman".into(), s.statistic.to_string(), s.p_value.to_string()]);
        }
        if let Some(s) = &t.independence {
            csv_rows.push(vec![t.event.to_string(), "hourly_chi2".into(), s.statistic.to_string(), s.p_value.to_string()]);
        }
        if let Some(v) = t.cramers_v {
            csv_rows.push(vec![t.event.to_string(), "hourly_cramers_v".into(), v.to_string(), String::new()]);
        }
    }
    md.push_str(&md_table(&["Event", "Hours", "Spearman ρ", "p", "Cramér's V", "χ²", "p"], &hourly));
    md.push_str("\nρ compares the normalized Western and Arab hourly series; V and χ² use the region × hour count table.\n");
    let mut counts_rows = Vec::new();
    for (e, r) in slice_keys() {
        counts_rows.push(vec![slice_label(e, r), c.counts[r as usize][e as usize].to_string()]);
    }
    Ok(Body {
        markdown: md,
        csv: vec![
            ("coverage".into(), strings(&["scope", "measure", "value", "p_value"]), csv_rows),
            ("coverage_counts".into(), strings(&["slice", "tweets"]), counts_rows),
        ],
        sources: vec![source],
    })
}

fn direction(d: &DimensionBias) -> &'static str {
    if d.western_mean < d.arab_mean {
        "Western < Arab"
    } else if d.western_mean > d.arab_mean {
        "Western > Arab"
    } else {
        "equal"
    }
}

fn sympathy_bias(p: &Pipeline) -> std::result::Result<Body, String> {
    let (stats, source): (StatsOutput, _) = load(p, Stage::Stats, "stats.json")?;
    let mut md_rows = Vec::new();
    let mut csv_rows = Vec::new();
    for b in &stats.bias {
        for (label, d) in [("sympathy", &b.sympathy), ("sentiment", &b.sentiment)] {
            let Some(d) = d else {
                md_rows.push(vec![b.event.to_string(), label.into(), "n/a".into(), "n/a".into(), "n/a".into(), "n/a".into(), "n/a".into(), "n/a".into(), "n/a".into()]);
                continue;
            };
            let mw = &d.mann_whitney;
            let (fisher, fisher_p, size) = d.downsampled.as_ref().map_or(("n/a".into(), "n/a".into(), "n/a".into()), |s| {
                (format!("{} (df {})", f3(s.combination.chi2_statistic), s.combination.df), pval(s.combination.p_value), format!("{} × {}", s.sample_size, s.runs))
            });
            md_rows.push(vec![
                b.event.to_string(),
                label.into(),
                format!("{} / {}", f3(d.western_mean), f3(d.arab_mean)),
                format!("{} / {}", b.western_n, b.arab_n),
                f3(mw.z),
                pval(mw.p_value),
                size,
                format!("{fisher}, p = {fisher_p}"),
                direction(d).into(),
            ]);
            let ds = d.downsampled.as_ref();
            csv_rows.push(vec![
                b.event.to_string(),
                label.into(),
                b.western_n.to_string(),
                b.arab_n.to_string(),
                d.western_mean.to_string(),
                d.arab_mean.to_string(),
                mw.u.to_string(),
                mw.z.to_string(),
                mw.p_value.to_string(),
                mw.r.to_string(),
                ds.map_or(String::new(), |s| s.sample_size.to_string()),
                ds.map_or(String::new(), |s| s.runs.to_string()),
                raw(ds.map(|s| s.combination.chi2_statistic)),
                ds.map_or(String::new(), |s| s.combination.df.to_string()),
                raw(ds.map(|s| s.combination.p_value)),
                raw(ds.map(|s| s.mean_z)),
            ]);
        }
    }
    let mut md = md_table(
        &["Event", "Label", "Mean W / A", "N W / A", "Z", "p", "Downsampled", "Fisher χ²", "Direction"],
        &md_rows,
    );
    md.push_str("\nMann-Whitney tests on the crowd labels (sympathetic = 1; sentiment −1, 0, 1), Western as the first sample. ");
    md.push_str("The downsampled column gives the common sample size and number of runs whose p-values are combined.\n");
    Ok(Body {
        markdown: md,
        csv: vec![(
            "sympathy_bias".into(),
            strings(&[
                "event", "label", "western_n", "arab_n", "western_mean", "arab_mean", "u", "z", "p_value", "r",
                "downsample_size", "runs", "fisher_chi2", "fisher_df", "fisher_p_value", "mean_z",
            ]),
            csv_rows,
        )],
        sources: vec![source],
    })
}

fn propagation(p: &Pipeline) -> std::result::Result<Body, String> {
    let (stats, source): (StatsOutput, _) = load(p, Stage::Stats, "stats.json")?;
    let pr = &stats.propagation;
    let mut md_rows = Vec::new();
    let mut csv_rows = Vec::new();
    for (name, t) in [
        ("sympathy vs retweets", &pr.sympathy_retweets),
        ("sentiment vs retweets", &pr.sentiment_retweets),
        ("followers vs retweets", &pr.followers_retweets),
    ] {
        let (rho, pv) = test_cells(t);
        md_rows.push(vec![name.to_string(), pr.n.to_string(), rho, pv]);
        csv_rows.push(vec![name.to_string(), pr.n.to_string(), raw(t.as_ref().map(|t| t.statistic)), raw(t.as_ref().map(|t| t.p_value))]);
    }
    let mut md = md_table(&["Variables", "N", "Spearman ρ", "p"], &md_rows);
    md.push_str("\nOver all crowd-labelled news tweets.\n");
    Ok(Body {
        markdown: md,
        csv: vec![("propagation".into(), strings(&["variables", "n", "rho", "p_value"]), csv_rows)],
        sources: vec![source],
    })
}

fn write_csv(path: &std::path::Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Copy the hourly series out of the stats stage.
fn hourly(p: &Pipeline, cx: &StageCtx) -> std::result::Result<Vec<Source>, String> {
    let record = match p.status(Stage::Stats) {
        RecordStatus::Current(r) => r,
        RecordStatus::Missing => return Err("omitted: stage `stats` has not run".into()),
        RecordStatus::Stale(reason) => return Err(format!("omitted: the output of stage `stats` is stale ({reason})")),
    };
    let dir = p.stage_dir(Stage::Stats);
    let mut sources = Vec::new();
    for (rel, digest) in record.files.iter().filter(|(f, _)| f.starts_with("hourly/")) {
        let to = cx.path(rel).map_err(|e| e.to_string())?;
        fs::copy(dir.join(rel), &to).map_err(|e| e.to_string())?;
        let from = dir.join(rel);
        sources.push((from.strip_prefix(p.out()).unwrap_or(&from).display().to_string(), digest.clone()));
    }
    Ok(sources)
}

pub fn emit(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let sections = [
        Section { name: "agreement", title: "Annotation agreement", body: agreement(p) },
        Section { name: "coverage", title: "Coverage", body: coverage(p) },
        Section { name: "sympathy_bias", title: "Sympathy and sentiment by media region", body: sympathy_bias(p) },
        Section { name: "logistic", title: "Sympathy explained by sentiment", body: logistic(p) },
        Section { name: "balanced_accuracy", title: "Classifier performance by language", body: classifier(p) },
        Section { name: "sympathy_ratio", title: "Share of sympathetic tweets", body: sympathy_ratio(p) },
        Section { name: "propagation", title: "Propagation", body: propagation(p) },
    ];
    let mut doc = String::from("# Crisis news sympathy report\n\n");
    let _ = writeln!(doc, "Config hash `{}`, master seed {}.\n", p.config_hash, p.cfg.seed);
    let mut sources: BTreeMap<String, String> = BTreeMap::new();
    for s in &sections {
        let _ = writeln!(doc, "## {}\n", s.title);
        match &s.body {
            Ok(body) => {
                doc.push_str(&body.markdown);
                let md_path = cx.path(&format!("{}.md", s.name))?;
                let standalone = format!("# {}\n\n{}", s.title, body.markdown);
                fs::write(&md_path, standalone).map_err(io_err(&md_path))?;
                for (name, header, rows) in &body.csv {
                    write_csv(&cx.path(&format!("{name}.csv"))?, header, rows)?;
                }
                sources.extend(body.sources.iter().cloned());
            }
            Err(notice) => {
                let _ = writeln!(doc, "_{}: {notice}_", s.title);
                cx.note(format!("{}: {notice}", s.name));
            }
        }
        doc.push('\n');
    }
    doc.push_str("## Hourly volume\n\n");
    match hourly(p, cx) {
        Ok(files) => {
            let names: Vec<String> = files.iter().map(|(f, _)| format!("`hourly/{}`", f.rsplit('/').next().unwrap_or(f))).collect();
            let _ = writeln!(doc, "Tweets per UTC hour for each slice, with the share of the slice total: {}.", names.join(", "));
            sources.extend(files);
        }
        Err(notice) => {
            let _ = writeln!(doc, "_Hourly volume: {notice}_");
            cx.note(format!("hourly: {notice}"));
        }
    }
    doc.push_str("\n## Sources\n\n");
    let rows: Vec<Vec<String>> = sources.iter().map(|(f, d)| vec![format!("`{f}`"), format!("`{d}`")]).collect();
    doc.push_str(&md_table(&["File", "SHA-256"], &rows));
    let path = cx.path("report.md")?;
    fs::write(&path, doc).map_err(io_err(&path))?;
    cx.output("tables", sections.iter().filter(|s| s.body.is_ok()).count());
    Ok(())
}
