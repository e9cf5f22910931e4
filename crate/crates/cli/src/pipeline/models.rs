use std::collections::{BTreeMap, BTreeSet};

use crisisnews_core::annotation::Sympathy;
use crisisnews_core::classifier::{
    self, cross_validate, load_checkpoint, predict_corpus, save_checkpoint, ClassifierError, CnnConfig, CnnModel,
    Example,
};
use crisisnews_core::corpus::{CorpusSlice, Event, Region};
use crisisnews_core::embeddings::{read_vectors, tokenize, train_sgns, write_vectors, EmbeddingError, SgnsConfig};
use crisisnews_core::stats::ClassMetrics;
use serde::{Deserialize, Serialize};

use super::labels::read_labeled;
use super::{Pipeline, StageCtx};
use crate::error::Result;
use crate::manifest::Stage;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct EmbeddingSummary {
    tweets: usize,
    training_tokens: usize,
    vocabulary: usize,
    epoch_loss: Vec<f64>,
}

pub fn embed(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let slices = p.read_slices(Stage::Slice)?;
    let mut summary = BTreeMap::new();
    for lang in &p.cfg.classifier.languages {
        let sentences: Vec<Vec<String>> = slices
            .iter()
            .flat_map(|s| &s.tweets)
            .filter(|t| t.lang.as_deref() == Some(lang.as_str()))
            .map(|t| tokenize(&t.text))
            .collect();
        cx.input(lang.clone(), sentences.len());
        let seed = p.seed(&format!("embed/{lang}"));
        cx.record.seeds.insert(lang.clone(), seed);
        let cfg = SgnsConfig { seed, ..p.cfg.embedding.clone() };
        let (emb, report) = match train_sgns(&sentences, &cfg) {
            Err(e @ (EmbeddingError::TooFewTokens { .. } | EmbeddingError::EmptyVocabulary { .. })) => {
                cx.note(format!("{lang}: no embeddings ({e})"));
                continue;
            }
            other => other?,
        };
        write_vectors(&cx.path(&format!("{lang}.vec"))?, &emb)?;
        cx.output(lang.clone(), emb.vocab().len());
        summary.insert(
            lang.clone(),
            EmbeddingSummary {
                tweets: sentences.len(),
                training_tokens: report.training_tokens,
                vocabulary: emb.vocab().len(),
                epoch_loss: report.epoch_loss,
            },
        );
    }
    cx.write_json("summary.json", &summary)
}

/// Cross-validated performance of one language's classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageModelSummary {
    pub n: usize,
    pub sympathetic: usize,
    pub unsympathetic: usize,
    pub folds: usize,
    /// Over the pooled out-of-fold predictions.
    pub balanced_accuracy: f64,
    pub mean_fold_balanced_accuracy: f64,
    pub accuracy: f64,
    pub sympathetic_metrics: ClassMetrics<usize>,
    pub unsympathetic_metrics: ClassMetrics<usize>,
    pub parameters: usize,
    pub final_train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub languages: BTreeMap<String, LanguageModelSummary>,
    /// Balanced accuracy averaged over languages, weighted by tweet count.
    pub overall_balanced_accuracy: Option<f64>,
    pub config: CnnConfig,
}

fn class_metrics(m: &crisisnews_core::stats::ClassificationMetrics<usize>, class: usize) -> ClassMetrics<usize> {
    m.class(&class).cloned().expect("metrics list every class")
}

pub fn train(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let rows = read_labeled(&p.stage_dir(Stage::Aggregate).join("labeled.csv"))?;
    let embed_dir = p.stage_dir(Stage::Embed);
    let settings = &p.cfg.classifier;
    let mut languages = BTreeMap::new();
    for lang in &settings.languages {
        let rows: Vec<_> = rows.iter().filter(|r| &r.lang == lang).collect();
        cx.input(lang.clone(), rows.len());
        let vec_path = embed_dir.join(format!("{lang}.vec"));
        if !vec_path.is_file() {
            cx.note(format!("{lang}: no embeddings, no model"));
            continue;
        }
        let sympathetic = rows.iter().filter(|r| r.sympathy == Sympathy::Sympathetic).count();
        let minority = sympathetic.min(rows.len() - sympathetic);
        if rows.len() < settings.min_examples || minority < 2 || rows.len() < settings.folds {
            cx.note(format!(
                "{lang}: {} labelled tweets ({sympathetic} sympathetic), too few to train and evaluate a model",
                rows.len()
            ));
            continue;
        }
        let emb = read_vectors(&vec_path)?;
        let seed = p.seed(&format!("cnn/{lang}"));
        let cv_seed = p.seed(&format!("cv/{lang}"));
        cx.record.seeds.insert(format!("cnn/{lang}"), seed);
        cx.record.seeds.insert(format!("cv/{lang}"), cv_seed);
        let model = CnnModel::build(CnnConfig { seed, ..settings.cnn.clone() }, &emb)?;
        let data: Vec<Example> =
            rows.iter().map(|r| Example { ids: model.encode(&r.text), label: r.sympathy.score() as usize }).collect();
        let cv = match cross_validate(&model, &data, settings.folds, cv_seed) {
            Err(e @ ClassifierError::FoldMissingClass { .. }) => {
                cx.note(format!("{lang}: {e}; no model"));
                continue;
            }
            other => other?,
        };
        cx.write_json(&format!("cv/{lang}.json"), &cv)?;
        let parameters = model.param_count();
        let (model, report) = classifier::train(model, &data)?;
        save_checkpoint(&cx.path(&format!("{lang}.json"))?, &model)?;
        cx.output(lang.clone(), data.len());
        languages.insert(
            lang.clone(),
            LanguageModelSummary {
                n: data.len(),
                sympathetic,
                unsympathetic: data.len() - sympathetic,
                folds: settings.folds,
                balanced_accuracy: cv.pooled.balanced_accuracy,
                mean_fold_balanced_accuracy: cv.mean_balanced_accuracy,
                accuracy: cv.pooled.accuracy,
                sympathetic_metrics: class_metrics(&cv.pooled, 1),
                unsympathetic_metrics: class_metrics(&cv.pooled, 0),
                parameters,
                final_train_accuracy: report.final_train_accuracy,
            },
        );
    }
    let total: usize = languages.values().map(|l: &LanguageModelSummary| l.n).sum();
    let overall = (total > 0)
        .then(|| languages.values().map(|l| l.balanced_accuracy * l.n as f64).sum::<f64>() / total as f64);
    let config = CnnConfig { seed: 0, ..settings.cnn.clone() };
    cx.write_json("summary.json", &TrainSummary { languages, overall_balanced_accuracy: overall, config })
}

/// Predicted and ground-truth sympathy of one slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRatio {
    pub slice: String,
    pub event: Event,
    pub region: Region,
    /// Sliced tweets without a resolved crowd label.
    pub unlabeled: usize,
    pub predicted: usize,
    /// Unlabelled tweets in a language with no trained model.
    pub without_model: usize,
    pub sympathetic: usize,
    pub ratio: Option<f64>,
    pub labeled: usize,
    pub labeled_sympathetic: usize,
    pub labeled_ratio: Option<f64>,
}

fn ratio(k: usize, n: usize) -> Option<f64> {
    (n > 0).then(|| k as f64 / n as f64)
}

pub fn predict(p: &Pipeline, cx: &mut StageCtx) -> Result<()> {
    let rows = read_labeled(&p.stage_dir(Stage::Aggregate).join("labeled.csv"))?;
    let labeled: BTreeSet<&str> = rows.iter().map(|r| r.tweet_id.as_str()).collect();
    let (train_dir, embed_dir) = (p.stage_dir(Stage::Train), p.stage_dir(Stage::Embed));
    let mut models = BTreeMap::new();
    for lang in &p.cfg.classifier.languages {
        let ck = train_dir.join(format!("{lang}.json"));
        if ck.is_file() {
            let emb = read_vectors(&embed_dir.join(format!("{lang}.vec")))?;
            models.insert(lang.clone(), load_checkpoint(&ck, &emb)?);
        }
    }
    let mut ratios = Vec::new();
    for slice in p.read_slices(Stage::Slice)? {
        let label = slice.label();
        let (event, region) = (slice.event.expect("tagged slice"), slice.media_region.expect("tagged slice"));
        let mut by_lang: BTreeMap<String, Vec<_>> = BTreeMap::new();
        for t in slice.tweets.iter().filter(|t| !labeled.contains(t.id.as_str())) {
            by_lang.entry(t.lang.clone().unwrap_or_default()).or_default().push(t.clone());
        }
        let unlabeled: usize = by_lang.values().map(Vec::len).sum();
        cx.input(label.clone(), unlabeled);
        let mut predictions = Vec::new();
        let mut without_model = 0;
        for (lang, tweets) in by_lang {
            match models.get(&lang) {
                Some(model) => {
                    let part = predict_corpus(model, &CorpusSlice::from_tweets(tweets))?;
                    predictions.extend(part.labels.into_iter().map(|(id, s, prob)| (id, lang.clone(), s, prob)));
                }
                None => without_model += tweets.len(),
            }
        }
        if without_model > 0 {
            cx.note(format!("{label}: {without_model} unlabelled tweets in languages without a model"));
        }
        predictions.sort_by(|a, b| a.0.cmp(&b.0));
        let mut w = csv::Writer::from_path(cx.path(&format!("{label}.csv"))?)?;
        w.write_record(["tweet_id", "lang", "predicted", "p_sympathetic"])?;
        for (id, lang, s, prob) in &predictions {
            w.write_record([id.as_str(), lang, s.as_str(), &prob.to_string()])?;
        }
        w.flush().map_err(crate::manifest::io_err(&cx.dir))?;
        let sympathetic = predictions.iter().filter(|x| x.2 == Sympathy::Sympathetic).count();
        let truth: Vec<_> = rows.iter().filter(|r| r.slice == label).collect();
        let labeled_sympathetic = truth.iter().filter(|r| r.sympathy == Sympathy::Sympathetic).count();
        cx.output(label.clone(), predictions.len());
        ratios.push(SliceRatio {
            slice: label,
            event,
            region,
            unlabeled,
            predicted: predictions.len(),
            without_model,
            sympathetic,
            ratio: ratio(sympathetic, predictions.len()),
            labeled: truth.len(),
            labeled_sympathetic,
            labeled_ratio: ratio(labeled_sympathetic, truth.len()),
        });
    }
    cx.write_json("ratios.json", &ratios)
}
