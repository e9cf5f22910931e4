use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{argmax, ClassifierError, CnnModel, Example};
use crate::annotation::Sympathy;
use crate::corpus::CorpusSlice;
use crate::rng::{derive_seed, substream};
use crate::stats::{evaluate_predictions_with_classes, stratified_kfold, ClassificationMetrics};

/// Adadelta: per-coordinate step `-sqrt(E[Δ²] + ε) / sqrt(E[g²] + ε) · g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Adadelta {
    rho: f64,
    eps: f64,
    sq_grad: Vec<f64>,
    sq_step: Vec<f64>,
}

impl Adadelta {
    pub fn new(n: usize, rho: f64, eps: f64) -> Self {
        Self { rho, eps, sq_grad: vec![0.0; n], sq_step: vec![0.0; n] }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        let (rho, eps) = (self.rho, self.eps);
        for (((p, &g), eg), ed) in params.iter_mut().zip(grad).zip(&mut self.sq_grad).zip(&mut self.sq_step) {
            *eg = rho * *eg + (1.0 - rho) * g * g;
            let dx = -((*ed + eps).sqrt() / (*eg + eps).sqrt()) * g;
            *ed = rho * *ed + (1.0 - rho) * dx * dx;
            *p += dx;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean minibatch loss per epoch, with dropout active.
    pub epoch_loss: Vec<f64>,
    pub final_train_accuracy: f64,
    pub seed: u64,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

fn check_data(model: &CnnModel, data: &[Example]) -> Result<(), ClassifierError> {
    if data.len() < 2 {
        return Err(ClassifierError::TooFewExamples { got: data.len() });
    }
    let classes = model.config().num_classes;
    if let Some(e) = data.iter().find(|e| e.label >= classes) {
        return Err(ClassifierError::LabelOutOfRange { label: e.label, classes });
    }
    if data.iter().all(|e| e.label == data[0].label) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}

/// Minibatch Adadelta on mean cross-entropy. Epoch `e` shuffles with
/// substream `2e` of the seed and draws dropout masks from substream `2e + 1`.
pub fn train(mut model: CnnModel, data: &[Example]) -> Result<(CnnModel, TrainReport), ClassifierError> {
    check_data(&model, data)?;
    let started = Instant::now();
    let cfg = model.config().clone();
    let mut opt = Adadelta::new(model.param_count(), cfg.adadelta_rho, cfg.adadelta_eps);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs as u64 {
        order.sort_unstable();
        order.shuffle(&mut substream(cfg.seed, 2 * epoch));
        let mut dropout = substream(cfg.seed, 2 * epoch + 1);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &data[i]).collect();
            let (loss, grad) = model.loss_and_gradient(&batch, Some(&mut dropout));
            opt.step(model.params_mut(), &grad);
            total += loss * batch.len() as f64;
        }
        let mean = total / data.len() as f64;
        log::debug!("cnn epoch {epoch}: loss {mean:.6}");
        epoch_loss.push(mean);
    }
    let correct = data.iter().filter(|e| model.predict(&e.ids) == e.label).count();
    let report = TrainReport {
        epoch_loss,
        final_train_accuracy: correct as f64 / data.len() as f64,
        seed: cfg.seed,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    Ok((model, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub metrics: ClassificationMetrics<usize>,
    pub epoch_loss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldResult>,
    /// Metrics over the pooled out-of-fold predictions.
    pub pooled: ClassificationMetrics<usize>,
    pub mean_balanced_accuracy: f64,
    /// Out-of-fold prediction for every example, in input order.
    pub predictions: Vec<usize>,
}

/// Stratified `k`-fold cross-validation. Every fold trains a fresh model
/// built from `template`'s configuration and embeddings, with the fold
/// index mixed into the seed.
pub fn cross_validate(template: &CnnModel, data: &[Example], k: usize, seed: u64) -> Result<CvReport, ClassifierError> {
    check_data(template, data)?;
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    let folds = stratified_kfold(&labels, k, seed)?;
    let classes: Vec<usize> = (0..template.config().num_classes).collect();
    let mut predictions = vec![0; data.len()];
    let mut results = Vec::with_capacity(k);
    for (fold, test_idx) in folds.iter().enumerate() {
        let mut in_test = vec![false; data.len()];
        for &i in test_idx {
            in_test[i] = true;
        }
        let train_set: Vec<Example> = (0..data.len()).filter(|&i| !in_test[i]).map(|i| data[i].clone()).collect();
        if train_set.iter().all(|e| e.label == train_set[0].label) {
            return Err(ClassifierError::FoldMissingClass { fold });
        }
        let model = template.reseeded(derive_seed(template.config().seed, &format!("fold-{fold}")));
        let (model, report) = train(model, &train_set)?;
        let truth: Vec<usize> = test_idx.iter().map(|&i| labels[i]).collect();
        let pred: Vec<usize> = test_idx.iter().map(|&i| model.predict(&data[i].ids)).collect();
        for (&i, &p) in test_idx.iter().zip(&pred) {
            predictions[i] = p;
        }
        results.push(FoldResult {
            fold,
            train_size: train_set.len(),
            test_size: test_idx.len(),
            metrics: evaluate_predictions_with_classes(&pred, &truth, &classes)?,
            epoch_loss: report.epoch_loss,
        });
    }
    let pooled = evaluate_predictions_with_classes(&predictions, &labels, &classes)?;
    let mean_balanced_accuracy = results.iter().map(|r| r.metrics.balanced_accuracy).sum::<f64>() / results.len() as f64;
    Ok(CvReport { folds: results, pooled, mean_balanced_accuracy, predictions })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusPrediction {
    /// `(tweet id, predicted class, sympathetic probability)` in corpus order.
    pub labels: Vec<(String, Sympathy, f64)>,
    pub sympathetic: usize,
    pub total: usize,
    pub ratio: f64,
}

/// Label every tweet by argmax, class 1 being sympathetic.
pub fn predict_corpus(model: &CnnModel, corpus: &CorpusSlice) -> Result<CorpusPrediction, ClassifierError> {
    if corpus.is_empty() {
        return Err(ClassifierError::EmptyCorpus);
    }
    if model.config().num_classes != 2 {
        return Err(ClassifierError::InvalidConfig("corpus prediction needs a two-class model".into()));
    }
    let labels: Vec<(String, Sympathy, f64)> = corpus
        .tweets
        .iter()
        .map(|t| {
            let p = model.predict_proba(&model.encode(&t.text));
            let class = if argmax(&p) == 1 { Sympathy::Sympathetic } else { Sympathy::Unsympathetic };
            (t.id.clone(), class, p[1])
        })
        .collect();
    let sympathetic = labels.iter().filter(|l| l.1 == Sympathy::Sympathetic).count();
    Ok(CorpusPrediction { sympathetic, total: labels.len(), ratio: sympathetic as f64 / labels.len() as f64, labels })
}
