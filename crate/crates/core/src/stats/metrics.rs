//! Classification metrics with explicit handling of undefined ratios.

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<T> {
    pub class: T,
    pub support: usize,
    pub predicted: usize,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs in the truth.
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics<T> {
    pub n: usize,
    pub accuracy: f64,
    /// Mean recall over the classes whose recall is defined.
    pub balanced_accuracy: f64,
    pub per_class: Vec<ClassMetrics<T>>,
    /// Classes left out of the balanced accuracy because they have no support.
    pub excluded_from_balanced: Vec<T>,
}

impl<T: PartialEq> ClassificationMetrics<T> {
    pub fn class(&self, class: &T) -> Option<&ClassMetrics<T>> {
        self.per_class.iter().find(|c| &c.class == class)
    }
}

/// Metrics over the classes seen in either vector, in `Ord` order.
pub fn evaluate_predictions<T: Ord + Clone>(pred: &[T], truth: &[T]) -> Result<ClassificationMetrics<T>, StatsError> {
    let mut classes: Vec<T> = pred.iter().chain(truth).cloned().collect();
    classes.sort();
    classes.dedup();
    evaluate_predictions_with_classes(pred, truth, &classes)
}

/// Metrics over an explicit class list; labels outside it count as errors
/// but get no row of their own.
pub fn evaluate_predictions_with_classes<T: PartialEq + Clone>(
    pred: &[T],
    truth: &[T],
    classes: &[T],
) -> Result<ClassificationMetrics<T>, StatsError> {
    if pred.len() != truth.len() {
        return Err(StatsError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    let n = pred.len();
    let correct = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    let per_class: Vec<ClassMetrics<T>> = classes
        .iter()
        .map(|c| {
            let support = truth.iter().filter(|t| *t == c).count();
            let predicted = pred.iter().filter(|p| *p == c).count();
            let tp = pred.iter().zip(truth).filter(|(p, t)| *p == c && *t == c).count();
            let precision = (predicted > 0).then(|| tp as f64 / predicted as f64);
            let recall = (support > 0).then(|| tp as f64 / support as f64);
            let f1 = match (precision, recall) {
                (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
                (Some(_), Some(_)) => Some(0.0),
                _ => None,
            };
            ClassMetrics { class: c.clone(), support, predicted, precision, recall, f1 }
        })
        .collect();
    let recalls: Vec<f64> = per_class.iter().filter_map(|c| c.recall).collect();
    let balanced_accuracy =
        if recalls.is_empty() { f64::NAN } else { recalls.iter().sum::<f64>() / recalls.len() as f64 };
    let excluded_from_balanced = per_class.iter().filter(|c| c.recall.is_none()).map(|c| c.class.clone()).collect();
    Ok(ClassificationMetrics {
        n,
        accuracy: correct as f64 / n as f64,
        balanced_accuracy,
        per_class,
        excluded_from_balanced,
    })
}
