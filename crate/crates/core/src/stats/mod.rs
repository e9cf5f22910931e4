//! Statistical procedures for coverage bias, sympathy bias and propagation.

pub mod contingency;
pub mod fisher;
pub mod logistic;
pub mod metrics;
pub mod rank;
pub mod special;
pub mod split;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use contingency::{chi_square_independence, chi_square_yates, cramers_v, ContingencyTable, YatesResult};
pub use fisher::{
    downsample_fisher, fisher_combine, DownsampleConfig, DownsampleOutcome, FisherCombination, MIN_RECOMMENDED_RUNS,
};
pub use logistic::{logistic_fit, Coefficient, LogisticModel};
pub use metrics::{evaluate_predictions, evaluate_predictions_with_classes, ClassMetrics, ClassificationMetrics};
pub use rank::{average_ranks, mann_whitney, spearman, MannWhitney, MannWhitneyOptions};
pub use split::{holdout_split, kfold_split, stratified_kfold};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("input vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("statistic undefined: {0}")]
    Undefined(String),
    #[error("contingency table has a zero {0} margin")]
    ZeroMargin(&'static str),
    #[error("expected a {expected} table, got {rows}x{cols}")]
    Shape { expected: &'static str, rows: usize, cols: usize },
    #[error("ragged table: row {row} has {got} columns, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("p-value {0} outside (0, 1]")]
    InvalidPValue(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("complete separation at sentiment level {0}")]
    Separation(String),
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("model fit did not converge: {0}")]
    NoConvergence(String),
}

/// Generic outcome of a hypothesis test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// φ, r, ρ or Cramér's V, whichever applies to the test.
    pub effect_size: Option<f64>,
    pub df: Option<f64>,
    pub n: usize,
}
