//! Fisher's method and the repeated-downsampling Mann-Whitney comparison.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::rank::{mann_whitney, MannWhitneyOptions};
use super::special::chi2_sf;
use super::StatsError;
use crate::rng::substream;

/// Minimum number of runs suggested by the power analysis for the
/// downsampling comparison (0.95 power, effect size 0.3, alpha 0.05).
pub const MIN_RECOMMENDED_RUNS: usize = 220;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherCombination {
    pub chi2_statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub k: usize,
}

/// Combine independent p-values: `-2 Σ ln p_i ~ χ²(2k)`.
pub fn fisher_combine(pvalues: &[f64]) -> Result<FisherCombination, StatsError> {
    if pvalues.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    if let Some(&bad) = pvalues.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(StatsError::InvalidPValue(bad));
    }
    let sum: f64 = pvalues.iter().map(|p| -p.ln()).sum();
    // -ln(1) is -0.0; report a clean zero
    let chi2_statistic = if sum == 0.0 { 0.0 } else { 2.0 * sum };
    let df = 2 * pvalues.len();
    Ok(FisherCombination { chi2_statistic, df, p_value: chi2_sf(chi2_statistic, df as f64), k: pvalues.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownsampleConfig {
    pub runs: usize,
    pub seed: u64,
    /// Common size both samples are reduced to; defaults to the smaller sample.
    pub sample_size: Option<usize>,
    pub mann_whitney: MannWhitneyOptions,
}

impl Default for DownsampleConfig {
    fn default() -> Self {
        Self { runs: 1000, seed: 0, sample_size: None, mann_whitney: MannWhitneyOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DownsampleOutcome {
    pub combination: FisherCombination,
    pub per_run_p: Vec<f64>,
    pub per_run_z: Vec<f64>,
    pub sample_size: usize,
    pub warnings: Vec<String>,
}

/// Downsample `a` and `b` without replacement to a common size, run a
/// Mann-Whitney test per run on the resulting scores and combine the
/// per-run p-values with Fisher's method.
///
/// Run `i` draws from substream `i` of the seed, so any subset of runs can be
/// recomputed independently and the outcome does not depend on run order.
pub fn downsample_fisher(a: &[f64], b: &[f64], config: &DownsampleConfig) -> Result<DownsampleOutcome, StatsError> {
    if config.runs == 0 {
        return Err(StatsError::InvalidParameter("runs must be positive".into()));
    }
    let smallest = a.len().min(b.len());
    let size = config.sample_size.unwrap_or(smallest);
    if size == 0 {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    if size > smallest {
        return Err(StatsError::TooFew { needed: size, got: smallest });
    }
    let mut warnings = Vec::new();
    if config.runs < MIN_RECOMMENDED_RUNS {
        let msg = format!(
            "{} downsampling runs is below the {} needed for 0.95 power at effect size 0.3",
            config.runs, MIN_RECOMMENDED_RUNS
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut per_run_p = Vec::with_capacity(config.runs);
    let mut per_run_z = Vec::with_capacity(config.runs);
    let mut xa = vec![0.0; size];
    let mut xb = vec![0.0; size];
    for run in 0..config.runs {
        let mut rng = substream(config.seed, run as u64);
        for (slot, idx) in xa.iter_mut().zip(sample(&mut rng, a.len(), size)) {
            *slot = a[idx];
        }
        for (slot, idx) in xb.iter_mut().zip(sample(&mut rng, b.len(), size)) {
            *slot = b[idx];
        }
        let test = mann_whitney(&xa, &xb, &config.mann_whitney)?;
        per_run_p.push(test.p_value);
        per_run_z.push(test.z);
    }
    let combination = fisher_combine(&per_run_p)?;
    Ok(DownsampleOutcome { combination, per_run_p, per_run_z, sample_size: size, warnings })
}
