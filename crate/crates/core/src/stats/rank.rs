//! Rank statistics: average ranks, Spearman's rho and the Mann-Whitney U test.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::special::{normal_sf, student_t_two_sided};
use super::{StatsError, TestResult};

fn check_finite(values: &[f64], name: &str) -> Result<(), StatsError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidParameter(format!("{name} contains a non-finite value")));
    }
    Ok(())
}

/// 1-based ranks with ties sharing the average of the ranks they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = avg;
        }
        start = end;
    }
    ranks
}

fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        groups.push(j - i);
        i = j;
    }
    groups
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rank correlation with a t-approximation p-value on `n - 2` df.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(StatsError::TooFew { needed: 3, got: x.len() });
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let rho = pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| StatsError::Undefined("constant input vector".into()))?;
    let df = (x.len() - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        student_t_two_sided(t, df)
    };
    Ok(TestResult { statistic: rho, p_value, effect_size: Some(rho), df: Some(df), n: x.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyOptions {
    /// Shrink |U - mean| by 0.5 before standardizing.
    pub continuity_correction: bool,
    /// Compute the exact permutation p-value when `n_x + n_y` is at most this.
    pub exact_max_n: usize,
}

impl Default for MannWhitneyOptions {
    fn default() -> Self {
        Self { continuity_correction: true, exact_max_n: 10 }
    }
}

/// Upper bound on the pooled size for which the exact distribution is built.
const EXACT_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub rank_sum_x: f64,
    pub z: f64,
    /// Two-sided normal-approximation p-value.
    pub p_value: f64,
    /// Two-sided exact permutation p-value, conditional on the observed ties.
    pub p_exact: Option<f64>,
    /// Effect size `z / sqrt(n_x + n_y)`.
    pub r: f64,
    pub n_x: usize,
    pub n_y: usize,
}

impl MannWhitney {
    pub fn to_test_result(&self) -> TestResult {
        TestResult {
            statistic: self.u,
            p_value: self.p_value,
            effect_size: Some(self.r),
            df: None,
            n: self.n_x + self.n_y,
        }
    }
}

/// Two-sided Mann-Whitney U test of `x` against `y`.
pub fn mann_whitney(x: &[f64], y: &[f64], options: &MannWhitneyOptions) -> Result<MannWhitney, StatsError> {
    if x.is_empty() || y.is_empty() {
        return Err(StatsError::TooFew { needed: 1, got: x.len().min(y.len()) });
    }
    check_finite(x, "x")?;
    check_finite(y, "y")?;
    let (n_x, n_y) = (x.len(), y.len());
    let n = n_x + n_y;
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let ranks = average_ranks(&pooled);
    // Average ranks are multiples of 1/2; doubled ranks are exact integers.
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let doubled_sum_x: u64 = doubled[..n_x].iter().sum();
    let rank_sum_x = doubled_sum_x as f64 / 2.0;
    let u = rank_sum_x - (n_x * (n_x + 1)) as f64 / 2.0;

    let mean = (n_x * n_y) as f64 / 2.0;
    let nf = n as f64;
    let ties: f64 = tie_group_sizes(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
    let variance = if n > 1 {
        (n_x * n_y) as f64 / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)))
    } else {
        0.0
    };
    let (z, p_value) = if variance <= 0.0 {
        (0.0, 1.0)
    } else {
        let correction = if options.continuity_correction { 0.5 } else { 0.0 };
        let diff = u - mean;
        let z = diff.signum() * (diff.abs() - correction).max(0.0) / variance.sqrt();
        (z, (2.0 * normal_sf(z.abs())).min(1.0))
    };
    let p_exact = (n <= options.exact_max_n.min(EXACT_LIMIT)).then(|| exact_p(&doubled, n_x, doubled_sum_x));
    Ok(MannWhitney { u, rank_sum_x, z, p_value, p_exact, r: z / nf.sqrt(), n_x, n_y })
}

/// Exact two-sided p-value from the distribution of the doubled rank sum of
/// `n_x` items drawn from the pooled doubled ranks.
fn exact_p(doubled: &[u64], n_x: usize, observed: u64) -> f64 {
    let max_sum: u64 = doubled.iter().sum();
    let width = max_sum as usize + 1;
    // ways[k][s]: subsets of size k with doubled rank sum s
    let mut ways = vec![vec![0.0f64; width]; n_x + 1];
    ways[0][0] = 1.0;
    for &d in doubled {
        let d = d as usize;
        for k in (1..=n_x).rev() {
            let (lower, upper) = ways.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (d..width).rev() {
                if prev[s - d] != 0.0 {
                    cur[s] += prev[s - d];
                }
            }
        }
    }
    let n = doubled.len() as i64;
    let center = n_x as i64 * (n + 1);
    let observed_dev = (observed as i64 - center).abs();
    let total: f64 = ways[n_x].iter().sum();
    let extreme: f64 = ways[n_x]
        .iter()
        .enumerate()
        .filter(|(s, _)| (*s as i64 - center).abs() >= observed_dev)
        .map(|(_, w)| w)
        .sum();
    (extreme / total).min(1.0)
}
