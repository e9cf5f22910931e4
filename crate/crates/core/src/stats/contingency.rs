//! Contingency-table tests: Yates-corrected 2x2 chi-square and Cramér's V.

use serde::{Deserialize, Serialize};

use super::special::chi2_sf;
use super::{StatsError, TestResult};

/// r x c table of non-negative counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self, StatsError> {
        let rows = counts.len();
        let cols = counts.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(StatsError::Shape { expected: "non-empty", rows, cols });
        }
        for (row, r) in counts.iter().enumerate() {
            if r.len() != cols {
                return Err(StatsError::Ragged { row, got: r.len(), expected: cols });
            }
        }
        let row_names = (0..rows).map(|i| format!("row{i}")).collect();
        let col_names = (0..cols).map(|j| format!("col{j}")).collect();
        Ok(Self { counts, row_names, col_names })
    }

    pub fn with_names(mut self, rows: &[&str], cols: &[&str]) -> Self {
        assert_eq!(rows.len(), self.rows());
        assert_eq!(cols.len(), self.cols());
        self.row_names = rows.iter().map(|s| s.to_string()).collect();
        self.col_names = cols.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn rows(&self) -> usize {
        self.counts.len()
    }

    pub fn cols(&self) -> usize {
        self.counts[0].len()
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.counts[row][col]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.cols()).map(|j| self.counts.iter().map(|r| r[j]).sum()).collect()
    }

    fn check_margins(&self) -> Result<(Vec<f64>, Vec<f64>, f64), StatsError> {
        let rows = self.row_totals();
        let cols = self.col_totals();
        if rows.contains(&0) {
            return Err(StatsError::ZeroMargin("row"));
        }
        if cols.contains(&0) {
            return Err(StatsError::ZeroMargin("column"));
        }
        let n = self.total() as f64;
        Ok((
            rows.into_iter().map(|r| r as f64).collect(),
            cols.into_iter().map(|c| c as f64).collect(),
            n,
        ))
    }
}

/// Yates-corrected 2x2 test plus its effect sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YatesResult {
    pub test: TestResult,
    pub phi: f64,
    /// `None` when a cell is zero and the ratio is undefined.
    pub odds_ratio: Option<f64>,
}

/// Chi-square test with Yates' continuity correction on a 2x2 table.
///
/// The correction is clamped at `|O - E|`, so a table at exact
/// independence yields a statistic of 0.
pub fn chi_square_yates(table: &ContingencyTable) -> Result<YatesResult, StatsError> {
    if table.rows() != 2 || table.cols() != 2 {
        return Err(StatsError::Shape { expected: "2x2", rows: table.rows(), cols: table.cols() });
    }
    let (rows, cols, n) = table.check_margins()?;
    let mut chi2 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (j, c) in cols.iter().enumerate() {
            let expected = r * c / n;
            let deviation = ((table.get(i, j) as f64 - expected).abs() - 0.5).max(0.0);
            chi2 += deviation * deviation / expected;
        }
    }
    let (a, b, c, d) = (table.get(0, 0), table.get(0, 1), table.get(1, 0), table.get(1, 1));
    let odds_ratio = if a == 0 || b == 0 || c == 0 || d == 0 {
        None
    } else {
        Some((a as f64 * d as f64) / (b as f64 * c as f64))
    };
    let phi = (chi2 / n).sqrt();
    Ok(YatesResult {
        test: TestResult {
            statistic: chi2,
            p_value: chi2_sf(chi2, 1.0),
            effect_size: Some(phi),
            df: Some(1.0),
            n: n as usize,
        },
        phi,
        odds_ratio,
    })
}

/// Pearson chi-square test of independence without continuity correction.
/// The effect size is Cramér's V.
pub fn chi_square_independence(table: &ContingencyTable) -> Result<TestResult, StatsError> {
    if table.rows() < 2 || table.cols() < 2 {
        return Err(StatsError::Shape { expected: "at least 2x2", rows: table.rows(), cols: table.cols() });
    }
    let (rows, cols, n) = table.check_margins()?;
    let mut chi2 = 0.0;
    for (i, r) in rows.iter().enumerate() {
        for (j, c) in cols.iter().enumerate() {
            let expected = r * c / n;
            let diff = table.get(i, j) as f64 - expected;
            chi2 += diff * diff / expected;
        }
    }
    let df = ((table.rows() - 1) * (table.cols() - 1)) as f64;
    let k = table.rows().min(table.cols()) as f64;
    let v = (chi2 / (n * (k - 1.0))).sqrt().min(1.0);
    Ok(TestResult { statistic: chi2, p_value: chi2_sf(chi2, df), effect_size: Some(v), df: Some(df), n: n as usize })
}

/// Cramér's V from the uncorrected chi-square statistic.
pub fn cramers_v(table: &ContingencyTable) -> Result<f64, StatsError> {
    if table.total() == 0 {
        return Err(StatsError::TooFew { needed: 1, got: 0 });
    }
    chi_square_independence(table).map(|t| t.effect_size.unwrap_or(0.0))
}
