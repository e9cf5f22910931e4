use std::fmt::Debug;

use serde::{Deserialize, Serialize};

use super::AnnotationError;

const Z_975: f64 = 1.959_963_984_540_054;

/// Fleiss' kappa over an item x category count matrix. Every row must sum to
/// the same number of ratings n ≥ 2. Returns NaN when expected agreement is 1.
pub fn fleiss_kappa(counts: &[Vec<u64>]) -> Result<f64, AnnotationError> {
    if counts.is_empty() {
        return Err(AnnotationError::TooFew { needed: 1, got: 0 });
    }
    let k = counts[0].len();
    let n: u64 = counts[0].iter().sum();
    for (row, r) in counts.iter().enumerate() {
        if r.len() != k {
            return Err(AnnotationError::Ragged { row, got: r.len(), expected: k });
        }
        let s: u64 = r.iter().sum();
        if s != n {
            return Err(AnnotationError::Ragged { row, got: s as usize, expected: n as usize });
        }
    }
    if n < 2 {
        return Err(AnnotationError::TooFew { needed: 2, got: n as usize });
    }
    let items = counts.len() as f64;
    let nf = n as f64;
    let p_bar = counts
        .iter()
        .map(|r| (r.iter().map(|&c| (c * c) as f64).sum::<f64>() - nf) / (nf * (nf - 1.0)))
        .sum::<f64>()
        / items;
    let pe: f64 = (0..k)
        .map(|j| {
            let pj = counts.iter().map(|r| r[j] as f64).sum::<f64>() / (items * nf);
            pj * pj
        })
        .sum();
    if (1.0 - pe).abs() < 1e-15 {
        return Ok(f64::NAN);
    }
    Ok((p_bar - pe) / (1.0 - pe))
}

/// Build a Fleiss count matrix from per-item rating lists, keeping items
/// with at least `raters` ratings and using their first `raters` entries.
pub fn category_counts<T: PartialEq>(items: &[Vec<T>], categories: &[T], raters: usize) -> Vec<Vec<u64>> {
    items
        .iter()
        .filter(|ratings| ratings.len() >= raters)
        .map(|ratings| {
            let mut row = vec![0u64; categories.len()];
            for r in &ratings[..raters] {
                if let Some(j) = categories.iter().position(|c| c == r) {
                    row[j] += 1;
                }
            }
            row
        })
        .filter(|row| row.iter().sum::<u64>() == raters as u64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Weighting {
    Unweighted,
    /// Agreement weights `1 - |i - j| / (k - 1)` over the category order.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohenKappa {
    pub kappa: f64,
    /// Large-sample standard error (Fleiss, Cohen and Everitt 1969).
    pub se: f64,
    pub ci95: (f64, f64),
    pub observed: f64,
    pub expected: f64,
    pub n: usize,
}

/// Cohen's kappa with the categories taken from the union of both raters in
/// `Ord` order.
pub fn cohen_kappa<T: Ord + Clone + Debug>(r1: &[T], r2: &[T], weighting: Weighting) -> Result<CohenKappa, AnnotationError> {
    let mut categories: Vec<T> = r1.iter().chain(r2).cloned().collect();
    categories.sort();
    categories.dedup();
    cohen_kappa_with_categories(r1, r2, &categories, weighting)
}

/// Cohen's kappa over an explicit category scale; for linear weights the
/// order of `categories` is the ordinal scale.
pub fn cohen_kappa_with_categories<T: PartialEq + Debug>(
    r1: &[T],
    r2: &[T],
    categories: &[T],
    weighting: Weighting,
) -> Result<CohenKappa, AnnotationError> {
    if r1.len() != r2.len() {
        return Err(AnnotationError::LengthMismatch(r1.len(), r2.len()));
    }
    if r1.len() < 2 {
        return Err(AnnotationError::TooFew { needed: 2, got: r1.len() });
    }
    let k = categories.len();
    if k < 2 {
        return Err(AnnotationError::Undefined("fewer than two categories".into()));
    }
    let index = |x: &T| {
        categories.iter().position(|c| c == x).ok_or_else(|| AnnotationError::UnknownCategory(format!("{x:?}")))
    };
    let n = r1.len();
    let mut p = vec![vec![0.0; k]; k];
    for (a, b) in r1.iter().zip(r2) {
        p[index(a)?][index(b)?] += 1.0 / n as f64;
    }
    let w: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| match weighting {
                    Weighting::Unweighted => (i == j) as u8 as f64,
                    Weighting::Linear => 1.0 - (i as f64 - j as f64).abs() / (k - 1) as f64,
                })
                .collect()
        })
        .collect();
    let rows: Vec<f64> = p.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..k).map(|j| p.iter().map(|r| r[j]).sum()).collect();
    let mut po = 0.0;
    let mut pe = 0.0;
    for i in 0..k {
        for j in 0..k {
            po += w[i][j] * p[i][j];
            pe += w[i][j] * rows[i] * cols[j];
        }
    }
    if pe >= 1.0 - 1e-15 {
        return Err(AnnotationError::Undefined("expected agreement is 1 (single category in use)".into()));
    }
    let kappa = (po - pe) / (1.0 - pe);

    let w_row: Vec<f64> = (0..k).map(|i| (0..k).map(|j| cols[j] * w[i][j]).sum()).collect();
    let w_col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| rows[i] * w[i][j]).sum()).collect();
    let mut acc = 0.0;
    for i in 0..k {
        for j in 0..k {
            let d = w[i][j] - (w_row[i] + w_col[j]) * (1.0 - kappa);
            acc += p[i][j] * d * d;
        }
    }
    let tail = kappa - pe * (1.0 - kappa);
    let var = (acc - tail * tail) / (n as f64 * (1.0 - pe).powi(2));
    let se = var.max(0.0).sqrt();
    Ok(CohenKappa { kappa, se, ci95: (kappa - Z_975 * se, kappa + Z_975 * se), observed: po, expected: pe, n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Sentiment::{self, *};

    #[test]
    fn fleiss_hand_matrix() {
        // P_i = 1, 1/3, 1/3, 1 -> P̄ = 2/3; p = (1/2, 1/2) -> P̄e = 1/2
        let k = fleiss_kappa(&[vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]]).unwrap();
        assert!((k - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fleiss_reference_three_categories() {
        // statsmodels.stats.inter_rater.fleiss_kappa
        let k = fleiss_kappa(&[vec![2, 1, 0], vec![0, 3, 0], vec![1, 1, 1], vec![0, 0, 3], vec![3, 0, 0]]).unwrap();
        assert!((k - 0.493_243_243_243_243_1).abs() < 1e-12);
    }

    #[test]
    fn fleiss_perfect_and_degenerate() {
        assert_eq!(fleiss_kappa(&[vec![3, 0], vec![0, 3]]).unwrap(), 1.0);
        assert!(fleiss_kappa(&[vec![3, 0], vec![3, 0]]).unwrap().is_nan());
        assert!(matches!(fleiss_kappa(&[vec![3, 0], vec![1, 1]]), Err(AnnotationError::Ragged { row: 1, .. })));
        assert!(matches!(fleiss_kappa(&[vec![3, 0], vec![3]]), Err(AnnotationError::Ragged { .. })));
    }

    #[test]
    fn cohen_identical() {
        let r = ["a", "b", "a", "c"];
        let k = cohen_kappa(&r, &r, Weighting::Unweighted).unwrap();
        assert_eq!(k.kappa, 1.0);
    }

    #[test]
    fn cohen_two_planted_disagreements() {
        let r1 = ["a", "a", "a", "a", "a", "b", "b", "b", "b", "b"];
        let mut r2 = r1;
        r2[0] = "b";
        r2[5] = "a";
        let k = cohen_kappa(&r1, &r2, Weighting::Unweighted).unwrap();
        // po = 0.8, pe = 0.5
        assert!((k.kappa - 0.6).abs() < 1e-12);
        assert!((k.se - 0.252_982_212_813_470_3).abs() < 1e-12);
    }

    fn from_table(table: [[usize; 3]; 3]) -> (Vec<Sentiment>, Vec<Sentiment>) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, row) in table.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    a.push(Sentiment::ALL[i]);
                    b.push(Sentiment::ALL[j]);
                }
            }
        }
        (a, b)
    }

    #[test]
    fn cohen_matches_reference_standard_errors() {
        // statsmodels cohens_kappa on the same table
        let (a, b) = from_table([[5, 2, 0], [1, 6, 1], [0, 2, 3]]);
        let u = cohen_kappa(&a, &b, Weighting::Unweighted).unwrap();
        assert!((u.kappa - 0.534_883_720_930_232_5).abs() < 1e-12);
        assert!((u.se - 0.159_785_381_256_993_93).abs() < 1e-12);
        let l = cohen_kappa(&a, &b, Weighting::Linear).unwrap();
        assert!((l.kappa - 0.620_253_164_556_962).abs() < 1e-12);
        assert!((l.se - 0.136_803_175_056_071_7).abs() < 1e-12);
        assert!((l.ci95.1 - l.kappa - Z_975 * l.se).abs() < 1e-15);
    }

    #[test]
    fn unknown_category_rejected() {
        let scale = [Negative, Neutral];
        assert!(matches!(
            cohen_kappa_with_categories(&[Negative, Positive], &[Negative, Neutral], &scale, Weighting::Linear),
            Err(AnnotationError::UnknownCategory(_))
        ));
    }

    #[test]
    fn cohen_errors() {
        assert!(matches!(cohen_kappa(&["a", "a"], &["a", "a"], Weighting::Unweighted), Err(AnnotationError::Undefined(_))));
        assert!(matches!(cohen_kappa(&["a"], &["a"], Weighting::Unweighted), Err(AnnotationError::TooFew { .. })));
        assert!(matches!(cohen_kappa(&["a", "b"], &["a"], Weighting::Unweighted), Err(AnnotationError::LengthMismatch(2, 1))));
    }

    #[test]
    fn counts_from_ratings() {
        let items = vec![vec![Negative, Negative, Positive, Neutral], vec![Neutral, Neutral], vec![Positive; 3]];
        let m = category_counts(&items, &Sentiment::ALL, 3);
        assert_eq!(m, vec![vec![2, 0, 1], vec![0, 0, 3]]);
    }
}
