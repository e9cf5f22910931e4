use crisisnews_core::stats::*;
use proptest::prelude::*;

fn table(rows: &[&[u64]]) -> ContingencyTable {
    ContingencyTable::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn yates_against_scipy() {
    let cases: [(&[&[u64]], f64, f64); 4] = [
        (&[&[12, 5], &[3, 9]], 4.171457749766574, 0.04111041419430694),
        (&[&[708, 338], &[4270, 1100]], 69.77158740475171, 6.658512727554577e-17),
        (&[&[1, 0], &[0, 1]], 0.0, 1.0),
        (&[&[30, 10], &[10, 30]], 18.05, 2.1517864378120177e-05),
    ];
    for (t, chi2, p) in cases {
        let r = chi_square_yates(&table(t)).unwrap();
        assert!(close(r.test.statistic, chi2, 1e-9), "{t:?}: {}", r.test.statistic);
        assert!((r.test.p_value - p).abs() <= 1e-9 * p.max(1e-300) + 1e-15, "{t:?}: {}", r.test.p_value);
    }
}

#[test]
fn cramers_v_against_scipy() {
    let cases: [(&[&[u64]], f64, f64, f64); 2] = [
        (&[&[10, 20, 30], &[20, 20, 20]], 5.333333333333334, 0.0694834512228015, 0.21081851067789195),
        (&[&[5, 0, 3], &[2, 8, 1], &[4, 4, 9]], 15.337347144833778, 0.0040503265000261, 0.46153950030838486),
    ];
    for (t, chi2, p, v) in cases {
        let r = chi_square_independence(&table(t)).unwrap();
        assert!(close(r.statistic, chi2, 1e-12));
        assert!((r.p_value - p).abs() < 1e-12);
        assert!((cramers_v(&table(t)).unwrap() - v).abs() < 1e-12);
    }
}

#[test]
fn mann_whitney_and_spearman_against_scipy() {
    let x = [0.3, 1.2, 2.2, 2.2, 5.0, 0.1, 3.3, 4.4, 1.0, 2.2];
    let y = [1.5, 2.2, 2.9, 3.1, 6.0, 7.2, 0.5, 4.4, 3.3];
    let r = mann_whitney(&x, &y, &MannWhitneyOptions::default()).unwrap();
    assert_eq!(r.u, 28.5);
    assert!((r.p_value - 0.18907343999681014).abs() < 1e-12);
    let s = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0], &[2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 8.0, 8.0]).unwrap();
    assert!((s.statistic - 0.9221722216732094).abs() < 1e-12);
    assert!((s.p_value - 0.0011108173578061712).abs() < 1e-12);
}

/// Mid-rank by counting, then Pearson on the ranks.
fn spearman_oracle(x: &[f64], y: &[f64]) -> f64 {
    let rank = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let less = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                less + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (rank(x), rank(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

/// U by pair counting and the two-sided permutation p-value by enumerating
/// every relabelling of the pooled sample.
fn mann_whitney_oracle(x: &[f64], y: &[f64]) -> (f64, f64) {
    let u2 = |a: &[f64], b: &[f64]| -> i64 {
        a.iter().map(|p| b.iter().map(|q| if p > q { 2 } else if p == q { 1 } else { 0 }).sum::<i64>()).sum()
    };
    let observed = u2(x, y);
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (n, nx) = (pooled.len(), x.len());
    let center = (nx * y.len()) as i64;
    let (mut extreme, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != nx {
            continue;
        }
        let a: Vec<f64> = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| pooled[i]).collect();
        let b: Vec<f64> = (0..n).filter(|i| mask & (1 << i) == 0).map(|i| pooled[i]).collect();
        total += 1;
        if (u2(&a, &b) - center).abs() >= (observed - center).abs() {
            extreme += 1;
        }
    }
    (observed as f64 / 2.0, extreme as f64 / total as f64)
}

#[test]
fn mann_whitney_exhaustive_small_samples() {
    let options = MannWhitneyOptions { exact_max_n: 8, ..MannWhitneyOptions::default() };
    for n in 2..=6usize {
        for nx in 1..n {
            for code in 0..3usize.pow(n as u32) {
                let values: Vec<f64> = (0..n).map(|i| ((code / 3usize.pow(i as u32)) % 3) as f64).collect();
                let (x, y) = values.split_at(nx);
                let (u, p) = mann_whitney_oracle(x, y);
                let r = mann_whitney(x, y, &options).unwrap();
                assert_eq!(r.u, u, "{x:?} {y:?}");
                assert!((r.p_exact.unwrap() - p).abs() < 1e-9, "{x:?} {y:?}");
            }
        }
    }
}

#[test]
fn fisher_identity_cases() {
    assert_eq!(fisher_combine(&[1.0]).unwrap().chi2_statistic, 0.0);
    assert_eq!(fisher_combine(&[1.0, 1.0, 1.0]).unwrap().p_value, 1.0);
    let c = fisher_combine(&[0.05]).unwrap();
    assert!((c.p_value - 0.05).abs() < 1e-12);
    assert_eq!(c.df, 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spearman_matches_oracle(pairs in prop::collection::vec((0u8..6, 0u8..6), 3..25)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        match spearman(&x, &y) {
            Ok(r) => {
                prop_assert!((r.statistic - spearman_oracle(&x, &y)).abs() <= 1e-12);
                prop_assert!((0.0..=1.0).contains(&r.p_value));
            }
            Err(StatsError::Undefined(_)) => prop_assert!(spearman_oracle(&x, &y).is_nan()),
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn mann_whitney_symmetry(x in prop::collection::vec(-5i32..5, 1..30), y in prop::collection::vec(-5i32..5, 1..30)) {
        let x: Vec<f64> = x.into_iter().map(f64::from).collect();
        let y: Vec<f64> = y.into_iter().map(f64::from).collect();
        let o = MannWhitneyOptions::default();
        let a = mann_whitney(&x, &y, &o).unwrap();
        let b = mann_whitney(&y, &x, &o).unwrap();
        prop_assert_eq!(a.u + b.u, (x.len() * y.len()) as f64);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-12);
        prop_assert!(a.p_value > 0.0 && a.p_value <= 1.0);
    }

    #[test]
    fn fisher_p_in_unit_interval_and_monotone(ps in prop::collection::vec(1e-12f64..=1.0, 1..40), i in any::<prop::sample::Index>()) {
        let c = fisher_combine(&ps).unwrap();
        prop_assert!(c.p_value >= 0.0 && c.p_value <= 1.0);
        prop_assert_eq!(c.df, 2 * ps.len());
        let mut smaller = ps.clone();
        let j = i.index(ps.len());
        smaller[j] /= 2.0;
        prop_assert!(fisher_combine(&smaller).unwrap().p_value <= c.p_value);
    }

    #[test]
    fn yates_statistic_bounds(a in 0u64..50, b in 0u64..50, c in 0u64..50, d in 0u64..50) {
        prop_assume!(a + b > 0 && c + d > 0 && a + c > 0 && b + d > 0);
        let t = table(&[&[a, b], &[c, d]]);
        let y = chi_square_yates(&t).unwrap();
        let plain = chi_square_independence(&t).unwrap();
        prop_assert!(y.test.statistic >= 0.0 && y.test.statistic <= plain.statistic + 1e-9);
        let v = cramers_v(&t).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn folds_partition_indices(n in 1usize..80, k in 2usize..11, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let folds = kfold_split(n, k, seed).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn stratified_folds_balance_classes(labels in prop::collection::vec(0u8..3, 10..80), seed in any::<u64>()) {
        let k = 5;
        let folds = stratified_kfold(&labels, k, seed).unwrap();
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for class in 0u8..3 {
            let counts: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == class).count()).collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn balanced_accuracy_of_perfect_prediction(truth in prop::collection::vec(0u8..3, 1..50)) {
        let m = evaluate_predictions(&truth, &truth).unwrap();
        prop_assert_eq!(m.accuracy, 1.0);
        prop_assert_eq!(m.balanced_accuracy, 1.0);
    }
}
