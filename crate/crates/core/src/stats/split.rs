//! Seeded index splits for cross-validation and holdout evaluation.

use rand::seq::SliceRandom;

use super::StatsError;
use crate::rng::substream;

fn check_k(n: usize, k: usize) -> Result<(), StatsError> {
    if k == 0 {
        return Err(StatsError::InvalidParameter("k must be positive".into()));
    }
    if k > n {
        return Err(StatsError::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Partition `0..n` into `k` folds whose sizes differ by at most one.
/// Indices within a fold are sorted.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, StatsError> {
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, 0));
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, idx) in order.into_iter().enumerate() {
        folds[pos % k].push(idx);
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Like `kfold_split`, but each class is shuffled separately and dealt
/// round-robin so every fold carries a near-proportional share of it.
pub fn stratified_kfold<T: Ord>(labels: &[T], k: usize, seed: u64) -> Result<Vec<Vec<usize>>, StatsError> {
    check_k(labels.len(), k)?;
    let mut classes: Vec<&T> = labels.iter().collect();
    classes.sort();
    classes.dedup();
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for (ci, class) in classes.iter().enumerate() {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| &&labels[i] == class).collect();
        members.shuffle(&mut substream(seed, ci as u64));
        for idx in members {
            folds[next % k].push(idx);
            next += 1;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Shuffled train/test split; the train size is `n·train_fraction` rounded
/// half up.
pub fn holdout_split(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>), StatsError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(StatsError::InvalidParameter(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let n_train = ((n as f64 * train_fraction) + 0.5).floor() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(seed, 0));
    let mut test = order.split_off(n_train.min(n));
    order.sort_unstable();
    test.sort_unstable();
    Ok((order, test))
}
