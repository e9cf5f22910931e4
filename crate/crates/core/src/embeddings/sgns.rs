use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, UNK};
use super::{EmbeddingError, Embeddings};
use crate::rng::substream;

pub const MIN_TRAINING_TOKENS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub learning_rate: f64,
    /// Frequent-word subsampling threshold; `None` keeps every token.
    pub subsample: Option<f64>,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self { dim: 100, window: 5, negatives: 5, epochs: 5, min_count: 2, learning_rate: 0.025, subsample: None, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgnsReport {
    /// Mean pair loss per epoch.
    pub epoch_loss: Vec<f64>,
    pub pairs_per_epoch: Vec<u64>,
    pub training_tokens: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log σ(x)` without overflow.
fn neg_log_sigmoid(x: f64) -> f64 {
    (-x).max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Skip-gram negative-sampling loss of one (input, context) pair:
/// `-log σ(c·v) - Σ_k log σ(-n_k·v)`.
pub fn sgns_loss(input: &[f64], context: &[f64], negatives: &[&[f64]]) -> f64 {
    neg_log_sigmoid(dot(context, input)) + negatives.iter().map(|n| neg_log_sigmoid(-dot(n, input))).sum::<f64>()
}

/// Gradients of [`sgns_loss`], written into the given buffers. Returns the loss.
pub fn sgns_gradients(
    input: &[f64],
    context: &[f64],
    negatives: &[&[f64]],
    grad_input: &mut [f64],
    grad_context: &mut [f64],
    grad_negatives: &mut [Vec<f64>],
) -> f64 {
    grad_input.fill(0.0);
    let s = dot(context, input);
    let mut loss = neg_log_sigmoid(s);
    let g = sigmoid(s) - 1.0;
    for ((gi, gc), (&c, &v)) in grad_input.iter_mut().zip(grad_context.iter_mut()).zip(context.iter().zip(input)) {
        *gi += g * c;
        *gc = g * v;
    }
    for (n, gn) in negatives.iter().zip(grad_negatives.iter_mut()) {
        let s = dot(n, input);
        loss += neg_log_sigmoid(-s);
        let g = sigmoid(s);
        for ((gi, gn), (&nv, &v)) in grad_input.iter_mut().zip(gn.iter_mut()).zip(n.iter().zip(input)) {
            *gi += g * nv;
            *gn = g * v;
        }
    }
    loss
}

fn validate(cfg: &SgnsConfig) -> Result<(), EmbeddingError> {
    let bad = |what: &str| Err(EmbeddingError::InvalidConfig(what.to_string()));
    if cfg.dim == 0 || cfg.window == 0 || cfg.epochs == 0 {
        return bad("dim, window and epochs must be positive");
    }
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return bad("learning_rate must be positive");
    }
    if cfg.subsample.is_some_and(|t| t.is_nan() || t <= 0.0) {
        return bad("subsample threshold must be positive");
    }
    Ok(())
}

/// Train skip-gram word vectors with negative sampling.
///
/// Sentences are visited in order each epoch; out-of-vocabulary tokens are
/// removed before windowing. The window radius is drawn uniformly from
/// `1..=window` per centre word and negatives come from the unigram
/// distribution raised to 0.75. The learning rate decays linearly to
/// 1e-4 of its initial value over all epochs. Epoch `e` takes its random
/// draws from substream `e` of the seed. Rows `<pad>` and `<unk>` stay zero.
pub fn train_sgns<S: AsRef<[String]>>(sentences: &[S], cfg: &SgnsConfig) -> Result<(Embeddings, SgnsReport), EmbeddingError> {
    validate(cfg)?;
    let total: usize = sentences.iter().map(|s| s.as_ref().len()).sum();
    if total < MIN_TRAINING_TOKENS {
        return Err(EmbeddingError::TooFewTokens { got: total, min: MIN_TRAINING_TOKENS });
    }
    let vocab = Vocabulary::build(sentences, cfg.min_count)?;
    let encoded: Vec<Vec<usize>> =
        sentences.iter().map(|s| vocab.encode(s.as_ref()).into_iter().filter(|&i| i != UNK).collect()).collect();
    let training_tokens: usize = encoded.iter().map(Vec::len).sum();
    let (v, d) = (vocab.len(), cfg.dim);

    let weights: Vec<f64> = (0..v).map(|i| if i <= UNK { 0.0 } else { (vocab.count(i) as f64).powf(0.75) }).collect();
    let noise = WeightedIndex::new(&weights).expect("vocabulary has a positive count");
    let keep_prob: Vec<f64> = match cfg.subsample {
        None => vec![1.0; v],
        Some(t) => (0..v)
            .map(|i| {
                let f = vocab.count(i) as f64 / training_tokens as f64;
                if f == 0.0 {
                    1.0
                } else {
                    ((f / t).sqrt() + 1.0) * t / f
                }
            })
            .collect(),
    };

    let mut init = substream(cfg.seed, u64::MAX);
    let mut input = vec![0.0; v * d];
    for x in &mut input[(UNK + 1) * d..] {
        *x = (init.gen::<f64>() - 0.5) / d as f64;
    }
    let mut output = vec![0.0; v * d];

    let mut grad_in = vec![0.0; d];
    let mut grad_ctx = vec![0.0; d];
    let mut grad_neg = vec![vec![0.0; d]; cfg.negatives];
    let mut neg_ids = Vec::with_capacity(cfg.negatives);
    let schedule = (cfg.epochs * training_tokens).max(1) as f64;
    let mut processed = 0usize;
    let mut report = SgnsReport { epoch_loss: Vec::new(), pairs_per_epoch: Vec::new(), training_tokens };

    for epoch in 0..cfg.epochs {
        let mut rng = substream(cfg.seed, epoch as u64);
        let (mut loss_sum, mut pairs) = (0.0, 0u64);
        let mut sent = Vec::new();
        for ids in &encoded {
            processed += ids.len();
            sent.clear();
            sent.extend(ids.iter().copied().filter(|&i| keep_prob[i] >= 1.0 || rng.gen::<f64>() < keep_prob[i]));
            let lr = cfg.learning_rate * (1.0 - processed as f64 / schedule).max(1e-4);
            for (pos, &center) in sent.iter().enumerate() {
                let reach = cfg.window - rng.gen_range(0..cfg.window);
                let lo = pos.saturating_sub(reach);
                let hi = (pos + reach).min(sent.len() - 1);
                for (cpos, &ctx) in sent.iter().enumerate().take(hi + 1).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    neg_ids.clear();
                    for _ in 0..cfg.negatives {
                        let n = noise.sample(&mut rng);
                        if n != ctx {
                            neg_ids.push(n);
                        }
                    }
                    let neg_refs: Vec<&[f64]> = neg_ids.iter().map(|&n| &output[n * d..(n + 1) * d]).collect();
                    let loss = sgns_gradients(
                        &input[center * d..(center + 1) * d],
                        &output[ctx * d..(ctx + 1) * d],
                        &neg_refs,
                        &mut grad_in,
                        &mut grad_ctx,
                        &mut grad_neg,
                    );
                    loss_sum += loss;
                    pairs += 1;
                    for (o, g) in output[ctx * d..(ctx + 1) * d].iter_mut().zip(&grad_ctx) {
                        *o -= lr * g;
                    }
                    for (&n, g) in neg_ids.iter().zip(&grad_neg) {
                        for (o, g) in output[n * d..(n + 1) * d].iter_mut().zip(g) {
                            *o -= lr * g;
                        }
                    }
                    for (x, g) in input[center * d..(center + 1) * d].iter_mut().zip(&grad_in) {
                        *x -= lr * g;
                    }
                }
            }
        }
        report.epoch_loss.push(if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 });
        report.pairs_per_epoch.push(pairs);
        log::debug!("sgns epoch {epoch}: {pairs} pairs, mean loss {:.5}", report.epoch_loss[epoch]);
    }
    Ok((Embeddings::new(vocab, d, input)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_log_sigmoid() {
        assert!((neg_log_sigmoid(0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((neg_log_sigmoid(-800.0) - 800.0).abs() < 1e-12);
        assert!(neg_log_sigmoid(800.0) >= 0.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = substream(3, 0);
        let mut vecs: Vec<Vec<f64>> = (0..5).map(|_| (0..6).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
        let loss = |vs: &[Vec<f64>]| {
            let negs: Vec<&[f64]> = vs[2..].iter().map(Vec::as_slice).collect();
            sgns_loss(&vs[0], &vs[1], &negs)
        };
        let (mut gi, mut gc, mut gn) = (vec![0.0; 6], vec![0.0; 6], vec![vec![0.0; 6]; 3]);
        let negs: Vec<&[f64]> = vecs[2..].iter().map(Vec::as_slice).collect();
        let l = sgns_gradients(&vecs[0], &vecs[1], &negs, &mut gi, &mut gc, &mut gn);
        assert_eq!(l, loss(&vecs));
        let analytic: Vec<Vec<f64>> = [vec![gi, gc], gn].concat();
        let h = 1e-6;
        for r in 0..5 {
            for c in 0..6 {
                let x = vecs[r][c];
                vecs[r][c] = x + h;
                let up = loss(&vecs);
                vecs[r][c] = x - h;
                let down = loss(&vecs);
                vecs[r][c] = x;
                let numeric = (up - down) / (2.0 * h);
                assert!((numeric - analytic[r][c]).abs() < 1e-8, "{r},{c}");
            }
        }
    }

    fn corpus() -> Vec<Vec<String>> {
        let words = ["red", "green", "blue", "cat", "dog", "bird", "runs", "sleeps", "eats"];
        let mut rng = substream(1, 0);
        (0..60).map(|_| (0..8).map(|_| words[rng.gen_range(0..words.len())].to_string()).collect()).collect()
    }

    #[test]
    fn deterministic_and_pad_stays_zero() {
        let cfg = SgnsConfig { dim: 10, epochs: 2, seed: 9, ..SgnsConfig::default() };
        let (a, ra) = train_sgns(&corpus(), &cfg).unwrap();
        let (b, rb) = train_sgns(&corpus(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert!(a.row(0).iter().all(|&x| x == 0.0));
        assert!(a.matrix().iter().all(|x| x.is_finite()));
        let (c, _) = train_sgns(&corpus(), &SgnsConfig { seed: 10, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn subsampling_switch_changes_pairs() {
        let base = SgnsConfig { dim: 8, epochs: 1, ..SgnsConfig::default() };
        let (_, plain) = train_sgns(&corpus(), &base).unwrap();
        let (_, sub) = train_sgns(&corpus(), &SgnsConfig { subsample: Some(1e-3), ..base }).unwrap();
        assert!(sub.pairs_per_epoch[0] < plain.pairs_per_epoch[0]);
    }

    #[test]
    fn preconditions() {
        let one = vec![vec!["solo".to_string(); 20]];
        assert!(matches!(train_sgns(&one, &SgnsConfig::default()), Err(EmbeddingError::TooFewTokens { got: 20, .. })));
        let distinct = vec![(0..120).map(|i| format!("w{i}")).collect::<Vec<_>>()];
        assert!(matches!(train_sgns(&distinct, &SgnsConfig::default()), Err(EmbeddingError::EmptyVocabulary { .. })));
        let bad = SgnsConfig { window: 0, ..SgnsConfig::default() };
        assert!(matches!(train_sgns(&corpus(), &bad), Err(EmbeddingError::InvalidConfig(_))));
    }
}
