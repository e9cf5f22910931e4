//! Single-convolution-layer sentence classifier over frozen word vectors:
//! parallel filters of several widths, ReLU, max-over-time pooling,
//! dropout and a softmax output layer.

mod checkpoint;
mod train;

use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embeddings::{tokenize, Embeddings, Vocabulary, PAD, UNK};
use crate::rng::substream;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use train::{cross_validate, predict_corpus, train, Adadelta, CorpusPrediction, CvReport, FoldResult, TrainReport};

const INIT_RANGE: f64 = 0.05;
const UNK_RANGE: f64 = 0.25;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("embedding dimension {got} does not match the configured {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("training data has {got} examples, at least 2 are needed")]
    TooFewExamples { got: usize },
    #[error("training data holds a single class")]
    SingleClass,
    #[error("label {label} is outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training fold {fold} lacks a class")]
    FoldMissingClass { fold: usize },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("checkpoint vocabulary {found} does not match embeddings vocabulary {expected}")]
    VocabularyMismatch { expected: String, found: String },
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Stats(#[from] crate::stats::StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CnnConfig {
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub embedding_dim: usize,
    pub num_classes: usize,
    pub adadelta_rho: f64,
    pub adadelta_eps: f64,
    pub seed: u64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        Self {
            filter_widths: vec![3, 4, 5],
            filters_per_width: 128,
            dropout: 0.5,
            epochs: 100,
            batch_size: 64,
            embedding_dim: 100,
            num_classes: 2,
            adadelta_rho: 0.95,
            adadelta_eps: 1e-6,
            seed: 0,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), ClassifierError> {
        let bad = |m: &str| Err(ClassifierError::InvalidConfig(m.to_string()));
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return bad("filter widths must be non-empty and positive");
        }
        if self.filters_per_width == 0 || self.epochs == 0 || self.batch_size == 0 || self.embedding_dim == 0 {
            return bad("filters_per_width, epochs, batch_size and embedding_dim must be positive");
        }
        if self.num_classes < 2 {
            return bad("num_classes must be at least 2");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        if !(self.adadelta_rho > 0.0 && self.adadelta_rho < 1.0 && self.adadelta_eps > 0.0) {
            return bad("adadelta_rho must lie in (0, 1) and adadelta_eps must be positive");
        }
        Ok(())
    }

    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(1)
    }

    pub fn hidden(&self) -> usize {
        self.filter_widths.len() * self.filters_per_width
    }
}

/// Offsets into the flat parameter vector. Each width owns a kernel laid
/// out `[width][dim][filters]` followed by `filters` biases; the dense
/// layer is `[hidden][classes]` weights then `classes` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub kernels: Vec<(usize, usize)>,
    pub dense_weights: usize,
    pub dense_bias: usize,
    pub total: usize,
}

impl Layout {
    pub fn new(cfg: &CnnConfig) -> Self {
        let (d, f) = (cfg.embedding_dim, cfg.filters_per_width);
        let mut off = 0;
        let mut kernels = Vec::new();
        for &w in &cfg.filter_widths {
            kernels.push((off, off + w * d * f));
            off += w * d * f + f;
        }
        let dense_weights = off;
        let dense_bias = off + cfg.hidden() * cfg.num_classes;
        Self { kernels, dense_weights, dense_bias, total: dense_bias + cfg.num_classes }
    }
}

/// One labeled sequence of vocabulary indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub ids: Vec<usize>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    config: CnnConfig,
    vocab: Vocabulary,
    embeddings: Vec<f64>,
    params: Vec<f64>,
    layout: Layout,
}

/// Forward-pass intermediates kept for backpropagation.
struct Trace {
    x: Vec<f64>,
    /// Per hidden unit, the winning window start when its ReLU is active.
    argmax: Vec<Option<usize>>,
    pooled: Vec<f64>,
    mask: Option<Vec<f64>>,
    probs: Vec<f64>,
}

impl CnnModel {
    /// Copy the embeddings, draw the `<unk>` row from ±0.25 and every
    /// trainable weight from ±0.05, all from the configured seed.
    pub fn build(config: CnnConfig, embeddings: &Embeddings) -> Result<Self, ClassifierError> {
        config.validate()?;
        if embeddings.dim() != config.embedding_dim {
            return Err(ClassifierError::DimensionMismatch { expected: config.embedding_dim, got: embeddings.dim() });
        }
        let layout = Layout::new(&config);
        let mut model = Self {
            vocab: embeddings.vocab().clone(),
            embeddings: embeddings.matrix().to_vec(),
            params: vec![0.0; layout.total],
            layout,
            config,
        };
        model.initialize();
        Ok(model)
    }

    fn initialize(&mut self) {
        let d = self.config.embedding_dim;
        let mut rng = substream(self.config.seed, u64::MAX);
        for x in &mut self.embeddings[UNK * d..(UNK + 1) * d] {
            *x = rng.gen_range(-UNK_RANGE..UNK_RANGE);
        }
        self.embeddings[PAD * d..(PAD + 1) * d].fill(0.0);
        for p in &mut self.params {
            *p = rng.gen_range(-INIT_RANGE..INIT_RANGE);
        }
    }

    /// A freshly initialised copy using `seed`.
    pub fn reseeded(&self, seed: u64) -> Self {
        let mut m = self.clone();
        m.config.seed = seed;
        m.initialize();
        m
    }

    pub fn config(&self) -> &CnnConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn unk_vector(&self) -> &[f64] {
        let d = self.config.embedding_dim;
        &self.embeddings[UNK * d..(UNK + 1) * d]
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        self.vocab.encode(&tokenize(text))
    }

    /// Class probabilities with dropout off.
    pub fn predict_proba(&self, ids: &[usize]) -> Vec<f64> {
        self.trace(ids, None).probs
    }

    /// Class probabilities. Passing a generator switches on inverted
    /// dropout, as during training.
    pub fn forward(&self, ids: &[usize], dropout: Option<&mut ChaCha8Rng>) -> Vec<f64> {
        self.trace(ids, dropout).probs
    }

    pub fn predict(&self, ids: &[usize]) -> usize {
        argmax(&self.predict_proba(ids))
    }

    fn trace(&self, ids: &[usize], dropout: Option<&mut ChaCha8Rng>) -> Trace {
        let cfg = &self.config;
        let (d, nf) = (cfg.embedding_dim, cfg.filters_per_width);
        let len = ids.len().max(cfg.max_width());
        let mut x = vec![0.0; len * d];
        for (t, &id) in ids.iter().enumerate() {
            x[t * d..(t + 1) * d].copy_from_slice(&self.embeddings[id * d..(id + 1) * d]);
        }
        let mut pooled = vec![0.0; cfg.hidden()];
        let mut argmax_t = vec![None; cfg.hidden()];
        let mut z = vec![0.0; nf];
        for (wi, (&w, &(k_off, b_off))) in cfg.filter_widths.iter().zip(&self.layout.kernels).enumerate() {
            let kernel = &self.params[k_off..b_off];
            let bias = &self.params[b_off..b_off + nf];
            let best = &mut pooled[wi * nf..(wi + 1) * nf];
            let best_t = &mut argmax_t[wi * nf..(wi + 1) * nf];
            for t in 0..=len - w {
                z.copy_from_slice(bias);
                for k in 0..w {
                    for (j, &xv) in x[(t + k) * d..(t + k + 1) * d].iter().enumerate() {
                        if xv == 0.0 {
                            continue;
                        }
                        let row = &kernel[(k * d + j) * nf..(k * d + j + 1) * nf];
                        for (zf, kv) in z.iter_mut().zip(row) {
                            *zf += xv * kv;
                        }
                    }
                }
                for f in 0..nf {
                    if z[f] > best[f] {
                        best[f] = z[f];
                        best_t[f] = Some(t);
                    }
                }
            }
        }
        let mask = dropout.filter(|_| cfg.dropout > 0.0).map(|rng| {
            let keep = 1.0 - cfg.dropout;
            (0..pooled.len()).map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 }).collect::<Vec<_>>()
        });
        let hidden: Vec<f64> = match &mask {
            Some(m) => pooled.iter().zip(m).map(|(h, m)| h * m).collect(),
            None => pooled.clone(),
        };
        let c = cfg.num_classes;
        let mut logits = self.params[self.layout.dense_bias..self.layout.dense_bias + c].to_vec();
        let weights = &self.params[self.layout.dense_weights..self.layout.dense_bias];
        for (i, &h) in hidden.iter().enumerate() {
            if h != 0.0 {
                for (o, wv) in logits.iter_mut().zip(&weights[i * c..(i + 1) * c]) {
                    *o += h * wv;
                }
            }
        }
        Trace { x, argmax: argmax_t, pooled, mask, probs: softmax(&logits) }
    }

    /// Mean cross-entropy over `batch` with dropout off.
    pub fn loss(&self, batch: &[&Example]) -> f64 {
        batch.iter().map(|e| -self.predict_proba(&e.ids)[e.label].ln()).sum::<f64>() / batch.len() as f64
    }

    /// Mean cross-entropy over `batch` and its gradient with respect to the
    /// flat parameters. A generator switches on dropout.
    pub fn loss_and_gradient(&self, batch: &[&Example], mut dropout: Option<&mut ChaCha8Rng>) -> (f64, Vec<f64>) {
        let cfg = &self.config;
        let (d, nf, c) = (cfg.embedding_dim, cfg.filters_per_width, cfg.num_classes);
        let scale = 1.0 / batch.len() as f64;
        let mut grad = vec![0.0; self.layout.total];
        let mut loss = 0.0;
        let weights = &self.params[self.layout.dense_weights..self.layout.dense_bias];
        for e in batch {
            let tr = self.trace(&e.ids, dropout.as_deref_mut());
            loss -= tr.probs[e.label].ln();
            let mut dlogit = tr.probs.clone();
            dlogit[e.label] -= 1.0;
            for v in &mut dlogit {
                *v *= scale;
            }
            for (g, dl) in grad[self.layout.dense_bias..self.layout.dense_bias + c].iter_mut().zip(&dlogit) {
                *g += dl;
            }
            for i in 0..cfg.hidden() {
                let m = tr.mask.as_ref().map_or(1.0, |m| m[i]);
                if m == 0.0 {
                    continue;
                }
                let h = tr.pooled[i] * m;
                let gw = &mut grad[self.layout.dense_weights + i * c..self.layout.dense_weights + (i + 1) * c];
                let mut dh = 0.0;
                for ((g, dl), wv) in gw.iter_mut().zip(&dlogit).zip(&weights[i * c..(i + 1) * c]) {
                    *g += h * dl;
                    dh += wv * dl;
                }
                let Some(t) = tr.argmax[i] else { continue };
                let dz = dh * m;
                let (wi, f) = (i / nf, i % nf);
                let w = cfg.filter_widths[wi];
                let (k_off, b_off) = self.layout.kernels[wi];
                grad[b_off + f] += dz;
                for k in 0..w {
                    for (j, &xv) in tr.x[(t + k) * d..(t + k + 1) * d].iter().enumerate() {
                        grad[k_off + (k * d + j) * nf + f] += dz * xv;
                    }
                }
            }
        }
        (loss * scale, grad)
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in p.iter().enumerate() {
        if v > p[best] {
            best = i;
        }
    }
    best
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    pub(crate) fn embeddings(dim: usize, n_words: usize, seed: u64) -> Embeddings {
        let mut tokens = vec!["<pad>".to_string(), "<unk>".to_string()];
        tokens.extend((0..n_words).map(|i| format!("w{i}")));
        let vocab = Vocabulary::from_tokens(tokens).unwrap();
        let mut rng = substream(seed, 7);
        let mut data: Vec<f64> = (0..vocab.len() * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
        data[..2 * dim].fill(0.0);
        Embeddings::new(vocab, dim, data).unwrap()
    }

    #[test]
    fn default_architecture_parameter_count() {
        let model = CnnModel::build(CnnConfig::default(), &embeddings(100, 3, 0)).unwrap();
        // 3·(w·100·128 + 128) over w = 3, 4, 5 plus 384·2 + 2
        assert_eq!(model.param_count(), 153_984 + 770);
        assert_eq!(model.config().hidden(), 384);
    }

    #[test]
    fn build_is_seeded_and_checks_dimension() {
        let emb = embeddings(8, 5, 1);
        let cfg = CnnConfig { embedding_dim: 8, filters_per_width: 4, ..CnnConfig::default() };
        let a = CnnModel::build(cfg.clone(), &emb).unwrap();
        assert_eq!(a, CnnModel::build(cfg.clone(), &emb).unwrap());
        assert_ne!(a.params(), CnnModel::build(CnnConfig { seed: 1, ..cfg.clone() }, &emb).unwrap().params());
        assert!(a.params().iter().all(|p| p.abs() < 0.05));
        assert!(a.unk_vector().iter().all(|u| u.abs() < 0.25) && a.unk_vector().iter().any(|&u| u != 0.0));
        assert!(matches!(
            CnnModel::build(CnnConfig { embedding_dim: 9, ..cfg.clone() }, &emb),
            Err(ClassifierError::DimensionMismatch { expected: 9, got: 8 })
        ));
        assert!(CnnModel::build(CnnConfig { dropout: 1.0, ..cfg }, &emb).is_err());
    }

    /// Width-2 single filter over 2-d vectors with hand-picked weights.
    fn hand_model() -> CnnModel {
        let vocab = Vocabulary::from_tokens(["<pad>", "<unk>", "a", "b", "c"].map(String::from).to_vec()).unwrap();
        let emb = Embeddings::new(vocab, 2, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        let cfg = CnnConfig { filter_widths: vec![2], filters_per_width: 1, embedding_dim: 2, ..CnnConfig::default() };
        let mut m = CnnModel::build(cfg, &emb).unwrap();
        // kernel [k][j]: row 0 = (1, -1), row 1 = (2, 0.5); bias -0.5
        // dense weights (0.5, -1), bias (0, 0.25)
        m.params_mut().copy_from_slice(&[1.0, -1.0, 2.0, 0.5, -0.5, 0.5, -1.0, 0.0, 0.25]);
        m
    }

    #[test]
    fn hand_computed_forward() {
        let m = hand_model();
        // tokens a b c a b c = ids 2 3 4 2 3 4
        // windows: (a,b) = 1 + 0.5 - 0.5 = 1.0; (b,c) = -1 + 2 + 0.5 - 0.5 = 1.0;
        // (c,a) = 0 + 2 - 0.5 = 1.5; then repeats; the max is 1.5
        // logits (0.75, -1.25), p0 = 1 / (1 + e^-2)
        let p = m.predict_proba(&[2, 3, 4, 2, 3, 4]);
        let p0 = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((p[0] - p0).abs() < 1e-15 && (p[1] - (1.0 - p0)).abs() < 1e-15);
        // single token "b": padded to width 2, windows (b, pad) = -1 - 0.5, max below zero, ReLU gives 0
        let p = m.predict_proba(&[3]);
        let q0 = 1.0 / (1.0 + (0.25f64).exp());
        assert!((p[0] - q0).abs() < 1e-15);
    }

    #[test]
    fn all_pad_input_depends_only_on_biases() {
        let mut m = hand_model();
        let p = m.predict_proba(&[PAD, PAD, PAD]);
        m.params_mut()[..4].fill(3.0);
        assert_eq!(m.predict_proba(&[PAD, PAD, PAD]), p);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trailing_pads_do_not_change_output() {
        let emb = embeddings(6, 10, 2);
        let cfg = CnnConfig { embedding_dim: 6, filters_per_width: 5, ..CnnConfig::default() };
        let m = CnnModel::build(cfg, &emb).unwrap();
        let mut ids = vec![3, 7, 2, 9, 4, 4, 11, PAD, PAD, PAD, PAD, PAD];
        let p = m.predict_proba(&ids);
        for _ in 0..4 {
            ids.push(PAD);
            assert_eq!(m.predict_proba(&ids), p);
        }
    }

    #[test]
    fn dropout_only_in_training_mode() {
        let emb = embeddings(6, 10, 2);
        let cfg = CnnConfig { embedding_dim: 6, filters_per_width: 20, ..CnnConfig::default() };
        let m = CnnModel::build(cfg, &emb).unwrap();
        let ids = [3, 7, 2, 9, 4];
        assert_eq!(m.forward(&ids, None), m.predict_proba(&ids));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_ne!(m.forward(&ids, Some(&mut rng)), m.predict_proba(&ids));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn gradient_matches_finite_differences() {
        let emb = embeddings(5, 12, 3);
        let cfg = CnnConfig { embedding_dim: 5, filters_per_width: 3, filter_widths: vec![2, 3], ..CnnConfig::default() };
        let mut m = CnnModel::build(cfg, &emb).unwrap();
        for p in m.params_mut() {
            *p *= 10.0;
        }
        let data: Vec<Example> = (0..6).map(|i| Example { ids: vec![2 + i, 3 + i, 4 + i, 5 + i], label: i % 2 }).collect();
        let batch: Vec<&Example> = data.iter().collect();
        let (loss, grad) = m.loss_and_gradient(&batch, None);
        assert!((loss - m.loss(&batch)).abs() < 1e-14);
        let h = 1e-6;
        for i in 0..m.param_count() {
            let x = m.params()[i];
            m.params_mut()[i] = x + h;
            let up = m.loss(&batch);
            m.params_mut()[i] = x - h;
            let down = m.loss(&batch);
            m.params_mut()[i] = x;
            let numeric = (up - down) / (2.0 * h);
            assert!((numeric - grad[i]).abs() < 1e-7, "param {i}: {numeric} vs {}", grad[i]);
        }
    }
}
