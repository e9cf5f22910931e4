//! Tokenization and skip-gram word vectors.

mod io;
mod sgns;
mod tokenize;
mod vocab;

use std::path::PathBuf;

pub use io::{read_vectors, write_vectors};
pub use sgns::{sgns_gradients, sgns_loss, train_sgns, SgnsConfig, SgnsReport, MIN_TRAINING_TOKENS};
pub use tokenize::{tokenize, NUM_TOKEN, URL_TOKEN, USER_TOKEN};
pub use vocab::{Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

#[derive(Debug, thiserror::Error)]
pub enum EmbeddingError {
    #[error("corpus has {got} tokens, at least {min} are needed")]
    TooFewTokens { got: usize, min: usize },
    #[error("no token occurs at least {min_count} times")]
    EmptyVocabulary { min_count: u64 },
    #[error("vocabulary must start with <pad> and <unk>")]
    MissingSpecialTokens,
    #[error("vocabulary lists a token twice")]
    DuplicateToken,
    #[error("token {0:?} is not in the vocabulary")]
    UnknownToken(String),
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Row-major `|V| × dim` matrix indexed by a [`Vocabulary`].
#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    vocab: Vocabulary,
    dim: usize,
    data: Vec<f64>,
}

impl Embeddings {
    pub fn new(vocab: Vocabulary, dim: usize, data: Vec<f64>) -> Result<Self, EmbeddingError> {
        let expected = vocab.len() * dim;
        if dim == 0 || data.len() != expected {
            return Err(EmbeddingError::DimensionMismatch { expected, got: data.len() });
        }
        Ok(Self { vocab, dim, data })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, id: usize) -> &[f64] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.vocab.get(token).map(|i| self.row(i))
    }

    pub fn cosine(&self, a: usize, b: usize) -> f64 {
        cosine(self.row(a), self.row(b))
    }

    /// The `k` rows most cosine-similar to `token`, excluding itself. Zero
    /// rows score 0 and ties go to the lower index.
    pub fn nearest_neighbors(&self, token: &str, k: usize) -> Result<Vec<(String, f64)>, EmbeddingError> {
        let id = self.vocab.get(token).ok_or_else(|| EmbeddingError::UnknownToken(token.to_string()))?;
        let mut scored: Vec<(usize, f64)> =
            (0..self.vocab.len()).filter(|&j| j != id).map(|j| (j, self.cosine(id, j))).collect();
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored.into_iter().map(|(j, s)| (self.vocab.token(j).to_string(), s)).collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa.sqrt() * bb.sqrt())
    }
}
