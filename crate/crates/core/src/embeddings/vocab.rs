use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::EmbeddingError;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Dense token index. `<pad>` is 0 and `<unk>` is 1; the rest are ordered
/// by descending frequency, then by token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyData", into = "VocabularyData")]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyData {
    tokens: Vec<String>,
    counts: Vec<u64>,
}

impl From<VocabularyData> for Vocabulary {
    fn from(d: VocabularyData) -> Self {
        Self::from_parts(d.tokens, d.counts)
    }
}

impl From<Vocabulary> for VocabularyData {
    fn from(v: Vocabulary) -> Self {
        Self { tokens: v.tokens, counts: v.counts }
    }
}

impl Vocabulary {
    /// Count tokens and keep those seen at least `min_count` times. Tokens
    /// below the cut are folded into the `<unk>` count.
    pub fn build<S: AsRef<[String]>>(sentences: &[S], min_count: u64) -> Result<Self, EmbeddingError> {
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for s in sentences {
            for t in s.as_ref() {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = Vec::new();
        let mut unk = 0;
        for (t, c) in freq {
            if t == PAD_TOKEN || t == UNK_TOKEN {
                continue;
            }
            if c >= min_count {
                kept.push((t, c));
            } else {
                unk += c;
            }
        }
        if kept.is_empty() {
            return Err(EmbeddingError::EmptyVocabulary { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        let mut counts = vec![0, unk];
        for (t, c) in kept {
            tokens.push(t.to_string());
            counts.push(c);
        }
        Ok(Self::from_parts(tokens, counts))
    }

    /// Vocabulary with a fixed token order, such as one read back from a
    /// vector file. Entries 0 and 1 must be the special tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self, EmbeddingError> {
        if tokens.len() < 2 || tokens[PAD] != PAD_TOKEN || tokens[UNK] != UNK_TOKEN {
            return Err(EmbeddingError::MissingSpecialTokens);
        }
        let n = tokens.len();
        let v = Self::from_parts(tokens, vec![0; n]);
        if v.index.len() != n {
            return Err(EmbeddingError::DuplicateToken);
        }
        Ok(v)
    }

    fn from_parts(tokens: Vec<String>, counts: Vec<u64>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Self { tokens, counts, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// Index of `token`, or [`UNK`].
    pub fn id(&self, token: &str) -> usize {
        self.get(token).unwrap_or(UNK)
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Training frequency; zero for vocabularies rebuilt from token lists.
    pub fn count(&self, id: usize) -> u64 {
        self.counts[id]
    }

    /// Hex sha256 over the ordered tokens.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0]);
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sents(rows: &[&str]) -> Vec<Vec<String>> {
        rows.iter().map(|r| r.split_whitespace().map(String::from).collect()).collect()
    }

    #[test]
    fn ordering_and_unk() {
        let v = Vocabulary::build(&sents(&["b a c", "a b d", "a e"]), 2).unwrap();
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "a", "b"]);
        assert_eq!(v.count(UNK), 3);
        assert_eq!(v.id("zzz"), UNK);
        assert_eq!(v.encode(&["b", "c"]), vec![3, UNK]);
    }

    #[test]
    fn empty_after_cut() {
        assert!(matches!(
            Vocabulary::build(&sents(&["one two three"]), 2),
            Err(EmbeddingError::EmptyVocabulary { min_count: 2 })
        ));
    }

    #[test]
    fn hash_depends_on_order_only() {
        let v = Vocabulary::build(&sents(&["x y x y z"]), 1).unwrap();
        let w = Vocabulary::from_tokens(v.tokens().to_vec()).unwrap();
        assert_eq!(v.hash(), w.hash());
        let mut swapped = v.tokens().to_vec();
        swapped.swap(2, 3);
        assert_ne!(Vocabulary::from_tokens(swapped).unwrap().hash(), v.hash());
        assert!(Vocabulary::from_tokens(vec!["<pad>".into()]).is_err());
        assert!(Vocabulary::from_tokens(vec!["<pad>".into(), "<unk>".into(), "a".into(), "a".into()]).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let v = Vocabulary::build(&sents(&["x y x"]), 1).unwrap();
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.get("y"), Some(3));
    }
}
