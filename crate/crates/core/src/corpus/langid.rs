use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use super::{CorpusError, CorpusSlice};

/// Minimum seed text per language accepted by [`NaiveBayesIdentifier::train`].
pub const MIN_SEED_CHARS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    En,
    Ar,
    Fr,
    De,
    Es,
}

impl Language {
    pub const ALL: [Language; 5] = [Language::En, Language::Ar, Language::Fr, Language::De, Language::Es];

    pub fn code(self) -> &'static str {
        match self {
            Language::En => "en",
            Language::Ar => "ar",
            Language::Fr => "fr",
            Language::De => "de",
            Language::Es => "es",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Language::En => "English",
            Language::Ar => "Arabic",
            Language::Fr => "French",
            Language::De => "German",
            Language::Es => "Spanish",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Language {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Language::ALL
            .into_iter()
            .find(|l| l.code().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unsupported language {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Identification {
    /// `None` when the text carries no letters to judge.
    pub language: Option<Language>,
    pub confidence: f64,
}

pub trait LanguageIdentifier {
    fn identify(&self, text: &str) -> Result<Identification, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Script {
    Latin,
    Arabic,
    Other,
}

fn script(c: char) -> Script {
    match c {
        '\u{0600}'..='\u{06FF}' | '\u{0750}'..='\u{077F}' | '\u{08A0}'..='\u{08FF}' | '\u{FB50}'..='\u{FDFF}'
        | '\u{FE70}'..='\u{FEFF}' => Script::Arabic,
        'a'..='z' | 'A'..='Z' | '\u{00C0}'..='\u{024F}' | '\u{1E00}'..='\u{1EFF}' => Script::Latin,
        _ => Script::Other,
    }
}

/// Lowercased letters with every run of non-letters collapsed to one space,
/// padded with a space on both sides.
fn normalize(text: &str) -> Vec<char> {
    let mut out = vec![' '];
    for c in text.nfc().flat_map(char::to_lowercase) {
        if c.is_alphabetic() {
            out.push(c);
        } else if out.last() != Some(&' ') {
            out.push(' ');
        }
    }
    if out.last() != Some(&' ') {
        out.push(' ');
    }
    out
}

fn trigrams(chars: &[char]) -> impl Iterator<Item = String> + '_ {
    chars.windows(3).map(|w| w.iter().collect())
}

/// Character-trigram multinomial Naive Bayes with add-one smoothing and a
/// per-language script distribution over the letters of the input.
#[derive(Debug, Clone)]
pub struct NaiveBayesIdentifier {
    languages: Vec<Language>,
    counts: Vec<HashMap<String, u32>>,
    totals: Vec<u64>,
    vocabulary: usize,
    /// ln P(script | language) for Latin, Arabic, other.
    script_log_prob: Vec<[f64; 3]>,
}

impl NaiveBayesIdentifier {
    /// Train from seed texts; several texts for one language are pooled.
    pub fn train(seeds: &[(Language, &str)]) -> Result<Self, CorpusError> {
        let mut pooled: BTreeMap<Language, String> = BTreeMap::new();
        for (lang, text) in seeds {
            let entry = pooled.entry(*lang).or_default();
            entry.push_str(text);
            entry.push('\n');
        }
        if pooled.len() < 2 {
            return Err(CorpusError::Training(format!("need at least 2 languages, got {}", pooled.len())));
        }
        let mut model = Self {
            languages: Vec::new(),
            counts: Vec::new(),
            totals: Vec::new(),
            vocabulary: 0,
            script_log_prob: Vec::new(),
        };
        let mut vocabulary: HashSet<String> = HashSet::new();
        for (lang, text) in &pooled {
            let n_chars = text.chars().filter(|c| !c.is_whitespace()).count();
            if n_chars < MIN_SEED_CHARS {
                return Err(CorpusError::Training(format!(
                    "{lang} seed text has {n_chars} characters, need {MIN_SEED_CHARS}"
                )));
            }
            let chars = normalize(text);
            let mut counts: HashMap<String, u32> = HashMap::new();
            for g in trigrams(&chars) {
                *counts.entry(g.clone()).or_default() += 1;
                vocabulary.insert(g);
            }
            let mut scripts = [1.0f64; 3];
            for &c in chars.iter().filter(|c| **c != ' ') {
                scripts[script(c) as usize] += 1.0;
            }
            let total: f64 = scripts.iter().sum();
            model.languages.push(*lang);
            model.totals.push(counts.values().map(|&c| c as u64).sum());
            model.counts.push(counts);
            model.script_log_prob.push(scripts.map(|s| (s / total).ln()));
        }
        model.vocabulary = vocabulary.len() + 1;
        Ok(model)
    }

    /// Model trained on the bundled news-style seed texts for all five languages.
    pub fn builtin() -> Self {
        let seeds = [
            (Language::En, include_str!("../../data/langid/en.txt")),
            (Language::Ar, include_str!("../../data/langid/ar.txt")),
            (Language::Fr, include_str!("../../data/langid/fr.txt")),
            (Language::De, include_str!("../../data/langid/de.txt")),
            (Language::Es, include_str!("../../data/langid/es.txt")),
        ];
        Self::train(&seeds).expect("bundled seed texts are valid")
    }

    pub fn languages(&self) -> &[Language] {
        &self.languages
    }

    /// Normalised posterior over the trained languages, or `None` for text
    /// without letters.
    pub fn posterior(&self, text: &str) -> Option<Vec<(Language, f64)>> {
        let chars = normalize(text);
        let letters: Vec<char> = chars.iter().copied().filter(|c| *c != ' ').collect();
        if letters.is_empty() {
            return None;
        }
        let grams: Vec<String> = trigrams(&chars).collect();
        let scores: Vec<f64> = (0..self.languages.len())
            .map(|l| {
                let denom = (self.totals[l] + self.vocabulary as u64) as f64;
                let ngram: f64 = grams
                    .iter()
                    .map(|g| ((self.counts[l].get(g).copied().unwrap_or(0) as f64 + 1.0) / denom).ln())
                    .sum();
                let scripts: f64 = letters.iter().map(|&c| self.script_log_prob[l][script(c) as usize]).sum();
                ngram + scripts
            })
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = weights.iter().sum();
        Some(self.languages.iter().copied().zip(weights.into_iter().map(|w| w / z)).collect())
    }
}

impl LanguageIdentifier for NaiveBayesIdentifier {
    fn identify(&self, text: &str) -> Result<Identification, String> {
        Ok(match self.posterior(text) {
            None => Identification { language: None, confidence: 0.0 },
            Some(post) => {
                let (language, confidence) =
                    post.into_iter().fold((None, -1.0), |best, (l, p)| if p > best.1 { (Some(l), p) } else { best });
                Identification { language, confidence }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GateOutcome {
    pub accepted: CorpusSlice,
    pub review: CorpusSlice,
    /// Confident identifications per language code, Spanish included.
    pub language_counts: BTreeMap<String, usize>,
    pub dropped_spanish: usize,
}

/// Assign languages and split the corpus on identifier confidence.
///
/// Tweets at or above `min_conf` are accepted, except Spanish ones, which
/// are dropped. Everything else, including tweets the identifier fails on
/// (recorded with confidence 0), goes to the review queue.
pub fn language_gate(corpus: &CorpusSlice, identifier: &dyn LanguageIdentifier, min_conf: f64) -> GateOutcome {
    let mut accepted = Vec::new();
    let mut review = Vec::new();
    let mut language_counts = BTreeMap::new();
    let mut dropped_spanish = 0;
    for tweet in &corpus.tweets {
        let id = identifier.identify(&tweet.text).unwrap_or_else(|e| {
            log::warn!("language identification failed for tweet {}: {e}", tweet.id);
            Identification { language: None, confidence: 0.0 }
        });
        let mut t = tweet.clone();
        t.lang = id.language.map(|l| l.code().to_string());
        t.lang_confidence = Some(id.confidence);
        match id.language {
            Some(lang) if id.confidence >= min_conf => {
                *language_counts.entry(lang.code().to_string()).or_insert(0) += 1;
                if lang == Language::Es {
                    dropped_spanish += 1;
                } else {
                    accepted.push(t);
                }
            }
            _ => review.push(t),
        }
    }
    let detail = |branch: &str| {
        serde_json::json!({ "min_conf": min_conf, "branch": branch, "dropped_spanish": dropped_spanish })
    };
    GateOutcome {
        accepted: corpus.derive(accepted, "language_gate", detail("accepted")),
        review: corpus.derive(review, "language_gate", detail("review")),
        language_counts,
        dropped_spanish,
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::tweet;
    use super::*;

    struct Fixed(Vec<Result<Identification, String>>);

    impl LanguageIdentifier for Fixed {
        fn identify(&self, text: &str) -> Result<Identification, String> {
            self.0[text.parse::<usize>().unwrap()].clone()
        }
    }

    #[test]
    fn gate_routes_by_confidence() {
        let ident = Fixed(vec![
            Ok(Identification { language: Some(Language::En), confidence: 0.99 }),
            Ok(Identification { language: Some(Language::Fr), confidence: 0.80 }),
            Ok(Identification { language: Some(Language::Es), confidence: 0.99 }),
            Err("boom".into()),
            Ok(Identification { language: Some(Language::De), confidence: 0.95 }),
        ]);
        let s = CorpusSlice::from_tweets((0..5).map(|i| tweet(&format!("t{i}"), i, &i.to_string())).collect());
        let out = language_gate(&s, &ident, 0.95);
        assert_eq!(out.accepted.ids(), vec!["t0", "t4"]);
        assert_eq!(out.review.ids(), vec!["t1", "t3"]);
        assert_eq!(out.review.tweets[1].lang_confidence, Some(0.0));
        assert_eq!(out.accepted.tweets[0].lang.as_deref(), Some("en"));
        assert_eq!(out.dropped_spanish, 1);
        assert_eq!(out.language_counts.get("es"), Some(&1));
    }

    #[test]
    fn builtin_examples() {
        let m = NaiveBayesIdentifier::builtin();
        let fr = m.identify("les attaques à paris ce soir").unwrap();
        assert_eq!(fr.language, Some(Language::Fr));
        assert!(fr.confidence > 0.95, "{fr:?}");
        let ar = m.identify("انفجار في وسط المدينة").unwrap();
        assert_eq!(ar.language, Some(Language::Ar));
        assert!(ar.confidence > 0.99);
        assert_eq!(m.identify("").unwrap(), Identification { language: None, confidence: 0.0 });
        assert_eq!(m.identify("12:30 !!! ...").unwrap().confidence, 0.0);
    }

    #[test]
    fn training_preconditions() {
        let long = "word ".repeat(400);
        assert!(matches!(NaiveBayesIdentifier::train(&[(Language::En, &long)]), Err(CorpusError::Training(_))));
        assert!(NaiveBayesIdentifier::train(&[(Language::En, &long), (Language::Fr, "trop court")]).is_err());
        assert!(NaiveBayesIdentifier::train(&[(Language::En, &long), (Language::Fr, &"mot ".repeat(400))]).is_ok());
    }

    #[test]
    fn posterior_is_normalized() {
        let m = NaiveBayesIdentifier::builtin();
        let p = m.posterior("Die Regierung hat heute neue Maßnahmen angekündigt").unwrap();
        assert!((p.iter().map(|x| x.1).sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(m.identify("Die Regierung hat heute neue Maßnahmen angekündigt").unwrap().language, Some(Language::De));
    }
}
