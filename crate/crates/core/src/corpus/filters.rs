use std::collections::BTreeSet;

use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use super::ingest::hashtags_in;
use super::{CorpusError, CorpusSlice, Event, NewsAccount, TweetRecord};

/// Keep tweets authored by one of `accounts`. The provenance entry records a
/// SHA-256 of the sorted account ids rather than the list itself.
pub fn filter_by_accounts(corpus: &CorpusSlice, accounts: &[NewsAccount]) -> Result<CorpusSlice, CorpusError> {
    if accounts.is_empty() {
        return Err(CorpusError::EmptyAccounts);
    }
    let ids: BTreeSet<&str> = accounts.iter().map(|a| a.user_id.as_str()).collect();
    let mut hasher = Sha256::new();
    for id in &ids {
        hasher.update(id.as_bytes());
        hasher.update(b"\n");
    }
    let kept = corpus.tweets.iter().filter(|t| ids.contains(t.user_id.as_str())).cloned().collect();
    let detail = serde_json::json!({ "accounts": ids.len(), "account_hash": hex::encode(hasher.finalize()) });
    Ok(corpus.derive(kept, "filter_by_accounts", detail))
}

pub fn remove_retweets(corpus: &CorpusSlice) -> CorpusSlice {
    let kept = corpus.tweets.iter().filter(|t| !t.is_retweet).cloned().collect();
    corpus.derive(kept, "remove_retweets", serde_json::json!({}))
}

/// NFC plus lowercase, the form terms and texts are compared in.
pub fn normalize_term(term: &str) -> String {
    term.trim().nfc().collect::<String>().to_lowercase()
}

fn is_arabic(c: char) -> bool {
    matches!(c, '\u{0600}'..='\u{06FF}' | '\u{0750}'..='\u{077F}' | '\u{08A0}'..='\u{08FF}' | '\u{FB50}'..='\u{FDFF}' | '\u{FE70}'..='\u{FEFF}')
}

fn tokens(text: &str) -> Vec<&str> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).collect()
}

struct Matcher {
    /// Latin-script terms as token sequences.
    token_terms: Vec<Vec<String>>,
    /// Arabic-script terms, matched as substrings.
    substring_terms: Vec<String>,
    /// Every term with separators removed, matched inside hashtags.
    hashtag_terms: Vec<String>,
}

impl Matcher {
    fn new(terms: &[String]) -> Self {
        let mut m = Matcher { token_terms: Vec::new(), substring_terms: Vec::new(), hashtag_terms: Vec::new() };
        for term in terms {
            let t = normalize_term(term);
            if t.is_empty() {
                continue;
            }
            if t.chars().any(is_arabic) {
                m.substring_terms.push(t.clone());
            } else {
                m.token_terms.push(tokens(&t).into_iter().map(str::to_string).collect());
            }
            m.hashtag_terms.push(t.chars().filter(|c| c.is_alphanumeric()).collect());
        }
        m
    }

    fn matches(&self, tweet: &TweetRecord) -> bool {
        let text = normalize_term(&tweet.text);
        if self.substring_terms.iter().any(|t| text.contains(t.as_str())) {
            return true;
        }
        let toks = tokens(&text);
        let hit = self
            .token_terms
            .iter()
            .any(|term| !term.is_empty() && toks.windows(term.len()).any(|w| w.iter().zip(term).all(|(a, b)| a == b)));
        if hit {
            return true;
        }
        let tags: BTreeSet<String> =
            tweet.hashtags.iter().map(|h| normalize_term(h)).chain(hashtags_in(&text)).collect();
        tags.iter().any(|tag| self.hashtag_terms.iter().any(|t| !t.is_empty() && tag.contains(t.as_str())))
    }
}

/// Drop tweets that mention any of `exclude_terms`.
///
/// Text and terms are compared after NFC normalization and lowercasing.
/// Latin-script terms must match whole tokens (multi-word terms match
/// consecutive tokens), Arabic-script terms match anywhere in the text, and
/// any term matches as a substring of a hashtag.
pub fn filter_by_terms(corpus: &CorpusSlice, exclude_terms: &[String]) -> CorpusSlice {
    let matcher = Matcher::new(exclude_terms);
    let kept = corpus.tweets.iter().filter(|t| !matcher.matches(t)).cloned().collect();
    let terms: Vec<String> = exclude_terms.iter().map(|t| normalize_term(t)).collect();
    corpus.derive(kept, "filter_by_terms", serde_json::json!({ "terms": terms }))
}

/// Terms naming the other event, removed so each dataset covers one attack.
pub fn default_exclusion_terms(event: Event) -> Vec<String> {
    let terms: &[&str] = match event {
        Event::Beirut => &["paris", "parís france", "parisattacks", "bataclan", "porteouverte"],
        Event::Paris => &["beirut", "lebanon", "beirutattacks", "لبنان", "بيروت"],
    };
    terms.iter().map(|t| normalize_term(t)).collect()
}
