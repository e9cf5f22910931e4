use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::UnicodeNormalization;

pub const URL_TOKEN: &str = "<url>";
pub const USER_TOKEN: &str = "<user>";
pub const NUM_TOKEN: &str = "<num>";

fn pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)
            (?P<url>(?:https?://|www\.)\S+)
            | (?P<user>@\w+)
            | (?P<num>\d+(?:[.,]\d+)*)
            | (?P<word>[\p{L}\p{N}][\p{L}\p{M}\p{N}]*)
            | (?P<sym>\p{So})",
        )
        .expect("token pattern")
    })
}

/// Lowercased NFC tokens. URLs, mentions and numbers collapse to
/// placeholder tokens, `#` is dropped from hashtags, and punctuation,
/// whitespace and other separators split words. Pictographs are kept as
/// one-character tokens.
///
/// ```
/// use crisisnews_core::embeddings::tokenize;
/// assert_eq!(
///     tokenize("Explosion near #Bataclan http://t.co/x"),
///     ["explosion", "near", "bataclan", "<url>"]
/// );
/// ```
pub fn tokenize(text: &str) -> Vec<String> {
    let text: String = text.nfc().collect::<String>().to_lowercase();
    pattern()
        .captures_iter(&text)
        .map(|c| {
            if c.name("url").is_some() {
                URL_TOKEN.to_string()
            } else if c.name("user").is_some() {
                USER_TOKEN.to_string()
            } else if c.name("num").is_some() {
                NUM_TOKEN.to_string()
            } else {
                c[0].to_string()
            }
        })
        .collect()
}
