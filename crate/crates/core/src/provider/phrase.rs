//! Feature phrases: short, lowercase, punctuation-free verb/object labels.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Longest phrase kept as-is.
pub const MAX_PHRASE_WORDS: usize = 8;
/// Phrases longer than this are rejected instead of truncated.
pub const MAX_ACCEPTED_WORDS: usize = 12;

/// A normalized feature phrase.
///
/// Construction goes through [`normalize_feature`], so every value is
/// lowercase, free of punctuation, whitespace-collapsed and holds between
/// one and [`MAX_PHRASE_WORDS`] words.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FeaturePhrase(String);

/// Why a raw string could not become a [`FeaturePhrase`].
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PhraseRejection {
    #[error("phrase is empty after normalization")]
    Empty,
    #[error("phrase has {0} words (limit {MAX_ACCEPTED_WORDS})")]
    TooLong(usize),
}

impl FeaturePhrase {
    pub fn new(raw: &str) -> Result<Self, PhraseRejection> {
        normalize_feature(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.0.split(' ')
    }

    pub fn word_count(&self) -> usize {
        self.words().count()
    }
}

impl fmt::Display for FeaturePhrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for FeaturePhrase {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for FeaturePhrase {
    type Error = PhraseRejection;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        normalize_feature(&value)
    }
}

impl From<FeaturePhrase> for String {
    fn from(value: FeaturePhrase) -> Self {
        value.0
    }
}

/// Lowercase, strip punctuation, collapse whitespace, then apply the word
/// limits: more than [`MAX_ACCEPTED_WORDS`] words is a rejection, more than
/// [`MAX_PHRASE_WORDS`] keeps the leading words.
pub fn normalize_feature(raw: &str) -> Result<FeaturePhrase, PhraseRejection> {
    let mut cleaned = String::with_capacity(raw.len());
    for ch in raw.chars().flat_map(char::to_lowercase) {
        if ch == '\'' || ch == '\u{2019}' {
            continue;
        }
        if ch.is_alphanumeric() {
            cleaned.push(ch);
        } else {
            cleaned.push(' ');
        }
    }
    let words: Vec<&str> = cleaned.split_whitespace().collect();
    match words.len() {
        0 => Err(PhraseRejection::Empty),
        n if n > MAX_ACCEPTED_WORDS => Err(PhraseRejection::TooLong(n)),
        n if n > MAX_PHRASE_WORDS => Ok(FeaturePhrase(words[..MAX_PHRASE_WORDS].join(" "))),
        _ => Ok(FeaturePhrase(words.join(" "))),
    }
}

/// True when `s` is already in normalized form.
pub fn is_normalized(s: &str) -> bool {
    matches!(normalize_feature(s), Ok(p) if p.as_str() == s)
}

/// Normalize a list of raw phrases, dropping rejections and duplicates while
/// keeping first-seen order.
pub fn normalize_all<I, S>(raw: I) -> Vec<FeaturePhrase>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in raw {
        if let Ok(p) = normalize_feature(r.as_ref()) {
            if seen.insert(p.clone()) {
                out.push(p);
            }
        }
    }
    out
}

/// Order-preserving dedup.
pub fn dedup_phrases(phrases: Vec<FeaturePhrase>) -> Vec<FeaturePhrase> {
    let mut seen = BTreeSet::new();
    phrases.into_iter().filter(|p| seen.insert(p.clone())).collect()
}

/// Split an identifier on underscores and camel-case boundaries into
/// lowercase tokens. `parseHTTPHeader_v2` becomes `parse http header v2`.
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for part in ident.split(|c: char| c == '_' || !c.is_alphanumeric()) {
        if part.is_empty() {
            continue;
        }
        let chars: Vec<char> = part.chars().collect();
        let mut current = String::new();
        for (i, &c) in chars.iter().enumerate() {
            let boundary = i > 0 && c.is_uppercase() && {
                let prev = chars[i - 1];
                let next_lower = chars.get(i + 1).is_some_and(|n| n.is_lowercase());
                prev.is_lowercase() || prev.is_ascii_digit() || (prev.is_uppercase() && next_lower)
            };
            if boundary && !current.is_empty() {
                tokens.push(std::mem::take(&mut current));
            }
            current.extend(c.to_lowercase());
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// Lowercase word tokens of a phrase list, as a set.
pub fn token_set<'a, I>(phrases: I) -> BTreeSet<&'a str>
where
    I: IntoIterator<Item = &'a FeaturePhrase>,
{
    phrases.into_iter().flat_map(|p| p.words()).collect()
}

/// Jaccard similarity of the token sets of two phrase lists. Two empty lists
/// are identical, so they score 1.
pub fn token_jaccard(a: &[FeaturePhrase], b: &[FeaturePhrase]) -> f64 {
    let ta = token_set(a);
    let tb = token_set(b);
    if ta.is_empty() && tb.is_empty() {
        return 1.0;
    }
    let inter = ta.intersection(&tb).count();
    let union = ta.union(&tb).count();
    inter as f64 / union as f64
}
