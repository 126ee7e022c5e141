use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CredibilityError;
use crate::text::tokenize;

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token ids: 0 is padding, 1 is unknown, tokens follow densely from 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i + 2))
            .collect();
        Self { tokens, index }
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.tokens
    }
}

impl Vocabulary {
    /// Total ids including the two reserved ones.
    pub fn size(&self) -> usize {
        self.tokens.len() + 2
    }

    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    /// Tokens in id order, starting at id 2.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Tokens seen at least `min_count` times, by descending frequency then
/// lexicographically.
pub fn build_vocabulary<S: AsRef<str>>(
    corpus: &[S],
    min_count: usize,
) -> Result<Vocabulary, CredibilityError> {
    if corpus.is_empty() {
        return Err(CredibilityError::EmptyCorpus);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for text in corpus {
        for tok in tokenize(text.as_ref()) {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut kept: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count.max(1))
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(Vocabulary::from(
        kept.into_iter().map(|(t, _)| t).collect::<Vec<_>>(),
    ))
}

/// Exactly `len` ids: truncated, or right-padded with [`PAD_ID`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TweetEncoding(pub Vec<usize>);

pub fn tokenize_and_pad(text: &str, vocab: &Vocabulary, len: usize) -> TweetEncoding {
    let mut ids: Vec<usize> = tokenize(text)
        .iter()
        .take(len)
        .map(|t| vocab.id(t))
        .collect();
    ids.resize(len, PAD_ID);
    TweetEncoding(ids)
}
