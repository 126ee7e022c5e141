//! Interval-level ensemble features: the mean credibility of a bucket's
//! tweets and the share of tweets using debunking language.

use std::path::Path;

use thiserror::Error;

use crate::credibility::CredibilityPrediction;
use crate::ingestion::IntervalBucket;
use crate::text::normalize_whitespace;

pub const ENSEMBLE_FEATURES: [&str; 2] = ["CreditScore", "CrowdWisdom"];

/// CreditScore of an interval without tweets.
pub const NEUTRAL_CREDIT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("debunk lexicon is empty")]
    Empty,
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Lowercase, whitespace-normalized phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DebunkLexicon {
    phrases: Vec<String>,
}

impl DebunkLexicon {
    pub fn new<S: AsRef<str>>(phrases: &[S]) -> Result<Self, LexiconError> {
        let mut phrases: Vec<String> = phrases
            .iter()
            .map(|p| normalize_whitespace(p.as_ref()))
            .filter(|p| !p.is_empty())
            .collect();
        phrases.sort();
        phrases.dedup();
        if phrases.is_empty() {
            return Err(LexiconError::Empty);
        }
        Ok(Self { phrases })
    }

    /// One phrase per line; blank lines and `#` comments are skipped.
    pub fn parse(content: &str) -> Result<Self, LexiconError> {
        let lines: Vec<&str> = content
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self::new(&lines)
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let content = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content)
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/debunk_words.txt")).expect("bundled lexicon is non-empty")
    }

    pub fn phrases(&self) -> &[String] {
        &self.phrases
    }

    pub fn matches(&self, text: &str) -> bool {
        let norm = normalize_whitespace(text);
        self.phrases.iter().any(|p| norm.contains(p.as_str()))
    }
}

/// Mean news probability; `(NEUTRAL_CREDIT, true)` when there are no
/// predictions.
pub fn credit_score(predictions: &[CredibilityPrediction]) -> (f64, bool) {
    if predictions.is_empty() {
        return (NEUTRAL_CREDIT, true);
    }
    let sum: f64 = predictions.iter().map(|p| p.p_news).sum();
    (sum / predictions.len() as f64, false)
}

/// Fraction of the bucket's tweets containing any debunking phrase.
pub fn crowd_wisdom(bucket: &IntervalBucket, lexicon: &DebunkLexicon) -> f64 {
    if bucket.is_empty() {
        return 0.0;
    }
    let hits = bucket
        .tweets
        .iter()
        .filter(|t| lexicon.matches(&t.text))
        .count();
    hits as f64 / bucket.len() as f64
}
