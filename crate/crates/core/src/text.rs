//! Tokenization shared by the feature extractors and the credibility model.

/// Lowercases, splits on Unicode whitespace and trims non-alphanumeric
/// characters from both ends of each token. Tokens that are left empty are
/// dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|raw| {
            raw.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|t| !t.is_empty())
        .collect()
}

/// Lowercase and collapse runs of whitespace into single spaces.
pub fn normalize_whitespace(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for (i, word) in text.split_whitespace().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(&word.to_lowercase());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_edge_punctuation() {
        assert_eq!(
            tokenize("Hello, WORLD!! #Munich @bbc it's"),
            vec!["hello", "world", "munich", "bbc", "it's"]
        );
    }

    #[test]
    fn drops_pure_punctuation_tokens() {
        assert_eq!(tokenize("?? :-) $"), Vec::<String>::new());
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn whitespace_normalization() {
        assert_eq!(
            normalize_whitespace("  NOT\t\nTRUE  at all "),
            "not true at all"
        );
    }
}
