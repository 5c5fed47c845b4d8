//! Text normalization pipeline: case folding, splitting, stopping, stemming.
//!
//! The pipeline is deterministic. Stages run in a fixed order: lowercase,
//! split on non-alphanumeric characters, stopword removal, stemming.

use rust_stemmers::{Algorithm, Stemmer};
use std::collections::HashSet;
use std::sync::OnceLock;

/// Bundled English stopword list (function words and very common verbs).
///
/// Any fixed list works as long as it is documented and applied uniformly;
/// this one is checked into the repository and never changes at runtime.
pub const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am",
    "an", "and", "any", "are", "as", "at", "be", "because", "been", "before",
    "being", "below", "between", "both", "but", "by", "can", "cannot", "could",
    "did", "do", "does", "doing", "down", "during", "each", "few", "for",
    "from", "further", "had", "has", "have", "having", "he", "her", "here",
    "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into",
    "is", "it", "its", "itself", "just", "me", "more", "most", "my", "myself",
    "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or",
    "other", "ought", "our", "ours", "ourselves", "out", "over", "own", "same",
    "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "themselves", "then", "there", "these", "they", "this",
    "those", "through", "to", "too", "under", "until", "up", "upon", "us",
    "very", "was", "we", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your", "yours",
    "yourself", "yourselves",
];

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

fn stemmer() -> &'static Stemmer {
    static STEMMER: OnceLock<Stemmer> = OnceLock::new();
    STEMMER.get_or_init(|| Stemmer::create(Algorithm::English))
}

/// Normalization configuration applied to documents and topic titles alike.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TokenizerConfig {
    /// Fold input to lowercase before splitting.
    pub case_fold: bool,
    /// Remove tokens found in [`STOPWORDS`].
    pub stop: bool,
    /// Apply the bundled Snowball English (Porter-style) stemmer.
    pub stem: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            case_fold: true,
            stop: true,
            stem: true,
        }
    }
}

/// Tokenize raw text under the given pipeline.
///
/// Non-alphanumeric characters are separators. Empty input yields an empty
/// sequence; so does input consisting entirely of stopwords.
pub fn tokenize(text: &str, pipeline: &TokenizerConfig) -> Vec<String> {
    let folded;
    let text = if pipeline.case_fold {
        folded = text.to_lowercase();
        &folded
    } else {
        text
    };
    let stops = stopword_set();
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !pipeline.stop || !stops.contains(t))
        .map(|t| {
            if pipeline.stem {
                stemmer().stem(t).into_owned()
            } else {
                t.to_string()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_yields_empty_sequence() {
        assert!(tokenize("", &TokenizerConfig::default()).is_empty());
    }

    #[test]
    fn all_stopwords_yield_empty_sequence() {
        assert!(tokenize("The the THE", &TokenizerConfig::default()).is_empty());
    }

    // Expected stems frozen from a reference run of the Snowball English
    // stemmer on the same inputs.
    #[test]
    fn stemming_matches_reference_stemmer() {
        let got = tokenize("Falkland petroleum exploration", &TokenizerConfig::default());
        assert_eq!(got, vec!["falkland", "petroleum", "explor"]);
    }

    #[test]
    fn non_alphanumeric_characters_separate_tokens() {
        let cfg = TokenizerConfig {
            stem: false,
            ..TokenizerConfig::default()
        };
        assert_eq!(
            tokenize("oil-price, 1998/99 (update)", &cfg),
            vec!["oil", "price", "1998", "99", "update"]
        );
    }

    #[test]
    fn stages_can_be_disabled() {
        let cfg = TokenizerConfig {
            case_fold: false,
            stop: false,
            stem: false,
        };
        assert_eq!(tokenize("The Cat", &cfg), vec!["The", "Cat"]);
    }

    #[test]
    fn deterministic_output() {
        let cfg = TokenizerConfig::default();
        let a = tokenize("Falkland petroleum exploration programmes", &cfg);
        let b = tokenize("Falkland petroleum exploration programmes", &cfg);
        assert_eq!(a, b);
    }
}
