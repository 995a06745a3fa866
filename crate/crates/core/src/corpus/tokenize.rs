use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

/// A normalized word. Cheap to clone; compares by its text.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Token(Arc<str>);

impl Token {
    /// Wraps already-normalized text. Callers outside the tokenizer are
    /// responsible for passing a non-empty, whitespace-free word.
    pub fn new(text: &str) -> Self {
        Token(Arc::from(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Token {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Token {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Token {
    fn from(s: &str) -> Self {
        Token::new(s)
    }
}

impl fmt::Debug for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    /// Segment on Unicode word boundaries and drop punctuation. When off,
    /// tokens are whitespace-separated runs kept verbatim.
    pub strip_punctuation: bool,
    /// Words removed after normalization. Empty by default: stopwords change
    /// the per-word sentence counts.
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_punctuation: true,
            stopwords: BTreeSet::new(),
        }
    }
}

pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<Token> {
    let normalize = |w: &str| -> Option<Token> {
        let word = if config.lowercase { w.to_lowercase() } else { w.to_string() };
        if word.is_empty() || word.chars().any(char::is_whitespace) || config.stopwords.contains(&word) {
            return None;
        }
        Some(Token::new(&word))
    };
    if config.strip_punctuation {
        text.unicode_words().filter_map(normalize).collect()
    } else {
        text.split_whitespace().filter_map(normalize).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(text: &str) -> Vec<String> {
        tokenize(text, &TokenizerConfig::default())
            .into_iter()
            .map(|t| t.to_string())
            .collect()
    }

    #[test]
    fn normalizes_case_and_punctuation() {
        assert_eq!(words("You are GREAT!"), ["you", "are", "great"]);
        assert_eq!(words("bad dog"), ["bad", "dog"]);
        assert!(words("").is_empty());
        assert!(words("  ?! ").is_empty());
    }

    #[test]
    fn stopwords_and_raw_mode() {
        let mut cfg = TokenizerConfig::default();
        cfg.stopwords.insert("are".into());
        let toks: Vec<_> = tokenize("You are GREAT!", &cfg).into_iter().map(|t| t.to_string()).collect();
        assert_eq!(toks, ["you", "great"]);

        let raw = TokenizerConfig {
            lowercase: false,
            strip_punctuation: false,
            stopwords: BTreeSet::new(),
        };
        let toks: Vec<_> = tokenize("You are GREAT!", &raw).into_iter().map(|t| t.to_string()).collect();
        assert_eq!(toks, ["You", "are", "GREAT!"]);
    }

    proptest! {
        #[test]
        fn idempotent_on_rejoin(text in "\\PC{0,80}") {
            let cfg = TokenizerConfig::default();
            let once = tokenize(&text, &cfg);
            let joined = once.iter().map(Token::as_str).collect::<Vec<_>>().join(" ");
            prop_assert_eq!(tokenize(&joined, &cfg), once.clone());
            for t in &once {
                prop_assert!(!t.as_str().is_empty());
                prop_assert!(!t.as_str().chars().any(char::is_whitespace));
            }
        }
    }
}
