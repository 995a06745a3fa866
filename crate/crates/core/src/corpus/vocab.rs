use std::collections::{BTreeMap, HashMap, HashSet};

use sha2::{Digest, Sha256};

use super::{Dataset, Token};

/// Sentence-membership counts over a dataset.
///
/// `doc_freq` and `attr_freq` cover every observed word; `words` holds only
/// the words whose document frequency reaches `min_count`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub words: Vec<Token>,
    pub doc_freq: BTreeMap<Token, usize>,
    pub attr_freq: BTreeMap<Token, usize>,
    pub min_count: usize,
    index: HashMap<Token, usize>,
}

impl Vocabulary {
    /// A vocabulary over an explicit word list with no count information.
    pub fn from_words(words: impl IntoIterator<Item = Token>) -> Self {
        let mut words: Vec<Token> = words.into_iter().collect();
        words.sort();
        words.dedup();
        let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Self {
            words,
            doc_freq: BTreeMap::new(),
            attr_freq: BTreeMap::new(),
            min_count: 1,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Index of a retained word.
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn doc_freq(&self, word: &str) -> usize {
        self.doc_freq.get(word).copied().unwrap_or(0)
    }

    pub fn attr_freq(&self, word: &str) -> usize {
        self.attr_freq.get(word).copied().unwrap_or(0)
    }

    /// Hex SHA-256 over the retained word list; identifies the feature space.
    pub fn hash(&self) -> String {
        vocab_hash_of(&self.words)
    }
}

pub fn vocab_hash_of(words: &[Token]) -> String {
    let mut hasher = Sha256::new();
    for w in words {
        hasher.update(w.as_str().as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Counts, per word, the sentences containing it and the attribute-labeled
/// sentences containing it. A word repeated inside one sentence counts once.
pub fn build_vocabulary(dataset: &Dataset, min_count: usize) -> Vocabulary {
    let min_count = min_count.max(1);
    let mut doc_freq: BTreeMap<Token, usize> = BTreeMap::new();
    let mut attr_freq: BTreeMap<Token, usize> = BTreeMap::new();
    for ex in &dataset.examples {
        let distinct: HashSet<&Token> = ex.tokens.iter().collect();
        for tok in distinct {
            *doc_freq.entry(tok.clone()).or_default() += 1;
            let attr = attr_freq.entry(tok.clone()).or_default();
            if ex.label {
                *attr += 1;
            }
        }
    }
    let words: Vec<Token> = doc_freq
        .iter()
        .filter(|(_, &n)| n >= min_count)
        .map(|(w, _)| w.clone())
        .collect();
    let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
    Vocabulary {
        words,
        doc_freq,
        attr_freq,
        min_count,
        index,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenizerConfig;
    use proptest::prelude::*;

    fn toy() -> Dataset {
        Dataset::from_texts("toy", &[("bad dog", true), ("good dog", false)], &TokenizerConfig::default()).unwrap()
    }

    #[test]
    fn toy_counts() {
        let v = build_vocabulary(&toy(), 1);
        assert_eq!(v.doc_freq("bad"), 1);
        assert_eq!(v.doc_freq("good"), 1);
        assert_eq!(v.doc_freq("dog"), 2);
        assert_eq!(v.attr_freq("bad"), 1);
        assert_eq!(v.attr_freq("good"), 0);
        assert_eq!(v.attr_freq("dog"), 1);
        assert_eq!(v.words.len(), 3);
    }

    #[test]
    fn min_count_drops_rare_words() {
        let v = build_vocabulary(&toy(), 2);
        assert_eq!(v.words, vec![Token::new("dog")]);
        // dropped words keep their counts
        assert_eq!(v.doc_freq("bad"), 1);
        assert!(!v.contains("bad"));
    }

    #[test]
    fn repeated_word_counts_once() {
        let d = Dataset::from_texts("d", &[("dog dog", true)], &TokenizerConfig::default()).unwrap();
        let v = build_vocabulary(&d, 1);
        assert_eq!(v.doc_freq("dog"), 1);
        assert_eq!(v.attr_freq("dog"), 1);
    }

    proptest! {
        #[test]
        fn counts_match_brute_force(
            rows in prop::collection::vec((prop::collection::vec(0u8..8, 0..6), any::<bool>()), 1..25),
            min_count in 1usize..4,
        ) {
            let texts: Vec<(String, bool)> = rows
                .iter()
                .map(|(ws, l)| (ws.iter().map(|w| format!("w{w}")).collect::<Vec<_>>().join(" "), *l))
                .collect();
            let d = Dataset::from_texts("p", &texts, &TokenizerConfig::default()).unwrap();
            let v = build_vocabulary(&d, min_count);
            for w in 0u8..8 {
                let word = format!("w{w}");
                let df = d.examples.iter().filter(|e| e.contains(&word)).count();
                let af = d.examples.iter().filter(|e| e.label && e.contains(&word)).count();
                prop_assert_eq!(v.doc_freq(&word), df);
                prop_assert_eq!(v.attr_freq(&word), af);
                prop_assert_eq!(v.contains(&word), df >= min_count);
                prop_assert!(af <= df);
            }
        }
    }
}
