//! Correlation-only word and sentence models.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{fingerprint_of, AttributeEstimator};
use crate::corpus::{build_vocabulary, Dataset, Token, Vocabulary};

/// â(w): the fraction of sentences containing `w` that carry the attribute.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "WordModelRepr", into = "WordModelRepr")]
pub struct WordAttributeModel {
    scores: HashMap<Token, f64>,
    default: f64,
    vocabulary_hash: String,
}

#[derive(Serialize, Deserialize)]
struct WordModelRepr {
    default: f64,
    vocabulary_hash: String,
    /// Sorted by word so that serialization is deterministic.
    scores: Vec<(Token, f64)>,
}

impl From<WordModelRepr> for WordAttributeModel {
    fn from(r: WordModelRepr) -> Self {
        Self {
            scores: r.scores.into_iter().collect(),
            default: r.default,
            vocabulary_hash: r.vocabulary_hash,
        }
    }
}

impl From<WordAttributeModel> for WordModelRepr {
    fn from(m: WordAttributeModel) -> Self {
        let mut scores: Vec<(Token, f64)> = m.scores.into_iter().collect();
        scores.sort_by(|a, b| a.0.cmp(&b.0));
        Self {
            default: m.default,
            vocabulary_hash: m.vocabulary_hash,
            scores,
        }
    }
}

impl PartialEq for WordAttributeModel {
    fn eq(&self, other: &Self) -> bool {
        self.default == other.default && self.vocabulary_hash == other.vocabulary_hash && self.scores == other.scores
    }
}

impl WordAttributeModel {
    /// Scores every retained word of `vocabulary` as attr_freq / doc_freq.
    pub fn from_vocabulary(vocabulary: &Vocabulary, default: f64) -> Self {
        let scores = vocabulary
            .words
            .iter()
            .map(|w| {
                let df = vocabulary.doc_freq(w.as_str());
                let af = vocabulary.attr_freq(w.as_str());
                (w.clone(), af as f64 / df as f64)
            })
            .collect();
        Self {
            scores,
            default,
            vocabulary_hash: vocabulary.hash(),
        }
    }

    /// â(w); unseen and dropped words get the default.
    pub fn score(&self, word: &str) -> f64 {
        self.scores.get(word).copied().unwrap_or(self.default)
    }

    pub fn default_score(&self) -> f64 {
        self.default
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub(crate) fn hash_is_consistent(&self) -> bool {
        let mut words: Vec<Token> = self.scores.keys().cloned().collect();
        words.sort();
        crate::corpus::vocab_hash_of(&words) == self.vocabulary_hash
    }

    pub fn vocabulary_hash(&self) -> &str {
        &self.vocabulary_hash
    }

    /// Max of â over `tokens` skipping `skip`, or the default when nothing
    /// remains. This is Â of the context around position `skip`.
    pub fn context_score(&self, tokens: &[Token], skip: usize) -> f64 {
        tokens
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != skip)
            .map(|(_, t)| self.score(t.as_str()))
            .reduce(f64::max)
            .unwrap_or(self.default)
    }
}

pub fn train_word_model(dataset: &Dataset, min_count: usize, default: f64) -> WordAttributeModel {
    WordAttributeModel::from_vocabulary(&build_vocabulary(dataset, min_count), default)
}

/// Â(s) = max over the words of `s` of â(w). Conservative: one high-scoring
/// word flags the whole sentence. The empty sentence scores the default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxWordSentenceModel {
    pub word_model: WordAttributeModel,
}

impl MaxWordSentenceModel {
    pub fn new(word_model: WordAttributeModel) -> Self {
        Self { word_model }
    }

    pub fn train(dataset: &Dataset, min_count: usize, default: f64) -> Self {
        Self::new(train_word_model(dataset, min_count, default))
    }
}

impl AttributeEstimator for MaxWordSentenceModel {
    fn name(&self) -> String {
        "MaxWord".to_string()
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        tokens
            .iter()
            .map(|t| self.word_model.score(t.as_str()))
            .reduce(f64::max)
            .unwrap_or(self.word_model.default)
    }

    fn vocabulary_hash(&self) -> Option<&str> {
        Some(&self.word_model.vocabulary_hash)
    }

    fn fingerprint(&self) -> String {
        fingerprint_of("max-word", self)
    }
}
