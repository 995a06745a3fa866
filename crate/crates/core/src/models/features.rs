use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{Token, Vocabulary};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMode {
    Counts,
    #[default]
    Binary,
}

/// Sparse bag-of-words vector: (vocabulary index, value) sorted by index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BowVector {
    pub entries: Vec<(usize, f64)>,
}

impl BowVector {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i] * v).sum()
    }
}

fn build(indices: impl Iterator<Item = usize>, mode: FeatureMode) -> BowVector {
    let mut idx: Vec<usize> = indices.collect();
    idx.sort_unstable();
    let mut entries: Vec<(usize, f64)> = Vec::with_capacity(idx.len());
    for i in idx {
        match entries.last_mut() {
            Some((last, v)) if *last == i => {
                if mode == FeatureMode::Counts {
                    *v += 1.0;
                }
            }
            _ => entries.push((i, 1.0)),
        }
    }
    BowVector { entries }
}

/// Bag-of-words features over the retained vocabulary; unknown tokens are
/// dropped.
pub fn featurize(vocabulary: &Vocabulary, tokens: &[Token], mode: FeatureMode) -> BowVector {
    build(tokens.iter().filter_map(|t| vocabulary.index_of(t.as_str())), mode)
}

/// A serializable feature space: the retained word list plus the mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "FeatureSpaceRepr", into = "FeatureSpaceRepr")]
pub struct FeatureSpace {
    words: Vec<Token>,
    mode: FeatureMode,
    hash: String,
    index: HashMap<Token, usize>,
}

#[derive(Serialize, Deserialize)]
struct FeatureSpaceRepr {
    mode: FeatureMode,
    vocabulary_hash: String,
    words: Vec<Token>,
}

impl From<FeatureSpaceRepr> for FeatureSpace {
    fn from(r: FeatureSpaceRepr) -> Self {
        let index = r.words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Self {
            words: r.words,
            mode: r.mode,
            hash: r.vocabulary_hash,
            index,
        }
    }
}

impl From<FeatureSpace> for FeatureSpaceRepr {
    fn from(s: FeatureSpace) -> Self {
        Self {
            mode: s.mode,
            vocabulary_hash: s.hash,
            words: s.words,
        }
    }
}

impl PartialEq for FeatureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words && self.mode == other.mode && self.hash == other.hash
    }
}

impl FeatureSpace {
    pub fn new(vocabulary: &Vocabulary, mode: FeatureMode) -> Self {
        FeatureSpaceRepr {
            mode,
            vocabulary_hash: vocabulary.hash(),
            words: vocabulary.words.clone(),
        }
        .into()
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn mode(&self) -> FeatureMode {
        self.mode
    }

    pub fn words(&self) -> &[Token] {
        &self.words
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    /// Recomputes the hash from the stored words; used to detect tampering.
    pub(crate) fn hash_is_consistent(&self) -> bool {
        crate::corpus::vocab_hash_of(&self.words) == self.hash
    }

    pub fn featurize(&self, tokens: &[Token]) -> BowVector {
        build(tokens.iter().filter_map(|t| self.index.get(t.as_str()).copied()), self.mode)
    }
}
