use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_chacha::ChaCha8Rng;

use super::{check_index, Candidates, PerturbError, ReplacementModel, Result};
use crate::corpus::{Token, Vocabulary};

/// Draws replacements from the retained vocabulary, either uniformly or in
/// proportion to document frequency, excluding the word being replaced.
#[derive(Debug, Clone)]
pub struct CorpusSampler {
    name: &'static str,
    words: Vec<Token>,
    weights: Vec<f64>,
    index: HashMap<Token, usize>,
    dist: WeightedIndex<f64>,
}

impl CorpusSampler {
    pub fn uniform(vocabulary: &Vocabulary) -> Result<Self> {
        Self::with_weights("uniform", vocabulary.words.clone(), vec![1.0; vocabulary.words.len()])
    }

    pub fn unigram(vocabulary: &Vocabulary) -> Result<Self> {
        let weights = vocabulary.words.iter().map(|w| vocabulary.doc_freq(w.as_str()) as f64).collect();
        Self::with_weights("unigram", vocabulary.words.clone(), weights)
    }

    fn with_weights(name: &'static str, words: Vec<Token>, weights: Vec<f64>) -> Result<Self> {
        if words.len() < 2 {
            return Err(PerturbError::VocabularyTooSmall(words.len()));
        }
        let dist = WeightedIndex::new(&weights).map_err(|e| PerturbError::InvalidConfig(e.to_string()))?;
        let index = words.iter().cloned().enumerate().map(|(i, w)| (w, i)).collect();
        Ok(Self {
            name,
            words,
            weights,
            index,
            dist,
        })
    }

    fn excluded(&self, tokens: &[Token], i: usize) -> Option<usize> {
        self.index.get(&tokens[i]).copied()
    }
}

impl ReplacementModel for CorpusSampler {
    fn name(&self) -> String {
        self.name.to_string()
    }

    fn support_size(&self, tokens: &[Token], i: usize) -> Result<usize> {
        check_index(tokens, i)?;
        Ok(self.words.len() - usize::from(self.excluded(tokens, i).is_some()))
    }

    fn enumerate(&self, tokens: &[Token], i: usize) -> Result<Candidates> {
        check_index(tokens, i)?;
        let skip = self.excluded(tokens, i);
        let entries = self
            .words
            .iter()
            .zip(&self.weights)
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, (w, p))| (w.clone(), *p))
            .collect();
        Candidates::normalized(entries, None)
    }

    fn sample(&self, tokens: &[Token], i: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Candidates> {
        check_index(tokens, i)?;
        let skip = self.excluded(tokens, i);
        // rejection of the masked word; at least one other word has weight > 0
        let draws = (0..k)
            .map(|_| loop {
                let j = self.dist.sample(rng);
                if Some(j) != skip {
                    break self.words[j].clone();
                }
            })
            .collect();
        Candidates::from_draws(draws)
    }
}
