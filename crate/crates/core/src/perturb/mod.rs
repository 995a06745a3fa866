//! Replacement distributions for a single position of a sentence.
//!
//! A [`ReplacementModel`] proposes words `w'` to put in place of `tokens[i]`
//! together with probabilities. The ATE estimator either enumerates the full
//! distribution or draws from it. The lower-score filter restricts proposals
//! to words whose attribute score is below that of the surrounding context.

mod filter;
mod remote;
mod sampler;
pub mod stub;

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Token, Vocabulary};
use crate::models::WordAttributeModel;

pub use filter::{filter_assumption1, Assumption1Filter};
pub use remote::{RemoteConfig, RemoteReplacer};
pub use sampler::CorpusSampler;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("replacement needs at least 2 vocabulary words, found {0}")]
    VocabularyTooSmall(usize),
    #[error("position {index} out of range for a sentence of {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no replacement candidates to choose from")]
    NoCandidates,
    #[error("replacement server {endpoint} failed after {attempts} attempt(s): {message}")]
    Network {
        endpoint: String,
        attempts: usize,
        message: String,
    },
    #[error("replacement server {endpoint} protocol error: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("invalid replacement configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = PerturbError> = std::result::Result<T, E>;

/// A normalized distribution over replacement words.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    /// Distinct words with positive weights summing to 1.
    pub entries: Vec<(Token, f64)>,
    /// `Some(n)` when the weights are empirical frequencies of `n` draws,
    /// `None` for an exact distribution.
    pub draws: Option<usize>,
    /// Set when the lower-score filter rejected everything and fell back
    /// to the lowest-scoring candidate.
    pub fallback: bool,
}

impl Candidates {
    pub fn exact(entries: Vec<(Token, f64)>) -> Self {
        Self {
            entries,
            draws: None,
            fallback: false,
        }
    }

    /// Normalizes positive weights in place; errors if nothing is left.
    pub(crate) fn normalized(mut entries: Vec<(Token, f64)>, draws: Option<usize>) -> Result<Self> {
        entries.retain(|(_, w)| *w > 0.0);
        let total: f64 = entries.iter().map(|(_, w)| w).sum();
        if entries.is_empty() || !(total > 0.0) {
            return Err(PerturbError::NoCandidates);
        }
        entries.iter_mut().for_each(|(_, w)| *w /= total);
        Ok(Self {
            entries,
            draws,
            fallback: false,
        })
    }

    /// Aggregates individual draws into empirical weights, ordered by word.
    pub(crate) fn from_draws(draws: Vec<Token>) -> Result<Self> {
        let n = draws.len();
        let mut counts = std::collections::BTreeMap::<Token, usize>::new();
        for d in draws {
            *counts.entry(d).or_default() += 1;
        }
        let entries = counts.into_iter().map(|(w, c)| (w, c as f64)).collect();
        Self::normalized(entries, Some(n))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.entries.iter().any(|(w, _)| w.as_str() == word)
    }

    pub fn weight(&self, word: &str) -> f64 {
        self.entries
            .iter()
            .find(|(w, _)| w.as_str() == word)
            .map_or(0.0, |(_, p)| *p)
    }
}

/// Proposes replacements for `tokens[i]`. Implementations never propose
/// `tokens[i]` itself and are deterministic given the rng state.
pub trait ReplacementModel: Send + Sync {
    fn name(&self) -> String;

    /// Number of distinct words the exact distribution ranges over (an upper
    /// bound for filtered models).
    fn support_size(&self, tokens: &[Token], i: usize) -> Result<usize>;

    /// The full distribution.
    fn enumerate(&self, tokens: &[Token], i: usize) -> Result<Candidates>;

    /// `k` independent draws aggregated into empirical weights.
    fn sample(&self, tokens: &[Token], i: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Candidates>;

    /// At most `k` words: the full distribution when it fits, otherwise `k`
    /// draws.
    fn candidates(&self, tokens: &[Token], i: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Candidates> {
        if k >= self.support_size(tokens, i)? {
            self.enumerate(tokens, i)
        } else {
            self.sample(tokens, i, k, rng)
        }
    }
}

impl<T: ReplacementModel + ?Sized> ReplacementModel for Box<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn support_size(&self, tokens: &[Token], i: usize) -> Result<usize> {
        (**self).support_size(tokens, i)
    }
    fn enumerate(&self, tokens: &[Token], i: usize) -> Result<Candidates> {
        (**self).enumerate(tokens, i)
    }
    fn sample(&self, tokens: &[Token], i: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Candidates> {
        (**self).sample(tokens, i, k, rng)
    }
}

pub(crate) fn check_index(tokens: &[Token], i: usize) -> Result<()> {
    if i >= tokens.len() {
        return Err(PerturbError::IndexOutOfRange {
            index: i,
            len: tokens.len(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SamplerKind {
    Uniform,
    Unigram,
    Remote(RemoteConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReplacementConfig {
    pub sampler: SamplerKind,
    /// Draws per position on the Monte-Carlo path.
    pub k: usize,
    /// Enumerate exactly when the support has at most this many words.
    pub exact_enumeration_threshold: usize,
    pub assumption1_filter: bool,
    /// Rejection rounds before the filter falls back to enumeration.
    pub max_resamples: usize,
    pub seed: u64,
}

impl Default for ReplacementConfig {
    fn default() -> Self {
        Self {
            sampler: SamplerKind::Uniform,
            k: 16,
            exact_enumeration_threshold: 512,
            assumption1_filter: true,
            max_resamples: 8,
            seed: 0,
        }
    }
}

impl ReplacementConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(PerturbError::InvalidConfig("k must be at least 1".into()));
        }
        if let SamplerKind::Remote(r) = &self.sampler {
            r.validate()?;
        }
        Ok(())
    }
}

/// Builds the configured sampler, wrapped in the lower-score filter when
/// enabled.
pub fn build_replacer(
    config: &ReplacementConfig,
    vocabulary: &Vocabulary,
    word_model: Arc<WordAttributeModel>,
) -> Result<Box<dyn ReplacementModel>> {
    config.validate()?;
    let base: Box<dyn ReplacementModel> = match &config.sampler {
        SamplerKind::Uniform => Box::new(CorpusSampler::uniform(vocabulary)?),
        SamplerKind::Unigram => Box::new(CorpusSampler::unigram(vocabulary)?),
        SamplerKind::Remote(r) => Box::new(RemoteReplacer::new(r.clone())?),
    };
    Ok(if config.assumption1_filter {
        Box::new(Assumption1Filter::new(base, word_model, config.max_resamples))
    } else {
        base
    })
}
