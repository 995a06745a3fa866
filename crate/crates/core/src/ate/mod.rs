//! Treatment effects of single-word replacements, per-word average
//! treatment effects (ATE), the persisted ATE lookup table and sentence
//! scoring from it.

mod score;
mod table;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Dataset, Token, Vocabulary};
use crate::models::{train_word_model, AttributeEstimator};
use crate::perturb::{build_replacer, PerturbError, ReplacementConfig, ReplacementModel};

pub use score::{recursive_score_check, sentence_score, SentenceScore, TableScorer};
pub use table::{
    load_table, load_table_strict, read_table_csv, save_table, write_table_csv, AteTable, TableMetadata,
    TABLE_FORMAT, TABLE_VERSION,
};

#[derive(Debug, Error)]
pub enum AteError {
    #[error("insufficient support for {word:?}: {sentences} sentence(s), need {min_support}")]
    InsufficientSupport {
        word: String,
        sentences: usize,
        min_support: usize,
    },
    #[error("estimator was trained on vocabulary {found}, table vocabulary is {expected}")]
    VocabularyMismatch { expected: String, found: String },
    #[error("table was built with estimator {found}, expected {expected}")]
    EstimatorMismatch { expected: String, found: String },
    #[error("aggregation order p must be positive, got {0}")]
    InvalidOrder(f64),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corrupted table file: {0}")]
    Corrupt(String),
}

pub type Result<T, E = AteError> = std::result::Result<T, E>;

/// f(s) - f(s') where s' has `replacement` at position `i` and is otherwise `tokens`.
pub fn treatment_effect<E: AttributeEstimator + ?Sized>(
    estimator: &E,
    tokens: &[Token],
    i: usize,
    replacement: &Token,
) -> f64 {
    let mut swapped = tokens.to_vec();
    swapped[i] = replacement.clone();
    estimator.predict(tokens) - estimator.predict(&swapped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AteConfig {
    /// Minimum number of sentences containing a word for it to get an entry.
    pub min_support: usize,
    pub replacement: ReplacementConfig,
}

impl Default for AteConfig {
    fn default() -> Self {
        Self {
            min_support: 5,
            replacement: ReplacementConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AteEntry {
    pub word: Token,
    pub ate: f64,
    /// Number of (sentence, position) contexts averaged.
    pub support: usize,
    /// 0 when every context was enumerated exactly.
    pub mc_stderr: f64,
    pub n_fallbacks: usize,
}

/// E[f(s')] over the replacement distribution at one position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerEstimate {
    pub mean: f64,
    /// Variance of `mean` (0 for an exact distribution).
    pub variance: f64,
    pub fallback: bool,
}

/// The Monte-Carlo stream for one occurrence, derived from
/// `(seed, word, sentence id, position)` only.
pub fn occurrence_rng(seed: u64, word: &str, sentence_id: &str, position: usize) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(word.as_bytes());
    h.update([0]);
    h.update(sentence_id.as_bytes());
    h.update([0]);
    h.update((position as u64).to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

fn expectation<E: AttributeEstimator + ?Sized>(
    estimator: &E,
    tokens: &[Token],
    i: usize,
    candidates: crate::perturb::Candidates,
) -> InnerEstimate {
    let mut swapped = tokens.to_vec();
    let values: Vec<(f64, f64)> = candidates
        .entries
        .iter()
        .map(|(w, p)| {
            swapped[i] = w.clone();
            (*p, estimator.predict(&swapped))
        })
        .collect();
    let mean: f64 = values.iter().map(|(p, f)| p * f).sum();
    let variance = match candidates.draws {
        Some(n) if n > 1 => {
            let n = n as f64;
            let s2 = values.iter().map(|(p, f)| p * (f - mean).powi(2)).sum::<f64>() * n / (n - 1.0);
            s2 / n
        }
        _ => 0.0,
    };
    InnerEstimate {
        mean,
        variance,
        fallback: candidates.fallback,
    }
}

/// Exact inner expectation from the full replacement distribution.
pub fn inner_exact<E: AttributeEstimator + ?Sized, R: ReplacementModel + ?Sized>(
    estimator: &E,
    tokens: &[Token],
    i: usize,
    replacer: &R,
) -> Result<InnerEstimate> {
    Ok(expectation(estimator, tokens, i, replacer.enumerate(tokens, i)?))
}

/// Inner expectation from `k` draws.
pub fn inner_sampled<E: AttributeEstimator + ?Sized, R: ReplacementModel + ?Sized>(
    estimator: &E,
    tokens: &[Token],
    i: usize,
    replacer: &R,
    k: usize,
    rng: &mut ChaCha8Rng,
) -> Result<InnerEstimate> {
    Ok(expectation(estimator, tokens, i, replacer.sample(tokens, i, k, rng)?))
}

fn ate_over<E: AttributeEstimator + ?Sized, R: ReplacementModel + ?Sized>(
    estimator: &E,
    dataset: &Dataset,
    replacer: &R,
    word: &Token,
    occurrences: &[(usize, usize)],
    config: &AteConfig,
) -> Result<AteEntry> {
    let rc = &config.replacement;
    let mut total = 0.0;
    let mut variance = 0.0;
    let mut n_fallbacks = 0;
    for &(s, i) in occurrences {
        let ex = &dataset.examples[s];
        let inner = if replacer.support_size(&ex.tokens, i)? <= rc.exact_enumeration_threshold {
            inner_exact(estimator, &ex.tokens, i, replacer)?
        } else {
            let mut rng = occurrence_rng(rc.seed, word.as_str(), &ex.id, i);
            inner_sampled(estimator, &ex.tokens, i, replacer, rc.k, &mut rng)?
        };
        total += estimator.predict(&ex.tokens) - inner.mean;
        variance += inner.variance;
        n_fallbacks += usize::from(inner.fallback);
    }
    let n = occurrences.len() as f64;
    Ok(AteEntry {
        word: word.clone(),
        ate: total / n,
        support: occurrences.len(),
        mc_stderr: variance.sqrt() / n,
        n_fallbacks,
    })
}

fn sentence_count(occurrences: &[(usize, usize)]) -> usize {
    let mut n = 0;
    let mut last = None;
    for &(s, _) in occurrences {
        if last != Some(s) {
            n += 1;
            last = Some(s);
        }
    }
    n
}

/// ATE of one word: the mean, over every occurrence in `dataset`, of f(s)
/// minus the expected f after replacing that occurrence.
pub fn word_ate<E: AttributeEstimator + ?Sized, R: ReplacementModel + ?Sized>(
    estimator: &E,
    dataset: &Dataset,
    replacer: &R,
    word: &str,
    config: &AteConfig,
) -> Result<AteEntry> {
    let occurrences: Vec<(usize, usize)> = dataset
        .examples
        .iter()
        .enumerate()
        .flat_map(|(s, ex)| {
            ex.tokens
                .iter()
                .enumerate()
                .filter(|(_, t)| t.as_str() == word)
                .map(move |(i, _)| (s, i))
        })
        .collect();
    let sentences = sentence_count(&occurrences);
    if sentences < config.min_support.max(1) {
        return Err(AteError::InsufficientSupport {
            word: word.to_string(),
            sentences,
            min_support: config.min_support,
        });
    }
    ate_over(estimator, dataset, replacer, &Token::new(word), &occurrences, config)
}

/// What `build_ate_table` left out.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuildReport {
    /// Retained words below `min_support`, with their sentence counts.
    pub omitted: Vec<(Token, usize)>,
    pub total_fallbacks: usize,
    pub total_contexts: usize,
}

/// One entry per retained vocabulary word with at least `min_support`
/// sentences. Words are processed in parallel; results do not depend on
/// scheduling because every occurrence has its own rng stream.
pub fn build_ate_table<E: AttributeEstimator + ?Sized, R: ReplacementModel + ?Sized>(
    estimator: &E,
    dataset: &Dataset,
    vocabulary: &Vocabulary,
    replacer: &R,
    config: &AteConfig,
) -> Result<(AteTable, BuildReport)> {
    config.replacement.validate()?;
    if let Some(found) = estimator.vocabulary_hash() {
        let expected = vocabulary.hash();
        if found != expected {
            return Err(AteError::VocabularyMismatch {
                expected,
                found: found.to_string(),
            });
        }
    }
    let mut index: BTreeMap<&str, Vec<(usize, usize)>> =
        vocabulary.words.iter().map(|w| (w.as_str(), Vec::new())).collect();
    for (s, ex) in dataset.examples.iter().enumerate() {
        for (i, t) in ex.tokens.iter().enumerate() {
            if let Some(v) = index.get_mut(t.as_str()) {
                v.push((s, i));
            }
        }
    }
    let results: Vec<Result<std::result::Result<AteEntry, (Token, usize)>>> = vocabulary
        .words
        .par_iter()
        .map(|w| {
            let occ = &index[w.as_str()];
            let sentences = sentence_count(occ);
            if sentences < config.min_support.max(1) {
                return Ok(Err((w.clone(), sentences)));
            }
            ate_over(estimator, dataset, replacer, w, occ, config).map(Ok)
        })
        .collect();

    let mut entries = BTreeMap::new();
    let mut report = BuildReport::default();
    for r in results {
        match r? {
            Ok(e) => {
                report.total_fallbacks += e.n_fallbacks;
                report.total_contexts += e.support;
                entries.insert(e.word.clone(), e);
            }
            Err(omitted) => report.omitted.push(omitted),
        }
    }
    if !report.omitted.is_empty() {
        log::info!(
            "{} word(s) below min_support {} omitted from the table",
            report.omitted.len(),
            config.min_support
        );
    }
    let metadata = TableMetadata {
        estimator_name: estimator.name(),
        estimator_fingerprint: estimator.fingerprint(),
        vocabulary_hash: vocabulary.hash(),
        replacer: replacer.name(),
        config: config.clone(),
        dataset: dataset.name.clone(),
        provenance: dataset.provenance.clone(),
        seed: config.replacement.seed,
        built_at: None,
    };
    Ok((
        AteTable {
            metadata,
            default_ate: 0.0,
            entries,
        },
        report,
    ))
}

/// Builds the replacer described by `config.replacement` (with a word model
/// fit on `dataset` for the lower-score filter) and then the table.
pub fn build_ate_table_from_config<E: AttributeEstimator + ?Sized>(
    estimator: &E,
    dataset: &Dataset,
    vocabulary: &Vocabulary,
    config: &AteConfig,
) -> Result<(AteTable, BuildReport)> {
    let word_model = Arc::new(train_word_model(dataset, vocabulary.min_count, 0.0));
    let replacer = build_replacer(&config.replacement, vocabulary, word_model)?;
    build_ate_table(estimator, dataset, vocabulary, &replacer, config)
}
