use std::collections::BTreeMap;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;

use super::{check_index, Candidates, PerturbError, ReplacementModel, Result};
use crate::corpus::Token;
use crate::models::WordAttributeModel;

/// Keeps candidates whose score is strictly below the context score, the
/// highest â among the other tokens of the sentence (the word model's
/// default for a one-word sentence). If nothing survives, returns the
/// lowest-scoring candidate alone with `fallback` set.
pub fn filter_assumption1(
    word_model: &WordAttributeModel,
    tokens: &[Token],
    i: usize,
    candidates: Candidates,
) -> Result<Candidates> {
    check_index(tokens, i)?;
    if candidates.is_empty() {
        return Err(PerturbError::NoCandidates);
    }
    let bound = word_model.context_score(tokens, i);
    let kept: Vec<(Token, f64)> = candidates
        .entries
        .iter()
        .filter(|(w, _)| word_model.score(w.as_str()) < bound)
        .cloned()
        .collect();
    if !kept.is_empty() {
        let mut out = Candidates::normalized(kept, candidates.draws)?;
        out.fallback = candidates.fallback;
        return Ok(out);
    }
    let (word, _) = candidates
        .entries
        .iter()
        .min_by(|a, b| {
            let (sa, sb) = (word_model.score(a.0.as_str()), word_model.score(b.0.as_str()));
            sa.total_cmp(&sb).then_with(|| a.0.cmp(&b.0))
        })
        .expect("non-empty");
    log::debug!("assumption-1 filter emptied the set at position {i}; falling back to {word}");
    Ok(Candidates {
        entries: vec![(word.clone(), 1.0)],
        draws: None,
        fallback: true,
    })
}

/// Restricts any replacement model to candidates scoring below the context.
pub struct Assumption1Filter<R> {
    inner: R,
    word_model: Arc<WordAttributeModel>,
    max_resamples: usize,
}

impl<R: ReplacementModel> Assumption1Filter<R> {
    pub fn new(inner: R, word_model: Arc<WordAttributeModel>, max_resamples: usize) -> Self {
        Self {
            inner,
            word_model,
            max_resamples,
        }
    }
}

impl<R: ReplacementModel> ReplacementModel for Assumption1Filter<R> {
    fn name(&self) -> String {
        format!("{}+assumption1", self.inner.name())
    }

    fn support_size(&self, tokens: &[Token], i: usize) -> Result<usize> {
        self.inner.support_size(tokens, i)
    }

    fn enumerate(&self, tokens: &[Token], i: usize) -> Result<Candidates> {
        filter_assumption1(&self.word_model, tokens, i, self.inner.enumerate(tokens, i)?)
    }

    /// Rejection sampling: rounds of `k` draws from the inner model, keeping
    /// admissible ones, until `k` are accepted or `max_resamples` extra
    /// rounds pass. With no acceptances at all the exact filtered
    /// distribution (or its fallback) is returned instead.
    fn sample(&self, tokens: &[Token], i: usize, k: usize, rng: &mut ChaCha8Rng) -> Result<Candidates> {
        check_index(tokens, i)?;
        let bound = self.word_model.context_score(tokens, i);
        let mut accepted: BTreeMap<Token, f64> = BTreeMap::new();
        let mut n_accepted = 0usize;
        for _ in 0..=self.max_resamples {
            let round = self.inner.sample(tokens, i, k, rng)?;
            let Some(draws) = round.draws else {
                // the inner model returned an exact distribution
                return filter_assumption1(&self.word_model, tokens, i, round);
            };
            for (w, p) in round.entries {
                if self.word_model.score(w.as_str()) < bound {
                    let count = ((p * draws as f64).round() as usize).min(k - n_accepted);
                    if count > 0 {
                        n_accepted += count;
                        *accepted.entry(w).or_default() += count as f64;
                    }
                }
            }
            if n_accepted >= k {
                break;
            }
        }
        if n_accepted == 0 {
            return self.enumerate(tokens, i);
        }
        Candidates::normalized(accepted.into_iter().collect(), Some(n_accepted))
    }
}
