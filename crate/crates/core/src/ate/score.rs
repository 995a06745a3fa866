use serde::{Deserialize, Serialize};

use super::{AteError, AteTable, Result};
use crate::corpus::Token;
use crate::models::AttributeEstimator;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub value: f64,
    /// Aggregation order; `f64::INFINITY` for the maximum.
    pub p: f64,
    /// Earliest token attaining the maximum clamped score.
    pub argmax_word: Option<Token>,
    /// Table ATE looked up for each token (default for absent words),
    /// before clamping.
    pub per_word: Vec<(Token, f64)>,
}

/// Aggregates per-word ATEs, clamped below at 0, by their Lp norm; `p =
/// f64::INFINITY` gives the maximum.
pub fn sentence_score(table: &AteTable, tokens: &[Token], p: f64) -> Result<SentenceScore> {
    if p.is_nan() || p <= 0.0 {
        return Err(AteError::InvalidOrder(p));
    }
    let per_word: Vec<(Token, f64)> = tokens.iter().map(|t| (t.clone(), table.ate(t.as_str()))).collect();
    let mut best: Option<(usize, f64)> = None;
    for (i, (_, a)) in per_word.iter().enumerate() {
        let s = a.max(0.0);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let max = best.map_or(0.0, |(_, s)| s);
    let value = if p.is_infinite() || max == 0.0 {
        max
    } else {
        // scaled by the maximum to keep large p finite
        let sum: f64 = per_word.iter().map(|(_, a)| (a.max(0.0) / max).powf(p)).sum();
        max * sum.powf(1.0 / p)
    };
    Ok(SentenceScore {
        value,
        p,
        argmax_word: best.map(|(i, _)| tokens[i].clone()),
        per_word,
    })
}

/// Uses a table as a sentence classifier: the clamped maximum ATE.
#[derive(Debug, Clone)]
pub struct TableScorer {
    table: AteTable,
}

impl TableScorer {
    pub fn new(table: AteTable) -> Self {
        Self { table }
    }
}

impl AttributeEstimator for TableScorer {
    fn name(&self) -> String {
        format!("ATE[{}]", self.table.metadata.estimator_name)
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        recursive_score_check(&self.table, tokens).min(1.0)
    }

    fn fingerprint(&self) -> String {
        format!("table:{}", self.table.metadata.estimator_fingerprint)
    }
}

/// Left-to-right recursion `A_t = max(A_{t-1}, ATE(w_t))` from `A_0 = 0`
/// with clamped scores.
pub fn recursive_score_check(table: &AteTable, tokens: &[Token]) -> f64 {
    tokens
        .iter()
        .fold(0.0, |acc: f64, t| acc.max(table.ate(t.as_str()).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ate::{AteConfig, AteEntry, TableMetadata};
    use crate::corpus::{Provenance, TokenizerConfig};

    fn toks(s: &[&str]) -> Vec<Token> {
        s.iter().map(|w| Token::new(w)).collect()
    }

    fn table(rows: &[(&str, f64)]) -> AteTable {
        AteTable {
            metadata: TableMetadata {
                estimator_name: "t".into(),
                estimator_fingerprint: "t".into(),
                vocabulary_hash: "t".into(),
                replacer: "t".into(),
                config: AteConfig::default(),
                dataset: "t".into(),
                provenance: Provenance {
                    source: "t".into(),
                    adapter: "t".into(),
                    tokenizer: TokenizerConfig::default(),
                    seed: None,
                    skipped_rows: 0,
                },
                seed: 0,
                built_at: None,
            },
            default_ate: 0.0,
            entries: rows
                .iter()
                .map(|(w, a)| {
                    let e = AteEntry {
                        word: Token::new(w),
                        ate: *a,
                        support: 1,
                        mc_stderr: 0.0,
                        n_fallbacks: 0,
                    };
                    (e.word.clone(), e)
                })
                .collect(),
        }
    }

    #[test]
    fn max_and_sum_on_toy_table() {
        let t = table(&[("bad", 0.5), ("dog", 0.0)]);
        let s = sentence_score(&t, &toks(&["bad", "dog"]), f64::INFINITY).unwrap();
        assert_eq!(s.value, 0.5);
        assert_eq!(s.argmax_word, Some(Token::new("bad")));
        assert_eq!(sentence_score(&t, &toks(&["bad", "dog"]), 1.0).unwrap().value, 0.5);
        for p in [0.5, 1.0, 2.0, f64::INFINITY] {
            assert_eq!(sentence_score(&t, &toks(&["dog", "dog"]), p).unwrap().value, 0.0);
        }
        assert_eq!(recursive_score_check(&t, &toks(&["bad", "dog"])), 0.5);
        assert_eq!(recursive_score_check(&t, &[]), 0.0);
    }

    #[test]
    fn negative_scores_are_clamped() {
        let t = table(&[("good", -0.25), ("bad", 0.5)]);
        let s = sentence_score(&t, &toks(&["good"]), f64::INFINITY).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.per_word, vec![(Token::new("good"), -0.25)]);
        let s = sentence_score(&t, &toks(&["good", "bad"]), 2.0).unwrap();
        assert_eq!(s.value, 0.5);
    }

    #[test]
    fn empty_sentence_and_bad_order() {
        let t = table(&[("bad", 0.5)]);
        let s = sentence_score(&t, &[], f64::INFINITY).unwrap();
        assert_eq!((s.value, s.argmax_word), (0.0, None));
        for p in [0.0, -1.0, f64::NAN] {
            assert!(matches!(sentence_score(&t, &toks(&["bad"]), p), Err(AteError::InvalidOrder(_))));
        }
    }

    #[test]
    fn ties_go_to_earliest_position() {
        let t = table(&[("a", 0.4), ("b", 0.4)]);
        let s = sentence_score(&t, &toks(&["b", "a"]), f64::INFINITY).unwrap();
        assert_eq!(s.argmax_word, Some(Token::new("b")));
    }
}
