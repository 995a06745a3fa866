//! Group-level comparison of classifier predictions with ATE scores, plot
//! data and the spurious-word bound check.

mod emit;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ate::AteTable;
use crate::corpus::{tokenize, Dataset, Token, TokenizerConfig};
use crate::models::AttributeEstimator;

pub use emit::{emit_plot_data, emit_tables, read_report_csv, OutputFormat, PlotRecord};

/// Upper bound on the ATE of a spurious correlate: max of p(1 - p).
pub const SPURIOUS_BOUND: f64 = 0.25;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("group spec: {0}")]
    GroupSpec(String),
    #[error("unknown output format {0:?} (expected csv, jsonl or markdown)")]
    UnknownFormat(String),
    #[error("diff mismatch for {model}/{group}: {diff} != {pred} - {ate}")]
    DiffMismatch {
        model: String,
        group: String,
        pred: f64,
        ate: f64,
        diff: f64,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = ReportError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub name: String,
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub groups: Vec<Group>,
}

pub const DEFAULT_GROUPS: [&str; 5] = ["african", "black", "female", "gay", "hispanic"];

impl Default for GroupSpec {
    fn default() -> Self {
        Self {
            groups: DEFAULT_GROUPS
                .iter()
                .map(|t| Group {
                    name: t.to_string(),
                    terms: vec![t.to_string()],
                })
                .collect(),
        }
    }
}

impl GroupSpec {
    /// Reads one JSON object `{"name": ..., "terms": [...]}` per line.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut groups = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let g: Group = serde_json::from_str(line)
                .map_err(|e| ReportError::GroupSpec(format!("line {}: {e}", n + 1)))?;
            groups.push(g);
        }
        if groups.is_empty() {
            return Err(ReportError::GroupSpec(format!("{} lists no groups", path.display())));
        }
        Ok(Self { groups })
    }

    /// Runs every term through the tokenizer; each must yield exactly one token.
    pub fn normalized(&self, config: &TokenizerConfig) -> Result<Self> {
        let mut groups = Vec::with_capacity(self.groups.len());
        for g in &self.groups {
            if g.terms.is_empty() {
                return Err(ReportError::GroupSpec(format!("group {} has no terms", g.name)));
            }
            let mut terms = Vec::with_capacity(g.terms.len());
            for t in &g.terms {
                match tokenize(t, config).as_slice() {
                    [one] => terms.push(one.as_str().to_string()),
                    other => {
                        return Err(ReportError::GroupSpec(format!(
                            "term {t:?} of group {} tokenizes to {} tokens",
                            g.name,
                            other.len()
                        )))
                    }
                }
            }
            groups.push(Group {
                name: g.name.clone(),
                terms,
            });
        }
        Ok(Self { groups })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredMode {
    /// The estimator applied to the one-word sentence `[term]`.
    #[default]
    TermOnly,
    /// Mean prediction over evaluation sentences containing the term.
    CorpusMean,
}

impl std::fmt::Display for PredMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PredMode::TermOnly => "term-only",
            PredMode::CorpusMean => "corpus-mean",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub group: String,
    pub pred_mode: PredMode,
    /// The prediction under `pred_mode`; empty when that mode has no support.
    pub pred: Option<f64>,
    pub ate: f64,
    /// `pred - ate`; positive means the ATE score is lower than the classifier.
    pub diff: Option<f64>,
    pub pred_term_only: f64,
    pub pred_corpus_mean: Option<f64>,
    /// Evaluation sentences containing a group term.
    pub eval_support: usize,
    /// Contexts behind the table entry (0 when the term has no entry).
    pub ate_support: usize,
    pub ate_stderr: f64,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// One row per group. Groups with several terms average each quantity over
/// their terms (corpus-mean over the terms that occur).
pub fn group_report<E: AttributeEstimator + ?Sized>(
    estimator: &E,
    table: &AteTable,
    dataset: &Dataset,
    groups: &GroupSpec,
    pred_mode: PredMode,
) -> Vec<ReportRow> {
    let model = estimator.name();
    groups
        .groups
        .iter()
        .map(|g| {
            let mut term_only = Vec::new();
            let mut corpus = Vec::new();
            let mut ates = Vec::new();
            let mut supports = 0;
            let mut variance = 0.0;
            for t in &g.terms {
                term_only.push(estimator.predict(&[Token::new(t)]));
                let preds: Vec<f64> = dataset
                    .examples
                    .iter()
                    .filter(|e| e.contains(t))
                    .map(|e| estimator.predict(&e.tokens))
                    .collect();
                if let Some(m) = mean(&preds) {
                    corpus.push(m);
                }
                ates.push(table.ate(t));
                if let Some(e) = table.get(t) {
                    supports += e.support;
                    variance += e.mc_stderr.powi(2);
                }
            }
            let n_terms = g.terms.len() as f64;
            let eval_support = dataset
                .examples
                .iter()
                .filter(|e| g.terms.iter().any(|t| e.contains(t)))
                .count();
            let pred_term_only = mean(&term_only).expect("groups have terms");
            let pred_corpus_mean = mean(&corpus);
            let ate = mean(&ates).expect("groups have terms");
            let pred = match pred_mode {
                PredMode::TermOnly => Some(pred_term_only),
                PredMode::CorpusMean => pred_corpus_mean,
            };
            if pred.is_none() {
                log::warn!("group {} has no support in the evaluation corpus", g.name);
            }
            ReportRow {
                model: model.clone(),
                group: g.name.clone(),
                pred_mode,
                pred,
                ate,
                diff: pred.map(|p| p - ate),
                pred_term_only,
                pred_corpus_mean,
                eval_support,
                ate_support: supports,
                ate_stderr: variance.sqrt() / n_terms,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "kebab-case")]
pub enum EpsilonPolicy {
    /// No slack.
    Exact,
    /// Slack of this many Monte-Carlo standard errors per entry.
    StdErrs(f64),
}

impl Default for EpsilonPolicy {
    fn default() -> Self {
        EpsilonPolicy::StdErrs(3.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremDetail {
    pub word: String,
    /// `None` when the word has no table entry.
    pub ate: Option<f64>,
    pub epsilon: f64,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub n_spurious_checked: usize,
    /// Planted words without a table entry; not violations.
    pub n_missing: usize,
    pub n_violations: usize,
    pub max_spurious_ate: Option<f64>,
    pub bound: f64,
    pub epsilon_policy: EpsilonPolicy,
    pub details: Vec<TheoremDetail>,
}

/// Checks `ATE(w) <= 0.25 + epsilon` for each planted spurious word.
pub fn theorem_check(table: &AteTable, spurious: &[String], policy: EpsilonPolicy) -> TheoremReport {
    let details: Vec<TheoremDetail> = spurious
        .iter()
        .map(|w| match table.get(w) {
            Some(e) => {
                let epsilon = match policy {
                    EpsilonPolicy::Exact => 0.0,
                    EpsilonPolicy::StdErrs(n) => n * e.mc_stderr,
                };
                TheoremDetail {
                    word: w.clone(),
                    ate: Some(e.ate),
                    epsilon,
                    violation: e.ate > SPURIOUS_BOUND + epsilon,
                }
            }
            None => TheoremDetail {
                word: w.clone(),
                ate: None,
                epsilon: 0.0,
                violation: false,
            },
        })
        .collect();
    TheoremReport {
        n_spurious_checked: details.iter().filter(|d| d.ate.is_some()).count(),
        n_missing: details.iter().filter(|d| d.ate.is_none()).count(),
        n_violations: details.iter().filter(|d| d.violation).count(),
        max_spurious_ate: details.iter().filter_map(|d| d.ate).reduce(f64::max),
        bound: SPURIOUS_BOUND,
        epsilon_policy: policy,
        details,
    }
}
