//! Labeled sentence corpora: tokenization, ingestion adapters, vocabulary
//! statistics, stratified splitting and synthetic corpora with planted
//! causal and spurious words.

mod ingest;
mod split;
mod synth;
mod tokenize;
mod vocab;

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_csv_mapped, ingest_jsonl, ingest_olid_tsv, write_jsonl, ColumnMap};
pub use split::split;
pub use synth::{generate_synthetic, SynthManifest, SynthSpec};
pub use tokenize::{tokenize, Token, TokenizerConfig};
pub use vocab::{build_vocabulary, vocab_hash_of, Vocabulary};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("label out of range at line {line}: {value}")]
    LabelOutOfRange { line: usize, value: String },
    #[error("missing column {0}")]
    MissingColumn(String),
    #[error("unknown label value {value:?} for row {row}")]
    UnknownLabel { row: String, value: String },
    #[error("duplicate example id {0}")]
    DuplicateId(String),
    #[error("dataset {0} contains no examples")]
    Empty(String),
    #[error("class too small to stratify: {0}")]
    ClassTooSmall(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
}

pub type Result<T, E = CorpusError> = std::result::Result<T, E>;

/// One sentence with its binary attribute label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub raw: String,
    pub tokens: Vec<Token>,
    pub label: bool,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, raw: impl Into<String>, label: bool, config: &TokenizerConfig) -> Self {
        let raw = raw.into();
        let tokens = tokenize(&raw, config);
        Self { id: id.into(), raw, tokens, label }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.tokens.iter().any(|t| t.as_str() == word)
    }
}

/// Where a dataset came from and how it was processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub source: String,
    pub adapter: String,
    pub tokenizer: TokenizerConfig,
    pub seed: Option<u64>,
    /// Rows dropped during ingestion because their text was blank.
    #[serde(default)]
    pub skipped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub examples: Vec<LabeledExample>,
    pub provenance: Provenance,
}

impl Dataset {
    /// Builds a dataset, rejecting empty example lists and duplicate ids.
    pub fn new(name: impl Into<String>, examples: Vec<LabeledExample>, provenance: Provenance) -> Result<Self> {
        let name = name.into();
        if examples.is_empty() {
            return Err(CorpusError::Empty(name));
        }
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if !seen.insert(ex.id.as_str()) {
                return Err(CorpusError::DuplicateId(ex.id.clone()));
            }
        }
        Ok(Self { name, examples, provenance })
    }

    /// Convenience constructor for in-memory corpora; ids are the example indices.
    pub fn from_texts<S: AsRef<str>>(name: &str, rows: &[(S, bool)], config: &TokenizerConfig) -> Result<Self> {
        let examples = rows
            .iter()
            .enumerate()
            .map(|(i, (text, label))| LabeledExample::new(i.to_string(), text.as_ref(), *label, config))
            .collect();
        let provenance = Provenance {
            source: "memory".to_string(),
            adapter: "inline".to_string(),
            tokenizer: config.clone(),
            seed: None,
            skipped_rows: 0,
        };
        Self::new(name, examples, provenance)
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.examples.iter().filter(|e| e.label).count()
    }
}
