//! Single-file model format.
//!
//! A model file is UTF-8 text with exactly three lines:
//!
//! ```text
//! CAUSAL-ATE-MODEL 1
//! {"kind":"naive-bayes","name":"NB","vocabulary_hash":"…","config":{…}}
//! {"kind":"naive-bayes", …full parameters…}
//! ```
//!
//! Line 1 is the magic string and format version. Line 2 is a JSON header
//! naming the model kind, display name, vocabulary hash and training
//! configuration. Line 3 is the JSON body of [`TrainedModel`]; floats are
//! written in shortest round-trip form so reloaded predictions are
//! bit-identical.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AttributeEstimator, ModelError, Result, TrainedModel};

pub const MODEL_MAGIC: &str = "CAUSAL-ATE-MODEL 1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: String,
    name: String,
    vocabulary_hash: Option<String>,
    config: serde_json::Value,
}

fn header_of(model: &TrainedModel) -> Header {
    let config = match model {
        TrainedModel::MaxWord(m) => serde_json::json!({ "default": m.word_model.default_score() }),
        TrainedModel::NaiveBayes(m) => serde_json::to_value(&m.config).expect("config serializes"),
        TrainedModel::LogisticRegression(m) => serde_json::to_value(&m.config).expect("config serializes"),
        TrainedModel::LinearSvm(m) => serde_json::to_value(&m.config).expect("config serializes"),
        TrainedModel::Mlp(m) => serde_json::to_value(&m.config).expect("config serializes"),
    };
    Header {
        kind: model.kind().to_string(),
        name: model.name(),
        vocabulary_hash: model.vocabulary_hash().map(str::to_string),
        config,
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<()> {
    let io = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let header = serde_json::to_string(&header_of(model)).expect("header serializes");
    let body = serde_json::to_string(model).expect("model serializes");
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    fs::write(path, format!("{MODEL_MAGIC}\n{header}\n{body}\n")).map_err(io)
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|_| ModelError::UnrecognizedHeader)?;
    let mut lines = text.lines();
    if lines.next() != Some(MODEL_MAGIC) {
        return Err(ModelError::UnrecognizedHeader);
    }
    let header: Header = lines
        .next()
        .and_then(|l| serde_json::from_str(l).ok())
        .ok_or(ModelError::UnrecognizedHeader)?;
    let body = lines.next().ok_or_else(|| ModelError::Corrupt("missing body".into()))?;
    if lines.any(|l| !l.trim().is_empty()) {
        return Err(ModelError::Corrupt("trailing content after body".into()));
    }
    let model: TrainedModel =
        serde_json::from_str(body).map_err(|e| ModelError::Corrupt(format!("body does not parse: {e}")))?;

    if header.kind != model.kind() {
        return Err(ModelError::Corrupt(format!(
            "header kind {} but body kind {}",
            header.kind,
            model.kind()
        )));
    }
    if header.vocabulary_hash.as_deref() != model.vocabulary_hash() {
        return Err(ModelError::Corrupt("header and body vocabulary hashes differ".into()));
    }
    let consistent = match &model {
        TrainedModel::MaxWord(m) => m.word_model.hash_is_consistent(),
        TrainedModel::NaiveBayes(m) => m.features.hash_is_consistent(),
        TrainedModel::LogisticRegression(m) => m.features.hash_is_consistent(),
        TrainedModel::LinearSvm(m) => m.features.hash_is_consistent(),
        TrainedModel::Mlp(m) => m.features.hash_is_consistent(),
    };
    if !consistent {
        return Err(ModelError::Corrupt("vocabulary does not match its recorded hash".into()));
    }
    Ok(model)
}

/// Loads a model and checks it was trained on the vocabulary with hash
/// `expected_vocabulary_hash`.
pub fn load_model_for_scoring(path: &Path, expected_vocabulary_hash: &str) -> Result<TrainedModel> {
    let model = load_model(path)?;
    let found = model.vocabulary_hash().unwrap_or_default();
    if found != expected_vocabulary_hash {
        return Err(ModelError::VocabularyMismatch {
            expected: expected_vocabulary_hash.to_string(),
            found: found.to_string(),
        });
    }
    Ok(model)
}
