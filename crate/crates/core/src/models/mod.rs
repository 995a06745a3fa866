//! Attribute estimators: anything that maps a token list to an estimate of
//! P(attribute | sentence) in [0, 1].
//!
//! Two families live here. The correlation models score words by the share
//! of attribute-labeled sentences containing them and sentences by their
//! highest-scoring word. The probe classifiers (naive Bayes, logistic
//! regression, linear SVM, feed-forward networks) are trained from scratch on
//! bag-of-words features.

mod features;
mod logistic;
mod mlp;
mod naive_bayes;
mod persist;
mod svm;
mod word;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::Token;

pub use features::{featurize, BowVector, FeatureMode, FeatureSpace};
pub use logistic::{train_logistic_regression, LogisticRegression, LrConfig};
pub use mlp::{train_mlp, Mlp, MlpConfig};
pub use naive_bayes::{train_naive_bayes, NaiveBayes, NbConfig};
pub use persist::{load_model, load_model_for_scoring, save_model, MODEL_MAGIC};
pub use svm::{train_linear_svm, LinearSvm, SvmConfig};
pub use word::{train_word_model, MaxWordSentenceModel, WordAttributeModel};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("{model} training diverged at epoch {epoch} (non-finite loss); try a smaller learning rate than {learning_rate}")]
    Diverged {
        model: String,
        epoch: usize,
        learning_rate: f64,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("unrecognized model header")]
    UnrecognizedHeader,
    #[error("corrupted model file: {0}")]
    Corrupt(String),
    #[error("vocabulary hash mismatch: model has {found}, expected {expected}")]
    VocabularyMismatch { expected: String, found: String },
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Any model producing P(attribute = 1 | tokens).
///
/// `predict` must return a value in [0, 1] for every input, including the
/// empty list and lists made only of unknown words. Implementations are
/// immutable after training, so concurrent callers are fine.
pub trait AttributeEstimator: Send + Sync {
    fn name(&self) -> String;

    fn predict(&self, tokens: &[Token]) -> f64;

    /// Hash of the vocabulary the estimator was trained against, if any.
    fn vocabulary_hash(&self) -> Option<&str> {
        None
    }

    /// Identifies the trained state; recorded in ATE table metadata.
    fn fingerprint(&self) -> String;
}

impl<T: AttributeEstimator + ?Sized> AttributeEstimator for &T {
    fn name(&self) -> String {
        (**self).name()
    }
    fn predict(&self, tokens: &[Token]) -> f64 {
        (**self).predict(tokens)
    }
    fn vocabulary_hash(&self) -> Option<&str> {
        (**self).vocabulary_hash()
    }
    fn fingerprint(&self) -> String {
        (**self).fingerprint()
    }
}

pub(crate) fn fingerprint_of<T: Serialize>(kind: &str, value: &T) -> String {
    let mut hasher = Sha256::new();
    hasher.update(kind.as_bytes());
    hasher.update(serde_json::to_vec(value).expect("model state serializes"));
    hex::encode(hasher.finalize())
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean loss over a set of examples and its gradient with respect to a
/// model's flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    pub loss: f64,
    pub gradient: Vec<f64>,
}

/// The closed set of estimator kinds that can be persisted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrainedModel {
    MaxWord(MaxWordSentenceModel),
    NaiveBayes(NaiveBayes),
    LogisticRegression(LogisticRegression),
    LinearSvm(LinearSvm),
    Mlp(Mlp),
}

impl TrainedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            TrainedModel::MaxWord(_) => "max-word",
            TrainedModel::NaiveBayes(_) => "naive-bayes",
            TrainedModel::LogisticRegression(_) => "logistic-regression",
            TrainedModel::LinearSvm(_) => "linear-svm",
            TrainedModel::Mlp(_) => "mlp",
        }
    }

    fn inner(&self) -> &dyn AttributeEstimator {
        match self {
            TrainedModel::MaxWord(m) => m,
            TrainedModel::NaiveBayes(m) => m,
            TrainedModel::LogisticRegression(m) => m,
            TrainedModel::LinearSvm(m) => m,
            TrainedModel::Mlp(m) => m,
        }
    }
}

impl AttributeEstimator for TrainedModel {
    fn name(&self) -> String {
        self.inner().name()
    }
    fn predict(&self, tokens: &[Token]) -> f64 {
        self.inner().predict(tokens)
    }
    fn vocabulary_hash(&self) -> Option<&str> {
        self.inner().vocabulary_hash()
    }
    fn fingerprint(&self) -> String {
        self.inner().fingerprint()
    }
}

/// Shared mini-batch bookkeeping for the gradient-trained classifiers.
pub(crate) struct TrainingSet {
    pub xs: Vec<BowVector>,
    pub ys: Vec<f64>,
}

impl TrainingSet {
    pub fn new(dataset: &crate::corpus::Dataset, space: &FeatureSpace) -> Self {
        let xs = dataset.examples.iter().map(|e| space.featurize(&e.tokens)).collect();
        let ys = dataset.examples.iter().map(|e| if e.label { 1.0 } else { 0.0 }).collect();
        Self { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-1000.0) >= 0.0);
        assert!(sigmoid(1000.0) <= 1.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
        assert!((softplus(3.0) - (1.0 + 3f64.exp()).ln()).abs() < 1e-12);
        assert!(softplus(-800.0) >= 0.0);
        assert!(softplus(800.0).is_finite());
    }
}
