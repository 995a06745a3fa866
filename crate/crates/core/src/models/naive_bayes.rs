use serde::{Deserialize, Serialize};

use super::{fingerprint_of, sigmoid, AttributeEstimator, FeatureMode, FeatureSpace, ModelError, Result};
use crate::corpus::{Dataset, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbConfig {
    /// Additive (Lidstone) smoothing.
    pub alpha: f64,
    pub feature_mode: FeatureMode,
}

impl Default for NbConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            feature_mode: FeatureMode::Binary,
        }
    }
}

/// Multinomial naive Bayes over bag-of-words features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    pub config: NbConfig,
    pub features: FeatureSpace,
    /// log P(label = c), indexed by class.
    pub log_prior: [f64; 2],
    /// log P(word j | label = c): `log_likelihood[c][j]`.
    pub log_likelihood: [Vec<f64>; 2],
}

pub fn train_naive_bayes(dataset: &Dataset, vocabulary: &Vocabulary, config: &NbConfig) -> Result<NaiveBayes> {
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(ModelError::InvalidConfig(format!("alpha must be positive, got {}", config.alpha)));
    }
    let features = FeatureSpace::new(vocabulary, config.feature_mode);
    let v = features.len();
    let mut doc_counts = [0usize; 2];
    let mut token_counts = [vec![0.0f64; v], vec![0.0f64; v]];
    for ex in &dataset.examples {
        let c = usize::from(ex.label);
        doc_counts[c] += 1;
        for (j, x) in features.featurize(&ex.tokens).entries {
            token_counts[c][j] += x;
        }
    }
    let n = dataset.len() as f64;
    let log_prior = [
        (doc_counts[0] as f64 / n).ln(),
        (doc_counts[1] as f64 / n).ln(),
    ];
    let log_likelihood = token_counts.map(|counts| {
        let total: f64 = counts.iter().sum::<f64>() + config.alpha * v as f64;
        counts.iter().map(|&t| ((t + config.alpha) / total).ln()).collect()
    });
    Ok(NaiveBayes {
        config: config.clone(),
        features,
        log_prior,
        log_likelihood,
    })
}

impl NaiveBayes {
    /// log P(x, label=1) - log P(x, label=0).
    pub fn log_odds(&self, tokens: &[Token]) -> f64 {
        let x = self.features.featurize(tokens);
        let score = |c: usize| self.log_prior[c] + x.dot(&self.log_likelihood[c]);
        score(1) - score(0)
    }
}

impl AttributeEstimator for NaiveBayes {
    fn name(&self) -> String {
        "NB".to_string()
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        let z = self.log_odds(tokens);
        if z.is_nan() {
            // both classes impossible cannot happen for a non-empty training set
            return 0.5;
        }
        sigmoid(z)
    }

    fn vocabulary_hash(&self) -> Option<&str> {
        Some(self.features.hash())
    }

    fn fingerprint(&self) -> String {
        fingerprint_of("naive-bayes", self)
    }
}
