use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fingerprint_of, sigmoid, AttributeEstimator, FeatureMode, FeatureSpace, ModelError, Result, TrainingSet};
use crate::corpus::{Dataset, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub feature_mode: FeatureMode,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 0,
            feature_mode: FeatureMode::Binary,
        }
    }
}

/// Linear SVM trained with hinge loss and L2 by stochastic subgradient
/// descent. Probabilities are `logistic(margin)` with unit slope, an
/// uncalibrated link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub config: SvmConfig,
    pub features: FeatureSpace,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearSvm {
    pub fn margin(&self, tokens: &[Token]) -> f64 {
        self.features.featurize(tokens).dot(&self.weights) + self.bias
    }
}

pub fn train_linear_svm(dataset: &Dataset, vocabulary: &Vocabulary, config: &SvmConfig) -> Result<LinearSvm> {
    if config.epochs == 0 || !(config.learning_rate > 0.0) || !(config.l2 >= 0.0) {
        return Err(ModelError::InvalidConfig(
            "svm needs epochs > 0, learning_rate > 0 and l2 >= 0".into(),
        ));
    }
    let shrink = 1.0 - config.learning_rate * config.l2;
    if !(shrink > 0.0) {
        return Err(ModelError::InvalidConfig(format!(
            "learning_rate * l2 must be below 1, got {}",
            config.learning_rate * config.l2
        )));
    }
    let features = FeatureSpace::new(vocabulary, config.feature_mode);
    let set = TrainingSet::new(dataset, &features);
    let ys: Vec<f64> = set.ys.iter().map(|&y| if y > 0.5 { 1.0 } else { -1.0 }).collect();

    // w = scale * v keeps the per-step L2 shrink O(1).
    let mut v = vec![0.0; features.len()];
    let mut scale = 1.0;
    let mut bias = 0.0;
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let eta = config.learning_rate;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let x = &set.xs[i];
            let y = ys[i];
            let margin = scale * x.dot(&v) + bias;
            scale *= shrink;
            if y * margin < 1.0 {
                let step = eta * y / scale;
                for &(j, xj) in &x.entries {
                    v[j] += step * xj;
                }
                bias += eta * y;
            }
            if scale < 1e-9 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
        let hinge: f64 = set
            .xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (1.0 - y * (scale * x.dot(&v) + bias)).max(0.0))
            .sum::<f64>()
            / set.len() as f64;
        let norm: f64 = v.iter().map(|w| (scale * w).powi(2)).sum();
        let loss = hinge + 0.5 * config.l2 * norm;
        if !loss.is_finite() {
            return Err(ModelError::Diverged {
                model: "linear svm".into(),
                epoch,
                learning_rate: eta,
            });
        }
        log::debug!("SVM epoch {epoch}: objective {loss:.6}");
    }

    Ok(LinearSvm {
        config: config.clone(),
        weights: v.iter().map(|w| scale * w).collect(),
        bias,
        features,
    })
}

impl AttributeEstimator for LinearSvm {
    fn name(&self) -> String {
        "SVM".to_string()
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        sigmoid(self.margin(tokens))
    }

    fn vocabulary_hash(&self) -> Option<&str> {
        Some(self.features.hash())
    }

    fn fingerprint(&self) -> String {
        fingerprint_of("linear-svm", self)
    }
}
