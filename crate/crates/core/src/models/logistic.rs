use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    fingerprint_of, sigmoid, softplus, AttributeEstimator, BowVector, FeatureMode, FeatureSpace, ModelError, Objective,
    Result, TrainingSet,
};
use crate::corpus::{Dataset, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub feature_mode: FeatureMode,
}

impl Default for LrConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            learning_rate: 0.1,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
            feature_mode: FeatureMode::Binary,
        }
    }
}

impl LrConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive and l2 non-negative".into()));
        }
        Ok(())
    }
}

/// Binary logistic regression, `predict = logistic(w . x + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticRegression {
    pub config: LrConfig,
    pub features: FeatureSpace,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticRegression {
    fn logit(&self, x: &BowVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    /// Parameters flattened as `[weights..., bias]`.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = self.weights.clone();
        p.push(self.bias);
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.weights.len() + 1, "parameter length");
        let (w, b) = params.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.bias = b[0];
    }

    /// Mean binary cross-entropy plus `l2 / 2 * |w|^2` (bias unpenalized).
    pub fn objective(&self, dataset: &Dataset) -> Objective {
        let set = TrainingSet::new(dataset, &self.features);
        let idx: Vec<usize> = (0..set.len()).collect();
        let mut grad = vec![0.0; self.weights.len() + 1];
        let loss = self.batch_objective(&set, &idx, &mut grad);
        Objective { loss, gradient: grad }
    }

    /// Writes the batch gradient into `grad` (`[weights..., bias]`) and
    /// returns the batch loss.
    fn batch_objective(&self, set: &TrainingSet, batch: &[usize], grad: &mut [f64]) -> f64 {
        let m = batch.len() as f64;
        let v = self.weights.len();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        for &i in batch {
            let x = &set.xs[i];
            let y = set.ys[i];
            let z = self.logit(x);
            loss += softplus(z) - y * z;
            let r = (sigmoid(z) - y) / m;
            for &(j, xj) in &x.entries {
                grad[j] += r * xj;
            }
            grad[v] += r;
        }
        let l2 = self.config.l2;
        let mut penalty = 0.0;
        for (g, w) in grad[..v].iter_mut().zip(&self.weights) {
            *g += l2 * w;
            penalty += w * w;
        }
        loss / m + 0.5 * l2 * penalty
    }
}

/// Mini-batch gradient descent on the regularized cross-entropy. Weights
/// start at zero; batch order comes from a ChaCha8 stream seeded by
/// `config.seed`, so training is deterministic.
pub fn train_logistic_regression(
    dataset: &Dataset,
    vocabulary: &Vocabulary,
    config: &LrConfig,
) -> Result<LogisticRegression> {
    config.validate()?;
    let features = FeatureSpace::new(vocabulary, config.feature_mode);
    let mut model = LogisticRegression {
        config: config.clone(),
        weights: vec![0.0; features.len()],
        bias: 0.0,
        features,
    };
    let set = TrainingSet::new(dataset, &model.features);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut grad = vec![0.0; model.weights.len() + 1];
    let v = model.weights.len();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            let loss = model.batch_objective(&set, batch, &mut grad);
            epoch_loss += loss * batch.len() as f64;
            for (w, g) in model.weights.iter_mut().zip(&grad[..v]) {
                *w -= config.learning_rate * g;
            }
            model.bias -= config.learning_rate * grad[v];
        }
        if !epoch_loss.is_finite() || model.bias.is_nan() {
            return Err(ModelError::Diverged {
                model: "logistic regression".into(),
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        log::debug!("LR epoch {epoch}: mean loss {:.6}", epoch_loss / set.len() as f64);
    }
    Ok(model)
}

impl AttributeEstimator for LogisticRegression {
    fn name(&self) -> String {
        "LR".to_string()
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        sigmoid(self.logit(&self.features.featurize(tokens)))
    }

    fn vocabulary_hash(&self) -> Option<&str> {
        Some(self.features.hash())
    }

    fn fingerprint(&self) -> String {
        fingerprint_of("logistic-regression", self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, TokenizerConfig};

    fn separable() -> Dataset {
        let mut rows = Vec::new();
        for i in 0..20 {
            rows.push((if i % 2 == 0 { "hate" } else { "hate it" }, true));
            rows.push((if i % 2 == 0 { "love" } else { "love it" }, false));
        }
        Dataset::from_texts("sep", &rows, &TokenizerConfig::default()).unwrap()
    }

    #[test]
    fn separable_corpus_fits_within_fifty_epochs() {
        let d = separable();
        let v = build_vocabulary(&d, 1);
        let cfg = LrConfig {
            epochs: 50,
            learning_rate: 0.5,
            batch_size: 8,
            ..LrConfig::default()
        };
        let m = train_logistic_regression(&d, &v, &cfg).unwrap();
        let correct = d
            .examples
            .iter()
            .filter(|e| (m.predict(&e.tokens) > 0.5) == e.label)
            .count();
        assert_eq!(correct, d.len());
    }

    #[test]
    fn strong_regularization_recovers_prior_logit() {
        let rows: Vec<(&str, bool)> = (0..40).map(|i| (if i < 10 { "a b" } else { "c d" }, i < 10)).collect();
        let d = Dataset::from_texts("r", &rows, &TokenizerConfig::default()).unwrap();
        let v = build_vocabulary(&d, 1);
        let cfg = LrConfig {
            epochs: 400,
            learning_rate: 0.05,
            l2: 15.0,
            batch_size: 40,
            ..LrConfig::default()
        };
        let m = train_logistic_regression(&d, &v, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 0.02), "{:?}", m.weights);
        assert!((m.predict(&[]) - 0.25).abs() < 0.02);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = separable();
        let v = build_vocabulary(&d, 1);
        let mut m = train_logistic_regression(&d, &v, &LrConfig { epochs: 1, ..LrConfig::default() }).unwrap();
        let params: Vec<f64> = (0..m.parameters().len()).map(|i| 0.3 * (i as f64 + 1.0).sin()).collect();
        m.set_parameters(&params);
        let analytic = m.objective(&d).gradient;
        let h = 1e-6;
        for k in 0..params.len() {
            let mut p = params.clone();
            p[k] += h;
            m.set_parameters(&p);
            let up = m.objective(&d).loss;
            p[k] -= 2.0 * h;
            m.set_parameters(&p);
            let down = m.objective(&d).loss;
            let numeric = (up - down) / (2.0 * h);
            let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-8);
            assert!(rel <= 1e-4, "param {k}: {numeric} vs {}", analytic[k]);
        }
    }

    #[test]
    fn divergence_is_reported() {
        let d = separable();
        let v = build_vocabulary(&d, 1);
        let cfg = LrConfig {
            learning_rate: 1e308,
            l2: 1.0,
            ..LrConfig::default()
        };
        assert!(matches!(train_logistic_regression(&d, &v, &cfg), Err(ModelError::Diverged { .. })));
    }

    #[test]
    fn deterministic_given_seed() {
        let d = separable();
        let v = build_vocabulary(&d, 1);
        let a = train_logistic_regression(&d, &v, &LrConfig::default()).unwrap();
        let b = train_logistic_regression(&d, &v, &LrConfig::default()).unwrap();
        assert_eq!(a, b);
    }
}
