use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    fingerprint_of, sigmoid, softplus, AttributeEstimator, BowVector, FeatureMode, FeatureSpace, ModelError, Objective,
    Result, TrainingSet,
};
use crate::corpus::{Dataset, Token, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden_sizes: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub feature_mode: FeatureMode,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: vec![5],
            epochs: 50,
            learning_rate: 0.05,
            l2: 1e-4,
            batch_size: 32,
            seed: 0,
            feature_mode: FeatureMode::Binary,
        }
    }
}

impl MlpConfig {
    fn validate(&self) -> Result<()> {
        if self.hidden_sizes.is_empty() || self.hidden_sizes.contains(&0) {
            return Err(ModelError::InvalidConfig(
                "an MLP needs at least one hidden layer and no empty layers".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(ModelError::InvalidConfig("epochs and batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) || !(self.l2 >= 0.0) {
            return Err(ModelError::InvalidConfig("learning_rate must be positive and l2 non-negative".into()));
        }
        Ok(())
    }
}

/// A dense layer; `weights[i * outputs + o]` connects input `i` to output `o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn dense(&self, input: &[f64]) -> Vec<f64> {
        let mut z = self.bias.clone();
        for (i, &a) in input.iter().enumerate() {
            if a != 0.0 {
                let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
                z.iter_mut().zip(row).for_each(|(z, w)| *z += a * w);
            }
        }
        z
    }

    fn sparse(&self, x: &BowVector) -> Vec<f64> {
        let mut z = self.bias.clone();
        for &(i, a) in &x.entries {
            let row = &self.weights[i * self.outputs..(i + 1) * self.outputs];
            z.iter_mut().zip(row).for_each(|(z, w)| *z += a * w);
        }
        z
    }
}

/// Feed-forward network: rectifier hidden layers, one logistic output unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub config: MlpConfig,
    pub features: FeatureSpace,
    pub layers: Vec<Layer>,
}

struct Trace {
    /// Post-activation outputs of each hidden layer.
    hidden: Vec<Vec<f64>>,
    logit: f64,
}

impl Mlp {
    fn forward(&self, x: &BowVector) -> Trace {
        let (last, hidden_layers) = self.layers.split_last().expect("at least one layer");
        let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(hidden_layers.len());
        for (l, layer) in hidden_layers.iter().enumerate() {
            let mut z = if l == 0 { layer.sparse(x) } else { layer.dense(&hidden[l - 1]) };
            z.iter_mut().for_each(|v| *v = v.max(0.0));
            hidden.push(z);
        }
        let logit = last.dense(hidden.last().expect("hidden layer"))[0];
        Trace { hidden, logit }
    }

    /// Parameters flattened layer by layer as `[weights..., bias...]`.
    pub fn parameters(&self) -> Vec<f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect()
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        let total: usize = self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum();
        assert_eq!(params.len(), total, "parameter length");
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, r) = rest.split_at(layer.weights.len());
            let (b, r) = r.split_at(layer.bias.len());
            layer.weights.copy_from_slice(w);
            layer.bias.copy_from_slice(b);
            rest = r;
        }
    }

    /// Mean binary cross-entropy plus `l2 / 2` times the squared weights
    /// (biases unpenalized), with the gradient in `parameters()` order.
    pub fn objective(&self, dataset: &Dataset) -> Objective {
        let set = TrainingSet::new(dataset, &self.features);
        let idx: Vec<usize> = (0..set.len()).collect();
        let mut grads = self.zero_like();
        let loss = self.batch_objective(&set, &idx, &mut grads);
        let gradient = grads
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias).copied())
            .collect();
        Objective { loss, gradient }
    }

    fn zero_like(&self) -> Vec<Layer> {
        self.layers.iter().map(|l| Layer::zeros(l.inputs, l.outputs)).collect()
    }

    fn batch_objective(&self, set: &TrainingSet, batch: &[usize], grads: &mut [Layer]) -> f64 {
        for g in grads.iter_mut() {
            g.weights.iter_mut().for_each(|v| *v = 0.0);
            g.bias.iter_mut().for_each(|v| *v = 0.0);
        }
        let m = batch.len() as f64;
        let n_layers = self.layers.len();
        let mut loss = 0.0;
        for &i in batch {
            let x = &set.xs[i];
            let y = set.ys[i];
            let trace = self.forward(x);
            loss += softplus(trace.logit) - y * trace.logit;
            let mut delta = vec![(sigmoid(trace.logit) - y) / m];
            for l in (0..n_layers).rev() {
                let layer = &self.layers[l];
                let grad = &mut grads[l];
                grad.bias.iter_mut().zip(&delta).for_each(|(g, d)| *g += d);
                if l == 0 {
                    for &(j, a) in &x.entries {
                        let row = &mut grad.weights[j * layer.outputs..(j + 1) * layer.outputs];
                        row.iter_mut().zip(&delta).for_each(|(g, d)| *g += a * d);
                    }
                    break;
                }
                let input = &trace.hidden[l - 1];
                let mut back = vec![0.0; layer.inputs];
                for (k, &a) in input.iter().enumerate() {
                    let wrow = &layer.weights[k * layer.outputs..(k + 1) * layer.outputs];
                    let grow = &mut grad.weights[k * layer.outputs..(k + 1) * layer.outputs];
                    let mut s = 0.0;
                    for o in 0..layer.outputs {
                        grow[o] += a * delta[o];
                        s += wrow[o] * delta[o];
                    }
                    // rectifier derivative, taken as 0 at the kink
                    back[k] = if a > 0.0 { s } else { 0.0 };
                }
                delta = back;
            }
        }
        let l2 = self.config.l2;
        let mut penalty = 0.0;
        for (layer, grad) in self.layers.iter().zip(grads.iter_mut()) {
            for (g, w) in grad.weights.iter_mut().zip(&layer.weights) {
                *g += l2 * w;
                penalty += w * w;
            }
        }
        loss / m + 0.5 * l2 * penalty
    }
}

/// Trains with Adam on mini-batches. Weights and biases start uniform in
/// `±1/sqrt(fan_in)`; initialization and batch order both come from
/// `config.seed`.
pub fn train_mlp(dataset: &Dataset, vocabulary: &Vocabulary, config: &MlpConfig) -> Result<Mlp> {
    config.validate()?;
    let features = FeatureSpace::new(vocabulary, config.feature_mode);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut sizes = vec![features.len().max(1)];
    sizes.extend(&config.hidden_sizes);
    sizes.push(1);
    let layers = sizes
        .windows(2)
        .map(|w| {
            let bound = 1.0 / (w[0] as f64).sqrt();
            let mut layer = Layer::zeros(w[0], w[1]);
            layer
                .weights
                .iter_mut()
                .chain(layer.bias.iter_mut())
                .for_each(|v| *v = rng.random_range(-bound..bound));
            layer
        })
        .collect();
    let mut model = Mlp {
        config: config.clone(),
        features,
        layers,
    };

    let set = TrainingSet::new(dataset, &model.features);
    let mut order: Vec<usize> = (0..set.len()).collect();
    let mut grads = model.zero_like();
    let mut first = model.zero_like();
    let mut second = model.zero_like();
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);
    let mut step = 0i32;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            epoch_loss += model.batch_objective(&set, batch, &mut grads) * batch.len() as f64;
            step += 1;
            let lr = config.learning_rate * (1.0 - beta2.powi(step)).sqrt() / (1.0 - beta1.powi(step));
            for l in 0..model.layers.len() {
                let layer = &mut model.layers[l];
                let params = layer.weights.iter_mut().chain(layer.bias.iter_mut());
                let g = grads[l].weights.iter().chain(&grads[l].bias);
                let (f, s) = (&mut first[l], &mut second[l]);
                let m1 = f.weights.iter_mut().chain(f.bias.iter_mut());
                let m2 = s.weights.iter_mut().chain(s.bias.iter_mut());
                for (((p, g), m1), m2) in params.zip(g).zip(m1).zip(m2) {
                    *m1 = beta1 * *m1 + (1.0 - beta1) * g;
                    *m2 = beta2 * *m2 + (1.0 - beta2) * g * g;
                    *p -= lr * *m1 / (m2.sqrt() + eps);
                }
            }
        }
        if !epoch_loss.is_finite() {
            return Err(ModelError::Diverged {
                model: model.name(),
                epoch,
                learning_rate: config.learning_rate,
            });
        }
        log::debug!("{} epoch {epoch}: mean loss {:.6}", model.name(), epoch_loss / set.len() as f64);
    }
    Ok(model)
}

impl AttributeEstimator for Mlp {
    fn name(&self) -> String {
        let sizes: String = self.config.hidden_sizes.iter().map(|h| h.to_string()).collect();
        format!("NN{}Layer{}", self.config.hidden_sizes.len(), sizes)
    }

    fn predict(&self, tokens: &[Token]) -> f64 {
        sigmoid(self.forward(&self.features.featurize(tokens)).logit)
    }

    fn vocabulary_hash(&self) -> Option<&str> {
        Some(self.features.hash())
    }

    fn fingerprint(&self) -> String {
        fingerprint_of("mlp", self)
    }
}
