//! Classical reference classifiers: logistic regression and a one-hidden-layer
//! perceptron with quadratic activation.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Sample, Split};
use crate::error::{Error, Result};

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_binary(samples: &[Sample]) -> Result<usize> {
    let width = samples
        .first()
        .map(|s| s.features.len())
        .ok_or_else(|| Error::Dataset("empty training set".into()))?;
    for s in samples {
        if s.label > 1 {
            return Err(Error::Dataset(format!("label {} is not binary", s.label)));
        }
        if s.features.len() != width {
            return Err(Error::LengthMismatch {
                expected: width,
                got: s.features.len(),
            });
        }
    }
    Ok(width)
}

fn accuracy(samples: &[Sample], predict: impl Fn(&[f64]) -> usize) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let hits = samples.iter().filter(|s| predict(&s.features) == s.label).count();
    hits as f64 / samples.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub learning_rate: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1.0,
            tolerance: 1e-6,
            max_iterations: 5000,
        }
    }
}

impl LinearModel {
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        usize::from(self.probability(x) >= 0.5)
    }

    pub fn accuracy(&self, samples: &[Sample]) -> f64 {
        accuracy(samples, |x| self.predict(x))
    }
}

/// Full-batch gradient descent on the mean logistic loss. Stops when the
/// largest gradient component drops below the tolerance. Returns test accuracy.
pub fn train_linear(split: &Split, config: &LinearConfig) -> Result<(LinearModel, f64)> {
    let width = check_binary(&split.train)?;
    let ones = split.train.iter().filter(|s| s.label == 1).count();
    if ones == 0 || ones == split.train.len() {
        return Err(Error::Dataset("training data holds a single class".into()));
    }
    let n = split.train.len() as f64;
    let mut model = LinearModel {
        weights: vec![0.0; width],
        bias: 0.0,
    };
    let mut grad = vec![0.0; width + 1];
    for _ in 0..config.max_iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for s in &split.train {
            let err = model.probability(&s.features) - s.label as f64;
            for (g, x) in grad.iter_mut().zip(&s.features) {
                *g += err * x / n;
            }
            grad[width] += err / n;
        }
        if grad.iter().all(|g| g.abs() < config.tolerance) {
            break;
        }
        for (w, g) in model.weights.iter_mut().zip(&grad) {
            *w -= config.learning_rate * g;
        }
        model.bias -= config.learning_rate * grad[width];
    }
    let acc = model.accuracy(&split.test);
    Ok((model, acc))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadMLP {
    pub hidden: usize,
    /// `hidden x inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: 8,
            learning_rate: 1e-2,
            epochs: 500,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl QuadMLP {
    fn inputs(&self) -> usize {
        self.w1.len() / self.hidden
    }

    fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        let d = self.inputs();
        (0..self.hidden)
            .map(|j| self.b1[j] + self.w1[j * d..(j + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect()
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        self.b2
            + self
                .pre_activations(x)
                .iter()
                .zip(&self.w2)
                .map(|(z, w)| w * z * z)
                .sum::<f64>()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        usize::from(self.logit(x) >= 0.0)
    }

    pub fn accuracy(&self, samples: &[Sample]) -> f64 {
        accuracy(samples, |x| self.predict(x))
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }
}

/// Minimal Adam state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Returns the update to subtract from each parameter.
    pub fn step(&mut self, grad: &[f64]) -> Vec<f64> {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        grad.iter()
            .enumerate()
            .map(|(i, g)| {
                self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
                self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
                self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps)
            })
            .collect()
    }
}

/// Minibatch Adam on the logistic loss of `σ(w2 · (W1 x + b1)² + b2)`.
pub fn train_quad_mlp(split: &Split, config: &MlpConfig) -> Result<(QuadMLP, f64)> {
    let d = check_binary(&split.train)?;
    let h = config.hidden.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let s1 = 1.0 / (d as f64).sqrt();
    let s2 = 1.0 / (h as f64).sqrt();
    let mut model = QuadMLP {
        hidden: h,
        w1: (0..h * d).map(|_| rng.gen_range(-s1..s1)).collect(),
        b1: (0..h).map(|_| rng.gen_range(-s1..s1)).collect(),
        w2: (0..h).map(|_| rng.gen_range(-s2..s2)).collect(),
        b2: 0.0,
    };
    let n_params = h * d + 2 * h + 1;
    let mut adam = Adam::new(n_params, config.learning_rate);
    let mut order: Vec<usize> = (0..split.train.len()).collect();
    let mut grad = vec![0.0; n_params];
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let (gw1, rest) = grad.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let s = &split.train[i];
                let z = model.pre_activations(&s.features);
                let out = model.b2 + z.iter().zip(&model.w2).map(|(z, w)| w * z * z).sum::<f64>();
                let err = (sigmoid(out) - s.label as f64) * scale;
                gb2[0] += err;
                for j in 0..h {
                    gw2[j] += err * z[j] * z[j];
                    let dz = err * model.w2[j] * 2.0 * z[j];
                    gb1[j] += dz;
                    for (k, x) in s.features.iter().enumerate() {
                        gw1[j * d + k] += dz * x;
                    }
                }
            }
            let update = adam.step(&grad);
            for (p, u) in model.params_mut().zip(update) {
                *p -= u;
            }
        }
    }
    let acc = model.accuracy(&split.test);
    Ok((model, acc))
}
