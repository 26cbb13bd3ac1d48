//! Recurrent policy over design choices, trained with REINFORCE.
//!
//! Each active slot is one step of an Elman cell. The input at step `t` is the
//! embedding of the choice made at step `t - 1` (a learned start vector at
//! step 0), and each slot has its own softmax head.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trainer::{softmax, AdamState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub hidden: usize,
    pub embedding: usize,
    pub lr: f64,
    /// Discount applied per step back from the final slot.
    pub gamma: f64,
    /// Weight of the old baseline in the moving average.
    pub ema: f64,
    /// Episodes per policy update.
    pub batch: usize,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            embedding: 16,
            lr: 5e-3,
            gamma: 1.0,
            ema: 0.95,
            batch: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Weights {
    start: Array1<f64>,
    emb: Vec<Array2<f64>>,
    wx: Array2<f64>,
    wh: Array2<f64>,
    bh: Array1<f64>,
    head_w: Vec<Array2<f64>>,
    head_b: Vec<Array1<f64>>,
}

impl Weights {
    fn zeros_like(&self) -> Self {
        Self {
            start: Array1::zeros(self.start.raw_dim()),
            emb: self.emb.iter().map(|a| Array2::zeros(a.raw_dim())).collect(),
            wx: Array2::zeros(self.wx.raw_dim()),
            wh: Array2::zeros(self.wh.raw_dim()),
            bh: Array1::zeros(self.bh.raw_dim()),
            head_w: self.head_w.iter().map(|a| Array2::zeros(a.raw_dim())).collect(),
            head_b: self.head_b.iter().map(|a| Array1::zeros(a.raw_dim())).collect(),
        }
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        out.push(self.start.as_slice_mut().expect("contiguous"));
        out.extend(self.emb.iter_mut().map(|a| a.as_slice_mut().expect("contiguous")));
        out.push(self.wx.as_slice_mut().expect("contiguous"));
        out.push(self.wh.as_slice_mut().expect("contiguous"));
        out.push(self.bh.as_slice_mut().expect("contiguous"));
        out.extend(self.head_w.iter_mut().map(|a| a.as_slice_mut().expect("contiguous")));
        out.extend(self.head_b.iter_mut().map(|a| a.as_slice_mut().expect("contiguous")));
        out
    }

    fn flatten(&mut self) -> Vec<f64> {
        self.slices_mut().into_iter().flat_map(|s| s.iter().copied()).collect()
    }

    fn assign(&mut self, flat: &[f64]) {
        let mut it = flat.iter();
        for s in self.slices_mut() {
            for v in s.iter_mut() {
                *v = *it.next().expect("flat vector matches weights");
            }
        }
    }
}

/// Per-step quantities kept for backpropagation.
struct Trace {
    inputs: Vec<Array1<f64>>,
    hidden: Vec<Array1<f64>>,
    probs: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerPolicy {
    /// Choice count of each step.
    pub sizes: Vec<usize>,
    pub config: ControllerConfig,
    /// Moving-average reward baseline; set from the first batch.
    pub baseline: Option<f64>,
    weights: Weights,
    adam: AdamState,
}

impl ControllerPolicy {
    pub fn new(sizes: Vec<usize>, config: ControllerConfig, rng: &mut ChaCha8Rng) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::Search("every slot needs at least one choice".into()));
        }
        if config.hidden == 0 || config.embedding == 0 || config.batch == 0 || !(config.lr > 0.0) {
            return Err(Error::Config("controller sizes, batch and learning rate must be positive".into()));
        }
        let (h, e) = (config.hidden, config.embedding);
        // Unit-variance embeddings, recurrent weights in ±1/√hidden, zero heads so
        // the initial policy is uniform.
        let emb_scale = 3f64.sqrt();
        let w_scale = 1.0 / (h as f64).sqrt();
        let mut init = |rows: usize, cols: usize, scale: f64| {
            Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-scale..scale))
        };
        let start = init(1, e, emb_scale).row(0).to_owned();
        let emb = sizes.iter().map(|&k| init(k, e, emb_scale)).collect();
        let wx = init(h, e, w_scale);
        let wh = init(h, h, w_scale);
        let bh = init(1, h, w_scale).row(0).to_owned();
        let head_w = sizes.iter().map(|&k| Array2::zeros((k, h))).collect();
        let head_b = sizes.iter().map(|&k| Array1::zeros(k)).collect();
        let mut weights = Weights {
            start,
            emb,
            wx,
            wh,
            bh,
            head_w,
            head_b,
        };
        let n = weights.flatten().len();
        Ok(Self {
            sizes,
            config,
            baseline: None,
            weights,
            adam: AdamState::new(n, config.lr),
        })
    }

    pub fn steps(&self) -> usize {
        self.sizes.len()
    }

    fn cell(&self, t: usize, x: &Array1<f64>, h_prev: &Array1<f64>) -> (Array1<f64>, Vec<f64>) {
        let w = &self.weights;
        let h = (w.wx.dot(x) + w.wh.dot(h_prev) + &w.bh).mapv(f64::tanh);
        let logits = w.head_w[t].dot(&h) + &w.head_b[t];
        (h, softmax(logits.as_slice().expect("contiguous")))
    }

    fn input(&self, t: usize, prev: Option<usize>) -> Array1<f64> {
        match prev {
            None => self.weights.start.clone(),
            Some(a) => self.weights.emb[t - 1].row(a).to_owned(),
        }
    }

    /// Runs the cell along fixed `actions` (teacher forcing).
    fn trace(&self, actions: &[usize]) -> Trace {
        let mut h = Array1::zeros(self.config.hidden);
        let mut trace = Trace {
            inputs: Vec::with_capacity(actions.len()),
            hidden: vec![h.clone()],
            probs: Vec::with_capacity(actions.len()),
        };
        for t in 0..actions.len() {
            let x = self.input(t, t.checked_sub(1).map(|p| actions[p]));
            let (h_next, p) = self.cell(t, &x, &h);
            h = h_next;
            trace.inputs.push(x);
            trace.hidden.push(h.clone());
            trace.probs.push(p);
        }
        trace
    }

    /// Samples one choice per step; `greedy` takes the argmax instead.
    /// Returns the actions and their total log-probability.
    pub fn sample(&self, rng: &mut ChaCha8Rng, greedy: bool) -> (Vec<usize>, f64) {
        let mut h = Array1::zeros(self.config.hidden);
        let mut actions = Vec::with_capacity(self.steps());
        let mut log_prob = 0.0;
        for t in 0..self.steps() {
            let x = self.input(t, actions.last().copied());
            let (h_next, p) = self.cell(t, &x, &h);
            h = h_next;
            let a = if greedy {
                crate::trainer::argmax(&p)
            } else {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                p.iter()
                    .position(|&pi| {
                        acc += pi;
                        u < acc
                    })
                    .unwrap_or(p.len() - 1)
            };
            log_prob += p[a].ln();
            actions.push(a);
        }
        (actions, log_prob)
    }

    /// Per-step distributions along `actions`.
    pub fn distributions(&self, actions: &[usize]) -> Result<Vec<Vec<f64>>> {
        self.check_actions(actions)?;
        Ok(self.trace(actions).probs)
    }

    pub fn log_prob(&self, actions: &[usize]) -> Result<f64> {
        Ok(self
            .distributions(actions)?
            .iter()
            .zip(actions)
            .map(|(p, &a)| p[a].ln())
            .sum())
    }

    fn check_actions(&self, actions: &[usize]) -> Result<()> {
        if actions.len() != self.steps() || actions.iter().zip(&self.sizes).any(|(a, k)| a >= k) {
            return Err(Error::Search(format!(
                "actions {actions:?} do not match slot sizes {:?}",
                self.sizes
            )));
        }
        Ok(())
    }

    /// Gradient of `-Σ_t weight_t log π(a_t)` accumulated into `grad`.
    fn backprop(&self, actions: &[usize], step_weights: &[f64], grad: &mut Weights) {
        let tr = self.trace(actions);
        let w = &self.weights;
        let mut dh_next: Array1<f64> = Array1::zeros(self.config.hidden);
        for t in (0..actions.len()).rev() {
            let h = &tr.hidden[t + 1];
            let mut dz = Array1::from(tr.probs[t].clone());
            dz[actions[t]] -= 1.0;
            dz *= step_weights[t];
            grad.head_w[t] += &outer(&dz, h);
            grad.head_b[t] += &dz;
            let dh = w.head_w[t].t().dot(&dz) + &dh_next;
            let da = &dh * &h.mapv(|v| 1.0 - v * v);
            grad.wx += &outer(&da, &tr.inputs[t]);
            grad.wh += &outer(&da, &tr.hidden[t]);
            grad.bh += &da;
            let dx = w.wx.t().dot(&da);
            if t == 0 {
                grad.start += &dx;
            } else {
                let mut row = grad.emb[t - 1].row_mut(actions[t - 1]);
                row += &dx;
            }
            dh_next = w.wh.t().dot(&da);
        }
    }

    /// Policy-gradient loss gradient for a batch of `(actions, reward)`, as a flat vector.
    pub fn batch_gradient(&self, batch: &[(Vec<usize>, f64)], baseline: f64) -> Result<Vec<f64>> {
        let mut grad = self.weights.zeros_like();
        let m = batch.len().max(1) as f64;
        let steps = self.steps();
        for (actions, reward) in batch {
            self.check_actions(actions)?;
            let adv = (reward - baseline) / m;
            let weights: Vec<f64> = (0..steps)
                .map(|t| self.config.gamma.powi((steps - 1 - t) as i32) * adv)
                .collect();
            self.backprop(actions, &weights, &mut grad);
        }
        Ok(grad.flatten())
    }

    /// One REINFORCE step on a batch, then the baseline update.
    pub fn update(&mut self, batch: &[(Vec<usize>, f64)]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Search("empty episode batch".into()));
        }
        let baseline = *self
            .baseline
            .get_or_insert_with(|| batch.iter().map(|b| b.1).sum::<f64>() / batch.len() as f64);
        if batch.iter().any(|(_, r)| r != &baseline) {
            let grad = self.batch_gradient(batch, baseline)?;
            let mut flat = self.weights.flatten();
            self.adam.step(&mut flat, &grad);
            self.weights.assign(&flat);
        }
        let mut b = baseline;
        for (_, r) in batch {
            b = self.config.ema * b + (1.0 - self.config.ema) * r;
        }
        self.baseline = Some(b);
        Ok(())
    }

    /// Flat copy of all weights (for tests and inspection).
    pub fn flat_weights(&self) -> Vec<f64> {
        self.weights.clone().flatten()
    }

    pub fn set_flat_weights(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.flat_weights().len() {
            return Err(Error::LengthMismatch {
                expected: self.flat_weights().len(),
                got: flat.len(),
            });
        }
        self.weights.assign(flat);
        Ok(())
    }
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    let col = a.view().insert_axis(ndarray::Axis(1));
    let row = b.view().insert_axis(ndarray::Axis(0));
    col.dot(&row)
}
