//! Training and evaluation of encoder + ansatz classifiers.
//!
//! Gradients use the exact parameter-shift rule on the logical circuit: two
//! terms for single-qubit rotations, four terms for controlled rotations.
//! Noisy evaluation compiles each bound circuit and samples trajectories.

use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::compiler::{
    compact, decompose_to_basis, optimize, placement_order, rewrite_nonadjacent, transpile, Candidate,
    CompiledCircuit, CouplingGraph,
};
use crate::data::Sample;
use crate::encoder::{EncoderLayout, EncoderSpec};
use crate::error::{Error, Result};
use crate::sim::{
    deviation, expectation_z_from_distribution, ideal_distribution, run_circuit, run_noisy, Angle, Circuit, GateKind,
    NoiseModel, StateVector,
};

/// A device placement: the logical register is laid along `candidate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub graph: CouplingGraph,
    pub candidate: Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub encoder: EncoderSpec,
    pub ansatz: AnsatzSpec,
    /// Qubits averaged into each class score; defaults to qubit `k` for class `k`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub readout: Option<Vec<Vec<usize>>>,
    pub n_classes: usize,
    /// When set, trainable controlled rotations between uncoupled device
    /// qubits are rewritten into chains along the device before training.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub placement: Option<Placement>,
}

impl ModelSpec {
    pub fn new(encoder: EncoderSpec, ansatz: AnsatzSpec, n_classes: usize) -> Self {
        Self {
            encoder,
            ansatz,
            readout: None,
            n_classes,
            placement: None,
        }
    }

    pub fn with_readout(mut self, readout: Vec<Vec<usize>>) -> Self {
        self.readout = Some(readout);
        self
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = Some(placement);
        self
    }

    pub fn readout_qubits(&self) -> Vec<Vec<usize>> {
        self.readout
            .clone()
            .unwrap_or_else(|| (0..self.n_classes).map(|k| vec![k]).collect())
    }

    /// Encoder register widened so every default readout qubit exists.
    pub fn n_qubits(&self) -> Result<usize> {
        let enc = self.encoder.n_qubits()?;
        let readout_max = self.readout_qubits().iter().flatten().map(|q| q + 1).max().unwrap_or(0);
        Ok(enc.max(self.n_classes).max(readout_max))
    }

    pub fn build(&self) -> Result<Model> {
        Model::new(self.clone())
    }
}

/// A built model: encoder layout plus the trainable circuit.
#[derive(Debug, Clone)]
pub struct Model {
    pub spec: ModelSpec,
    pub layout: EncoderLayout,
    pub n_qubits: usize,
    pub ansatz: Circuit,
    pub readout: Vec<Vec<usize>>,
    /// Logical-to-physical map when the spec carries a placement.
    pub mapping: Option<Vec<usize>>,
    flat_readout: Vec<usize>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if spec.n_classes < 2 {
            return Err(Error::Model(format!("need at least 2 classes, got {}", spec.n_classes)));
        }
        let readout = spec.readout_qubits();
        if readout.len() != spec.n_classes || readout.iter().any(Vec::is_empty) {
            return Err(Error::Model(format!(
                "readout must list a non-empty qubit set for each of {} classes",
                spec.n_classes
            )));
        }
        let n_qubits = spec.n_qubits()?;
        let layout = spec.encoder.layout()?;
        let mut ansatz = spec.ansatz.build(&layout, n_qubits)?;
        let mut mapping = None;
        if let Some(p) = &spec.placement {
            if p.candidate.size() < n_qubits {
                return Err(Error::CandidateTooSmall {
                    required: n_qubits,
                    available: p.candidate.size(),
                });
            }
            let m = placement_order(&p.graph, &p.candidate)[..n_qubits].to_vec();
            ansatz = rewrite_nonadjacent(&ansatz, &p.graph, &m);
            mapping = Some(m);
        }
        for op in &ansatz.ops {
            if matches!(op.angle, Some(Angle::Param { .. })) && !is_shiftable(op.kind) {
                return Err(Error::Model(format!("trainable {} gate has no shift rule", op.kind)));
            }
        }
        let mut flat_readout: Vec<usize> = readout.iter().flatten().copied().collect();
        flat_readout.sort_unstable();
        flat_readout.dedup();
        Ok(Self {
            spec,
            layout,
            n_qubits,
            ansatz,
            readout,
            mapping,
            flat_readout,
        })
    }

    pub fn n_params(&self) -> usize {
        self.ansatz.n_params
    }

    /// Encoder circuit for one sample on the full register.
    pub fn encoder_circuit(&self, features: &[f64]) -> Result<Circuit> {
        let enc = self.spec.encoder.encode(features)?;
        let mut c = Circuit::new(self.n_qubits);
        c.append_shifted(&enc, 0, 0);
        Ok(c)
    }

    /// Encoder followed by the ansatz; the encoder part has no parameters.
    pub fn full_circuit(&self, features: &[f64]) -> Result<Circuit> {
        let mut c = self.encoder_circuit(features)?;
        c.append_shifted(&self.ansatz, 0, 0);
        c.n_params = self.n_params();
        Ok(c)
    }

    pub fn encode_state(&self, features: &[f64]) -> Result<StateVector> {
        run_circuit(&self.encoder_circuit(features)?, &[], None)
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params() {
            return Err(Error::LengthMismatch {
                expected: self.n_params(),
                got: params.len(),
            });
        }
        Ok(())
    }

    /// Per-class mean `⟨Z⟩` given `⟨Z⟩` of each qubit in `flat_readout` order.
    fn scores_from(&self, z: &[f64]) -> Vec<f64> {
        self.readout
            .iter()
            .map(|qs| {
                qs.iter()
                    .map(|q| z[self.flat_readout.binary_search(q).expect("readout qubit")])
                    .sum::<f64>()
                    / qs.len() as f64
            })
            .collect()
    }

    /// Raw class scores (mean `⟨Z⟩` per class) from an encoded state.
    pub fn scores_from_state(&self, encoded: &StateVector, params: &[f64]) -> Result<Vec<f64>> {
        let out = run_circuit(&self.ansatz, params, Some(encoded))?;
        Ok(self.scores_from(&out.expectation_z(&self.flat_readout)?))
    }

    pub fn scores(&self, params: &[f64], features: &[f64]) -> Result<Vec<f64>> {
        self.check_params(params)?;
        self.scores_from_state(&self.encode_state(features)?, params)
    }

    /// Softmax class probabilities.
    pub fn forward(&self, params: &[f64], features: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.scores(params, features)?))
    }

    pub fn predict(&self, params: &[f64], features: &[f64]) -> Result<usize> {
        Ok(argmax(&self.scores(params, features)?))
    }

    /// Cross-entropy loss and its parameter gradient for one encoded sample.
    fn sample_grad(&self, encoded: &StateVector, params: &[f64], label: usize) -> Result<(f64, Vec<f64>, bool)> {
        let (z, jac) = shift_jacobian(&self.ansatz, params, Some(encoded), &self.flat_readout)?;
        let scores = self.scores_from(&z);
        let probs = softmax(&scores);
        let loss = -probs[label].max(f64::MIN_POSITIVE).ln();
        let mut dz = vec![0.0; self.flat_readout.len()];
        for (c, qs) in self.readout.iter().enumerate() {
            let d = probs[c] - f64::from(u8::from(c == label));
            for q in qs {
                dz[self.flat_readout.binary_search(q).expect("readout qubit")] += d / qs.len() as f64;
            }
        }
        let grad = jac
            .iter()
            .map(|row| row.iter().zip(&dz).map(|(a, b)| a * b).sum())
            .collect();
        Ok((loss, grad, argmax(&scores) == label))
    }

    fn check_labels(&self, samples: &[Sample]) -> Result<()> {
        match samples.iter().find(|s| s.label >= self.spec.n_classes) {
            Some(s) => Err(Error::Model(format!(
                "label {} out of range for {} classes",
                s.label, self.spec.n_classes
            ))),
            None => Ok(()),
        }
    }

    pub fn encode_all(&self, samples: &[Sample]) -> Result<Vec<StateVector>> {
        samples.par_iter().map(|s| self.encode_state(&s.features)).collect()
    }
}

fn is_shiftable(kind: GateKind) -> bool {
    matches!(
        kind,
        GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Crx | GateKind::Cry | GateKind::Crz
    )
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    scores
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &s)| if s > best.1 { (i, s) } else { best })
        .0
}

/// Shift terms `(offset, coefficient)` giving `d f / d θ` exactly.
fn shift_terms(kind: GateKind) -> &'static [(f64, f64)] {
    const SINGLE: [(f64, f64); 2] = [(FRAC_PI_2, 0.5), (-FRAC_PI_2, -0.5)];
    // Generator spectrum {0, ±1/2}: frequencies 1/2 and 1 need four shifts.
    const C_PLUS: f64 = (std::f64::consts::SQRT_2 + 1.0) / (4.0 * std::f64::consts::SQRT_2);
    const C_MINUS: f64 = (std::f64::consts::SQRT_2 - 1.0) / (4.0 * std::f64::consts::SQRT_2);
    const CONTROLLED: [(f64, f64); 4] = [
        (FRAC_PI_2, C_PLUS),
        (-FRAC_PI_2, -C_PLUS),
        (3.0 * FRAC_PI_2, -C_MINUS),
        (-3.0 * FRAC_PI_2, C_MINUS),
    ];
    if kind.is_controlled_rotation() {
        &CONTROLLED
    } else {
        &SINGLE
    }
}

/// `⟨Z_q⟩` for each listed qubit and the parameter-shift Jacobian
/// `jac[param][i] = ∂⟨Z_{qubits[i]}⟩ / ∂θ_param`.
pub fn shift_jacobian(
    circuit: &Circuit,
    params: &[f64],
    initial: Option<&StateVector>,
    qubits: &[usize],
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    circuit.validate()?;
    let mut jac = vec![vec![0.0; qubits.len()]; circuit.n_params];
    let mut state = match initial {
        Some(s) => s.clone(),
        None => StateVector::zero(circuit.n_qubits)?,
    };
    let angles: Vec<Option<f64>> = circuit
        .ops
        .iter()
        .map(|op| op.angle.map(|a| a.resolve(params)).transpose())
        .collect::<Result<_>>()?;
    for (k, op) in circuit.ops.iter().enumerate() {
        let theta = angles[k].unwrap_or(0.0);
        if let Some(Angle::Param { index, scale, .. }) = op.angle {
            if !is_shiftable(op.kind) {
                return Err(Error::Model(format!("trainable {} gate has no shift rule", op.kind)));
            }
            for &(shift, coef) in shift_terms(op.kind) {
                let mut s = state.clone();
                s.apply_with_angle(op, theta + shift);
                for (later, angle) in circuit.ops[k + 1..].iter().zip(&angles[k + 1..]) {
                    s.apply_with_angle(later, angle.unwrap_or(0.0));
                }
                for (j, z) in s.expectation_z(qubits)?.into_iter().enumerate() {
                    jac[index][j] += coef * scale * z;
                }
            }
        }
        state.apply_with_angle(op, theta);
    }
    Ok((state.expectation_z(qubits)?, jac))
}

/// Forward model output for one sample (softmax probabilities).
pub fn forward(spec: &ModelSpec, params: &[f64], sample: &Sample) -> Result<Vec<f64>> {
    spec.build()?.forward(params, &sample.features)
}

/// Mean cross-entropy gradient over `batch`.
pub fn grad(model: &Model, params: &[f64], batch: &[Sample]) -> Result<Vec<f64>> {
    model.check_params(params)?;
    model.check_labels(batch)?;
    let states = model.encode_all(batch)?;
    let idx: Vec<usize> = (0..batch.len()).collect();
    Ok(batch_step(model, params, &states, batch, &idx)?.grad)
}

/// Mean cross-entropy over `samples`.
pub fn loss(model: &Model, params: &[f64], samples: &[Sample]) -> Result<f64> {
    model.check_params(params)?;
    model.check_labels(samples)?;
    let states = model.encode_all(samples)?;
    Ok(forward_stats(model, params, &states, samples)?.0)
}

struct BatchStep {
    grad: Vec<f64>,
}

fn batch_step(
    model: &Model,
    params: &[f64],
    states: &[StateVector],
    samples: &[Sample],
    batch: &[usize],
) -> Result<BatchStep> {
    let per_sample: Vec<(f64, Vec<f64>, bool)> = batch
        .par_iter()
        .map(|&i| model.sample_grad(&states[i], params, samples[i].label))
        .collect::<Result<_>>()?;
    let mut grad = vec![0.0; params.len()];
    for (_, g, _) in &per_sample {
        grad.iter_mut().zip(g).for_each(|(a, b)| *a += b);
    }
    let n = batch.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(BatchStep { grad })
}

/// Mean loss and accuracy over encoded samples.
fn forward_stats(model: &Model, params: &[f64], states: &[StateVector], samples: &[Sample]) -> Result<(f64, f64)> {
    let rows: Vec<(f64, bool)> = states
        .par_iter()
        .zip(samples)
        .map(|(st, s)| {
            let scores = model.scores_from_state(st, params)?;
            let p = softmax(&scores);
            Ok((-p[s.label].max(f64::MIN_POSITIVE).ln(), argmax(&scores) == s.label))
        })
        .collect::<Result<_>>()?;
    let n = rows.len().max(1) as f64;
    let loss = rows.iter().map(|r| r.0).sum::<f64>() / n;
    let acc = rows.iter().filter(|r| r.1).count() as f64 / n;
    Ok((loss, acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            epochs: 50,
            lr: 0.005,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "batch size and learning rate must be positive (got {}, {})",
                self.batch_size, self.lr
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Entry 0 holds the statistics of the initial parameters.
    pub epochs: Vec<EpochStats>,
    pub test_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noisy_test_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
    pub n_params: usize,
    pub params: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.loss)
    }
}

/// Adam with bias correction over a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u32,
}

impl AdamState {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    pub fn new(n: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// Descends `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t as i32);
        let c2 = 1.0 - Self::BETA2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = Self::BETA1 * self.m[i] + (1.0 - Self::BETA1) * grad[i];
            self.v[i] = Self::BETA2 * self.v[i] + (1.0 - Self::BETA2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + Self::EPS);
        }
    }
}

pub fn init_params(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-0.1..=0.1)).collect()
}

/// Trains with minibatch Adam and reports ideal test accuracy.
pub fn train(model: &Model, train_set: &[Sample], test_set: &[Sample], config: &TrainConfig) -> Result<TrainReport> {
    Ok(train_with_state(model, train_set, test_set, config)?.0)
}

/// Like [`train`], also returning the generator state for checkpoints.
pub fn train_with_state(
    model: &Model,
    train_set: &[Sample],
    test_set: &[Sample],
    config: &TrainConfig,
) -> Result<(TrainReport, ChaCha8Rng)> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Dataset("empty training set".into()));
    }
    model.check_labels(train_set)?;
    model.check_labels(test_set)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = init_params(model.n_params(), &mut rng);
    let states = model.encode_all(train_set)?;
    let mut adam = AdamState::new(params.len(), config.lr);
    let mut epochs = Vec::with_capacity(config.epochs + 1);
    let (loss0, acc0) = forward_stats(model, &params, &states, train_set)?;
    epochs.push(EpochStats {
        epoch: 0,
        loss: loss0,
        train_accuracy: acc0,
    });
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let step = batch_step(model, &params, &states, train_set, batch)?;
            adam.step(&mut params, &step.grad);
        }
        let (loss, train_accuracy) = forward_stats(model, &params, &states, train_set)?;
        epochs.push(EpochStats {
            epoch,
            loss,
            train_accuracy,
        });
    }
    let test_accuracy = if test_set.is_empty() {
        0.0
    } else {
        forward_stats(model, &params, &model.encode_all(test_set)?, test_set)?.1
    };
    let report = TrainReport {
        epochs,
        test_accuracy,
        noisy_test_accuracy: None,
        deviation: None,
        n_params: params.len(),
        params,
    };
    Ok((report, rng))
}

/// Settings for [`evaluate`].
#[derive(Debug, Clone, Copy)]
pub struct EvalOptions<'a> {
    pub noise: Option<NoiseModel>,
    /// Device to compile to; all-to-all connectivity when absent.
    pub graph: Option<&'a CouplingGraph>,
    pub shots: usize,
}

impl Default for EvalOptions<'_> {
    fn default() -> Self {
        Self {
            noise: None,
            graph: None,
            shots: 8192,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: f64,
    /// Mean per-sample deviation between ideal and noisy distributions.
    pub deviation: f64,
}

/// Lowers the bound full circuit for one sample. Placement models use their
/// own device and mapping; otherwise `graph` with the identity layout, or
/// all-to-all lowering when no device is given.
pub fn compile_sample(
    model: &Model,
    params: &[f64],
    features: &[f64],
    graph: Option<&CouplingGraph>,
) -> Result<CompiledCircuit> {
    let bound = model.full_circuit(features)?.bind(params)?;
    let (device, mapping) = match (&model.spec.placement, graph) {
        (Some(p), _) => (Some(&p.graph), model.mapping.clone().expect("placement sets mapping")),
        (None, Some(g)) => (Some(g), (0..model.n_qubits).collect()),
        (None, None) => (None, (0..model.n_qubits).collect()),
    };
    match device {
        Some(g) => transpile(&bound, g, &mapping),
        None => {
            let circuit = optimize(&decompose_to_basis(&bound)?);
            Ok(CompiledCircuit {
                circuit,
                final_mapping: mapping.clone(),
                mapping,
                swap_count: 0,
                param_count: 0,
            })
        }
    }
}

/// Accuracy and deviation of trained `params` on `samples`. Without noise the
/// exact expectations are used and the deviation is zero.
pub fn evaluate(model: &Model, params: &[f64], samples: &[Sample], options: &EvalOptions) -> Result<Evaluation> {
    model.check_params(params)?;
    model.check_labels(samples)?;
    if samples.is_empty() {
        return Err(Error::Dataset("empty evaluation set".into()));
    }
    let Some(noise) = options.noise else {
        let states = model.encode_all(samples)?;
        let (_, accuracy) = forward_stats(model, params, &states, samples)?;
        return Ok(Evaluation {
            accuracy,
            deviation: 0.0,
        });
    };
    noise.validate()?;
    let rows: Vec<(bool, f64)> = samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let compiled = compile_sample(model, params, &s.features, options.graph)?;
            let (circuit, local) = compact(&compiled);
            let ideal = ideal_distribution(&circuit, &[])?;
            let noisy = run_noisy(&circuit, &[], &noise.with_seed(noise.seed.wrapping_add(i as u64)), options.shots)?;
            let phys: Vec<usize> = model
                .flat_readout
                .iter()
                .map(|&q| local[compiled.final_mapping[q]].expect("mapped qubits stay in the compact register"))
                .collect();
            let scores = model.scores_from(&expectation_z_from_distribution(&noisy, &phys));
            Ok((argmax(&scores) == s.label, deviation(&ideal, &noisy)?))
        })
        .collect::<Result<_>>()?;
    let n = rows.len() as f64;
    Ok(Evaluation {
        accuracy: rows.iter().filter(|r| r.0).count() as f64 / n,
        deviation: rows.iter().map(|r| r.1).sum::<f64>() / n,
    })
}

/// Everything needed to reproduce or resume a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub spec: ModelSpec,
    pub params: Vec<f64>,
    pub config: TrainConfig,
    pub rng: ChaCha8Rng,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
