//! Pauli-trajectory noise, shot sampling and distribution comparison.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gate::Circuit;
use super::state::{run_circuit, StateVector};
use crate::error::{Error, Result};

/// Prefix-state caching is skipped above this many stored amplitudes.
const PREFIX_CACHE_AMPS: usize = 1 << 22;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p_ro: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(p1: f64, p2: f64, p_ro: f64, seed: u64) -> Result<Self> {
        let model = Self { p1, p2, p_ro, seed };
        model.validate()?;
        Ok(model)
    }

    pub fn ideal(seed: u64) -> Self {
        Self {
            p1: 0.0,
            p2: 0.0,
            p_ro: 0.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("p1", self.p1), ("p2", self.p2), ("p_ro", self.p_ro)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Probability { name, value });
            }
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }
}

/// Draws an outcome index from a probability vector with `u` in `[0, 1)`.
fn sample_index(cdf: &[f64], u: f64) -> usize {
    let total = *cdf.last().unwrap_or(&1.0);
    cdf.partition_point(|&c| c <= u * total).min(cdf.len() - 1)
}

fn cumulative(probs: &[f64]) -> Vec<f64> {
    probs
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect()
}

/// Runs `shots` independent trajectories and returns the empirical distribution
/// over basis states.
///
/// After each gate a uniformly random non-identity Pauli hits the touched qubits
/// with probability `p1` (one-qubit gates) or `p2` (two-qubit gates). Each
/// measured bit is then flipped with probability `p_ro`. Trajectory `t` draws
/// from its own stream of a generator seeded with `noise.seed`.
pub fn run_noisy(circuit: &Circuit, params: &[f64], noise: &NoiseModel, shots: usize) -> Result<Vec<f64>> {
    noise.validate()?;
    if shots == 0 {
        return Err(Error::Config("shots must be at least 1".into()));
    }
    circuit.validate()?;
    let dim = 1usize << circuit.n_qubits;
    let ops = &circuit.ops;

    let angles: Vec<f64> = ops
        .iter()
        .map(|op| op.resolve_angle(params))
        .collect::<Result<_>>()?;
    let mut prefix = Vec::new();
    let cache_prefix = dim * (ops.len() + 1) <= PREFIX_CACHE_AMPS;
    let mut state = StateVector::zero(circuit.n_qubits)?;
    for (op, &theta) in ops.iter().zip(&angles) {
        if cache_prefix {
            prefix.push(state.clone());
        }
        state.apply_with_angle(op, theta);
    }
    let ideal_cdf = cumulative(&state.probabilities());
    let noiseless = noise.p1 == 0.0 && noise.p2 == 0.0;

    let counts = (0..shots)
        .into_par_iter()
        .fold(
            || vec![0u64; dim],
            |mut counts, t| {
                let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
                rng.set_stream(t as u64);
                let outcome = if noiseless {
                    sample_index(&ideal_cdf, rng.gen())
                } else {
                    trajectory(circuit, &angles, noise, &prefix, &ideal_cdf, &mut rng)
                };
                let mut bits = outcome;
                if noise.p_ro > 0.0 {
                    for q in 0..circuit.n_qubits {
                        if rng.gen::<f64>() < noise.p_ro {
                            bits ^= 1 << q;
                        }
                    }
                }
                counts[bits] += 1;
                counts
            },
        )
        .reduce(
            || vec![0u64; dim],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(counts.into_iter().map(|c| c as f64 / shots as f64).collect())
}

fn trajectory(
    circuit: &Circuit,
    angles: &[f64],
    noise: &NoiseModel,
    prefix: &[StateVector],
    ideal_cdf: &[f64],
    rng: &mut ChaCha8Rng,
) -> usize {
    // Error events are drawn up front so error-free trajectories reuse the ideal state.
    let events: Vec<(usize, u8)> = circuit
        .ops
        .iter()
        .enumerate()
        .filter_map(|(i, op)| {
            let p = if op.is_two_qubit() { noise.p2 } else { noise.p1 };
            if p > 0.0 && rng.gen::<f64>() < p {
                let pauli = if op.is_two_qubit() {
                    rng.gen_range(1..16u8)
                } else {
                    rng.gen_range(1..4u8)
                };
                Some((i, pauli))
            } else {
                None
            }
        })
        .collect();
    if events.is_empty() {
        return sample_index(ideal_cdf, rng.gen());
    }

    let first = events[0].0;
    let (mut state, start) = match prefix.get(first) {
        Some(s) => (s.clone(), first),
        None => (StateVector::zero(circuit.n_qubits).expect("validated size"), 0),
    };
    let mut next_event = 0;
    for (i, op) in circuit.ops.iter().enumerate().skip(start) {
        state.apply_with_angle(op, angles[i]);
        while next_event < events.len() && events[next_event].0 == i {
            let pauli = events[next_event].1;
            if op.is_two_qubit() {
                state.apply_pauli(op.qubits[0], pauli & 3);
                state.apply_pauli(op.qubits[1], pauli >> 2);
            } else {
                state.apply_pauli(op.qubits[0], pauli);
            }
            next_event += 1;
        }
    }
    sample_index(&cumulative(&state.probabilities()), rng.gen())
}

/// Exact output distribution of the noiseless circuit.
pub fn ideal_distribution(circuit: &Circuit, params: &[f64]) -> Result<Vec<f64>> {
    Ok(run_circuit(circuit, params, None)?.probabilities())
}

/// `⟨Z⟩` of each listed qubit under a basis-state distribution.
pub fn expectation_z_from_distribution(probs: &[f64], qubits: &[usize]) -> Vec<f64> {
    qubits
        .iter()
        .map(|&q| {
            probs
                .iter()
                .enumerate()
                .map(|(i, p)| if i >> q & 1 == 0 { *p } else { -p })
                .sum()
        })
        .collect()
}

/// Mean absolute elementwise difference of two distributions.
pub fn deviation(ideal: &[f64], noisy: &[f64]) -> Result<f64> {
    if ideal.len() != noisy.len() {
        return Err(Error::LengthMismatch {
            expected: ideal.len(),
            got: noisy.len(),
        });
    }
    if ideal.is_empty() {
        return Err(Error::InvalidState("empty distribution".into()));
    }
    for (name, dist) in [("ideal", ideal), ("noisy", noisy)] {
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Probability { name, value: total });
        }
    }
    Ok(ideal.iter().zip(noisy).map(|(a, b)| (a - b).abs()).sum::<f64>() / ideal.len() as f64)
}

/// Writes `basis_index,probability` rows.
pub fn write_distribution_csv<W: Write>(writer: W, probs: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["basis_index", "probability"])?;
    for (i, p) in probs.iter().enumerate() {
        w.write_record([i.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
