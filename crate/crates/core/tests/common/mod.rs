//! Dense-matrix reference simulator used as an independent oracle.
#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use stvqc::sim::{Angle, Circuit, GateKind, GateOp};

pub type Matrix = Vec<Vec<Complex64>>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pauli(kind: char) -> [[Complex64; 2]; 2] {
    match kind {
        'x' => [[c(0.0), c(1.0)], [c(1.0), c(0.0)]],
        'y' => [[c(0.0), -I], [I, c(0.0)]],
        'z' => [[c(1.0), c(0.0)], [c(0.0), c(-1.0)]],
        _ => unreachable!(),
    }
}

/// `exp(-i θ P / 2)` written out as `cos(θ/2) I - i sin(θ/2) P`.
fn rotation(p: char, theta: f64) -> [[Complex64; 2]; 2] {
    let m = pauli(p);
    let (co, si) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let mut out = [[c(0.0); 2]; 2];
    for r in 0..2 {
        for k in 0..2 {
            let id = if r == k { c(co) } else { c(0.0) };
            out[r][k] = id - I * si * m[r][k];
        }
    }
    out
}

/// The 2x2 matrix acting on the target of a one-qubit or controlled gate.
pub fn target_matrix(kind: GateKind, theta: f64) -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match kind {
        GateKind::Rx | GateKind::Crx => rotation('x', theta),
        GateKind::Ry | GateKind::Cry => rotation('y', theta),
        GateKind::Rz | GateKind::Crz => rotation('z', theta),
        GateKind::X | GateKind::Cx => pauli('x'),
        GateKind::H => [[c(h), c(h)], [c(h), c(-h)]],
        // SX squares to X: ((1+i)/2) I + ((1-i)/2) X.
        GateKind::Sx => {
            let a = Complex64::new(0.5, 0.5);
            let b = Complex64::new(0.5, -0.5);
            [[a, b], [b, a]]
        }
        GateKind::Swap => unreachable!(),
    }
}

fn bit(i: usize, q: usize) -> usize {
    (i >> q) & 1
}

/// Full `2^n x 2^n` matrix of one gate with qubit 0 as the least significant bit.
pub fn gate_unitary(op: &GateOp, theta: f64, n: usize) -> Matrix {
    let dim = 1 << n;
    let mut u = vec![vec![c(0.0); dim]; dim];
    for col in 0..dim {
        match op.kind {
            GateKind::Swap => {
                let (a, b) = (op.qubits[0], op.qubits[1]);
                let mut row = col & !(1 << a) & !(1 << b);
                row |= bit(col, a) << b;
                row |= bit(col, b) << a;
                u[row][col] = c(1.0);
            }
            k if op.qubits.len() == 2 => {
                let (ctl, t) = (op.qubits[0], op.qubits[1]);
                if bit(col, ctl) == 0 {
                    u[col][col] = c(1.0);
                } else {
                    let m = target_matrix(k, theta);
                    for out in 0..2 {
                        let row = (col & !(1 << t)) | (out << t);
                        u[row][col] += m[out][bit(col, t)];
                    }
                }
            }
            k => {
                let q = op.qubits[0];
                let m = target_matrix(k, theta);
                for out in 0..2 {
                    let row = (col & !(1 << q)) | (out << q);
                    u[row][col] += m[out][bit(col, q)];
                }
            }
        }
    }
    u
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut out = vec![vec![c(0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == c(0.0) {
                continue;
            }
            for j in 0..n {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub fn identity(n: usize) -> Matrix {
    let dim = 1 << n;
    (0..dim)
        .map(|i| (0..dim).map(|j| c(if i == j { 1.0 } else { 0.0 })).collect())
        .collect()
}

fn angle_value(op: &GateOp, params: &[f64]) -> f64 {
    op.angle.map_or(0.0, |a| a.resolve(params).unwrap())
}

pub fn circuit_unitary(circuit: &Circuit, params: &[f64]) -> Matrix {
    let n = circuit.n_qubits;
    let mut u = identity(n);
    for op in &circuit.ops {
        u = matmul(&gate_unitary(op, angle_value(op, params), n), &u);
    }
    u
}

pub fn apply(u: &Matrix, state: &[Complex64]) -> Vec<Complex64> {
    u.iter()
        .map(|row| row.iter().zip(state).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn zero_state(n: usize) -> Vec<Complex64> {
    let mut s = vec![c(0.0); 1 << n];
    s[0] = c(1.0);
    s
}

/// Largest elementwise gap after removing the global phase that best aligns `b` to `a`.
pub fn distance_up_to_phase(a: &Matrix, b: &Matrix) -> f64 {
    let overlap: Complex64 = a
        .iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x.conj() * y))
        .sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        c(1.0)
    };
    a.iter()
        .zip(b)
        .flat_map(|(ra, rb)| ra.iter().zip(rb).map(move |(x, y)| (x * phase - y).norm()))
        .fold(0.0, f64::max)
}

pub fn state_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Random circuit over `n` qubits mixing every gate kind; parametric gates
/// alternate between fixed angles and references into a parameter vector.
pub fn random_circuit(rng: &mut ChaCha8Rng, n: usize, len: usize, n_params: usize) -> Circuit {
    let mut circuit = Circuit::new(n);
    for _ in 0..len {
        let kinds: Vec<GateKind> = GateKind::ALL
            .into_iter()
            .filter(|k| n >= 2 || k.arity() == 1)
            .collect();
        let kind = kinds[rng.gen_range(0..kinds.len())];
        let a = rng.gen_range(0..n);
        let qubits = if kind.arity() == 2 {
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            vec![a, b]
        } else {
            vec![a]
        };
        let angle = kind.takes_angle().then(|| {
            if n_params > 0 && rng.gen_bool(0.5) {
                Angle::param(rng.gen_range(0..n_params))
            } else {
                Angle::Fixed(rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            }
        });
        circuit.push(GateOp::new(kind, qubits, angle));
    }
    circuit.n_params = circuit.n_params.max(n_params);
    circuit
}

/// Random small classifier and a matching batch, covering every encoder and
/// ansatz family.
pub fn random_model(rng: &mut ChaCha8Rng) -> (stvqc::trainer::ModelSpec, Vec<stvqc::data::Sample>) {
    use stvqc::ansatz::{AnsatzSpec, BlockKind, LayerSpec};
    use stvqc::encoder::{DuplicationSpec, EncoderSpec, GroupSpec};

    let kind = if rng.gen_bool(0.5) { BlockKind::Ring } else { BlockKind::Chain };
    let encoder = match rng.gen_range(0..4) {
        0 => EncoderSpec::Bloch { copies: rng.gen_range(1..=3) },
        1 => EncoderSpec::Amplitude { len: rng.gen_range(3..=8) },
        2 => EncoderSpec::Angle { scheme: "3x2_ryz".into() },
        _ => EncoderSpec::Spatial {
            shape: (2, 2),
            group: GroupSpec::new(2, 1, 1),
            duplication: DuplicationSpec::new(vec![rng.gen_range(1..=2), 1]),
        },
    };
    let n_classes = rng.gen_range(2..=3);
    let layout = encoder.layout().unwrap();
    let n_qubits = layout.total_qubits.max(n_classes);
    let levels = stvqc::ansatz::TreeTopology::from_layout(&layout, n_qubits).unwrap().depth();
    let ansatz = if rng.gen_bool(0.5) {
        AnsatzSpec::Vqc { blocks: rng.gen_range(1..=2), kind }
    } else {
        let mut repeats: Vec<usize> = (0..levels).map(|_| rng.gen_range(0..=2)).collect();
        repeats[levels - 1] = repeats[levels - 1].max(1);
        AnsatzSpec::Tree { layers: LayerSpec::new(repeats), kind }
    };
    let spec = stvqc::trainer::ModelSpec::new(encoder.clone(), ansatz, n_classes);
    let width = encoder.n_features().unwrap();
    let batch = (0..3)
        .map(|_| stvqc::data::Sample {
            features: (0..width).map(|_| rng.gen_range(0.05..1.0)).collect(),
            label: rng.gen_range(0..n_classes),
        })
        .collect();
    (spec, batch)
}
