//! Dense state vector and the unitary action of every supported gate.
//!
//! Qubit 0 is the least-significant bit of the basis-state index.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gate::{Circuit, GateKind, GateOp};
use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 16;

type Mat2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        let mut amps = vec![ZERO; 1 << n_qubits];
        amps[0] = ONE;
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if n_qubits > MAX_QUBITS {
            return Err(Error::InvalidState(format!(
                "{n_qubits} qubits exceeds the {MAX_QUBITS}-qubit limit"
            )));
        }
        if amps.len() != 1 << n_qubits {
            return Err(Error::LengthMismatch {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        let state = Self { n_qubits, amps };
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidState(format!("norm {norm} is not 1")));
        }
        Ok(state)
    }

    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Result<Self> {
        Self::from_amplitudes(n_qubits, amps.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Tensor product with `self` occupying the low qubits.
    pub fn tensor(&self, high: &StateVector) -> Result<StateVector> {
        let n = self.n_qubits + high.n_qubits;
        if n > MAX_QUBITS {
            return Err(Error::InvalidState(format!("{n} qubits exceeds the limit")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for h in &high.amps {
            for l in &self.amps {
                amps.push(h * l);
            }
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn expectation_z(&self, qubits: &[usize]) -> Result<Vec<f64>> {
        qubits
            .iter()
            .map(|&q| {
                self.check_qubit(q)?;
                let mask = 1usize << q;
                Ok(self
                    .amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
                    .sum())
            })
            .collect()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            Err(Error::QubitOutOfRange {
                index: q,
                n_qubits: self.n_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// Applies `op` in place, resolving trainable angles from `params`.
    pub fn apply(&mut self, op: &GateOp, params: &[f64]) -> Result<()> {
        op.validate(self.n_qubits)?;
        let theta = op.resolve_angle(params)?;
        self.apply_with_angle(op, theta);
        Ok(())
    }

    /// Applies a validated op with an explicit angle (ignored for fixed gates).
    pub(crate) fn apply_with_angle(&mut self, op: &GateOp, theta: f64) {
        match op.kind {
            GateKind::Rz => self.apply_diag1(op.qubits[0], rz_phases(theta)),
            GateKind::Crz => self.apply_controlled_diag(op.qubits[0], op.qubits[1], rz_phases(theta)),
            GateKind::Rx | GateKind::Ry | GateKind::X | GateKind::Sx | GateKind::H => {
                self.apply_mat1(op.qubits[0], &single_matrix(op.kind, theta))
            }
            GateKind::Cx => self.apply_cx(op.qubits[0], op.qubits[1]),
            GateKind::Crx | GateKind::Cry => {
                let base = if op.kind == GateKind::Crx { GateKind::Rx } else { GateKind::Ry };
                self.apply_controlled_mat(op.qubits[0], op.qubits[1], &single_matrix(base, theta))
            }
            GateKind::Swap => self.apply_swap(op.qubits[0], op.qubits[1]),
        }
    }

    pub(crate) fn apply_mat1(&mut self, q: usize, m: &Mat2) {
        let bit = 1usize << q;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_diag1(&mut self, q: usize, (p0, p1): (Complex64, Complex64)) {
        let bit = 1usize << q;
        for (i, a) in self.amps.iter_mut().enumerate() {
            *a *= if i & bit == 0 { p0 } else { p1 };
        }
    }

    fn apply_controlled_diag(&mut self, c: usize, t: usize, (p0, p1): (Complex64, Complex64)) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for (i, a) in self.amps.iter_mut().enumerate() {
            if i & cb != 0 {
                *a *= if i & tb == 0 { p0 } else { p1 };
            }
        }
    }

    fn apply_controlled_mat(&mut self, c: usize, t: usize, m: &Mat2) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                let j = i | tb;
                let (a0, a1) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_cx(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1usize << c, 1usize << t);
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    fn apply_swap(&mut self, a: usize, b: usize) {
        let (ab, bb) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & ab != 0 && i & bb == 0 {
                self.amps.swap(i, (i & !ab) | bb);
            }
        }
    }

    /// Applies a Pauli (1 = X, 2 = Y, 3 = Z) to qubit `q`.
    pub(crate) fn apply_pauli(&mut self, q: usize, pauli: u8) {
        match pauli {
            1 => self.apply_mat1(q, &single_matrix(GateKind::X, 0.0)),
            2 => {
                let i = Complex64::new(0.0, 1.0);
                self.apply_mat1(q, &[[ZERO, -i], [i, ZERO]])
            }
            3 => self.apply_diag1(q, (ONE, -ONE)),
            _ => {}
        }
    }
}

fn rz_phases(theta: f64) -> (Complex64, Complex64) {
    (
        Complex64::from_polar(1.0, -theta / 2.0),
        Complex64::from_polar(1.0, theta / 2.0),
    )
}

/// 2x2 matrix of a single-qubit kind (`theta` ignored for fixed gates).
pub fn single_matrix(kind: GateKind, theta: f64) -> Mat2 {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let i = Complex64::new(0.0, 1.0);
    match kind {
        GateKind::Rx => [[c.into(), -i * s], [-i * s, c.into()]],
        GateKind::Ry => [[c.into(), (-s).into()], [s.into(), c.into()]],
        GateKind::Rz => {
            let (p0, p1) = rz_phases(theta);
            [[p0, ZERO], [ZERO, p1]]
        }
        GateKind::X => [[ZERO, ONE], [ONE, ZERO]],
        GateKind::Sx => {
            let a = Complex64::new(0.5, 0.5);
            let b = Complex64::new(0.5, -0.5);
            [[a, b], [b, a]]
        }
        GateKind::H => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[h, h], [h, -h]]
        }
        _ => panic!("{kind} is not a single-qubit gate"),
    }
}

/// Applies one gate to a copy of `state`.
pub fn apply_gate(state: &StateVector, op: &GateOp, params: &[f64]) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(op, params)?;
    Ok(out)
}

/// Runs every op in order, starting from `initial` or `|0...0⟩`.
pub fn run_circuit(circuit: &Circuit, params: &[f64], initial: Option<&StateVector>) -> Result<StateVector> {
    if params.len() < circuit.n_params {
        return Err(Error::UnresolvedParam {
            index: circuit.n_params - 1,
            available: params.len(),
        });
    }
    let mut state = match initial {
        Some(s) => {
            if s.n_qubits() != circuit.n_qubits {
                return Err(Error::LengthMismatch {
                    expected: circuit.n_qubits,
                    got: s.n_qubits(),
                });
            }
            s.clone()
        }
        None => StateVector::zero(circuit.n_qubits)?,
    };
    for op in &circuit.ops {
        state.apply(op, params)?;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::gate::Angle;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn rx_zero_is_identity() {
        let s = StateVector::zero(1).unwrap();
        let out = apply_gate(&s, &GateOp::rotation(GateKind::Rx, 0, Angle::Fixed(0.0)), &[]).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn x_on_qubit_zero_sets_lsb() {
        let s = StateVector::zero(2).unwrap();
        let out = apply_gate(&s, &GateOp::single(GateKind::X, 0), &[]).unwrap();
        let p = out.probabilities();
        assert_abs_diff_eq!(p[1], 1.0);
    }

    #[test]
    fn ry_half_pi() {
        let s = StateVector::zero(1).unwrap();
        let out = apply_gate(&s, &GateOp::rotation(GateKind::Ry, 0, Angle::Fixed(PI / 2.0)), &[]).unwrap();
        assert_abs_diff_eq!(out.amplitudes()[0].re, FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(out.amplitudes()[1].re, FRAC_1_SQRT_2, epsilon = 1e-12);
    }

    #[test]
    fn bell_state() {
        let mut c = Circuit::new(2);
        c.push(GateOp::single(GateKind::H, 0));
        c.push(GateOp::cx(0, 1));
        let s = run_circuit(&c, &[], None).unwrap();
        let p = s.probabilities();
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(p[3], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn empty_circuit_is_identity() {
        let s = run_circuit(&Circuit::new(3), &[], None).unwrap();
        assert_eq!(s, StateVector::zero(3).unwrap());
    }

    #[test]
    fn expectation_values() {
        let zero = StateVector::zero(1).unwrap();
        assert_abs_diff_eq!(zero.expectation_z(&[0]).unwrap()[0], 1.0);
        let plus = StateVector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        assert_abs_diff_eq!(plus.expectation_z(&[0]).unwrap()[0], 0.0, epsilon = 1e-12);
        let s = StateVector::from_real(1, &[0.6, 0.8]).unwrap();
        assert_abs_diff_eq!(s.expectation_z(&[0]).unwrap()[0], -0.28, epsilon = 1e-12);
        assert!(matches!(s.expectation_z(&[1]), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn errors_on_bad_ops() {
        let s = StateVector::zero(2).unwrap();
        assert!(matches!(
            apply_gate(&s, &GateOp::single(GateKind::X, 2), &[]),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            apply_gate(&s, &GateOp::rotation(GateKind::Ry, 0, Angle::param(3)), &[0.1]),
            Err(Error::UnresolvedParam { index: 3, .. })
        ));
        assert!(matches!(apply_gate(&s, &GateOp::cx(1, 1), &[]), Err(Error::RepeatedQubit(_))));
    }
}
