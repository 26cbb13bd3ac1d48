//! Gate and circuit representation shared by logical and physical circuits.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    X,
    Sx,
    H,
    Cx,
    Crx,
    Cry,
    Crz,
    Swap,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::Rx,
        GateKind::Ry,
        GateKind::Rz,
        GateKind::X,
        GateKind::Sx,
        GateKind::H,
        GateKind::Cx,
        GateKind::Crx,
        GateKind::Cry,
        GateKind::Crz,
        GateKind::Swap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::X => "x",
            GateKind::Sx => "sx",
            GateKind::H => "h",
            GateKind::Cx => "cx",
            GateKind::Crx => "crx",
            GateKind::Cry => "cry",
            GateKind::Crz => "crz",
            GateKind::Swap => "swap",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn arity(self) -> usize {
        match self {
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::X | GateKind::Sx | GateKind::H => 1,
            _ => 2,
        }
    }

    pub fn takes_angle(self) -> bool {
        matches!(
            self,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Crx | GateKind::Cry | GateKind::Crz
        )
    }

    /// Controlled rotations: the generator has eigenvalues {0, ±1/2}.
    pub fn is_controlled_rotation(self) -> bool {
        matches!(self, GateKind::Crx | GateKind::Cry | GateKind::Crz)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A gate angle: either a constant or an affine function `scale * θ[index] + offset`
/// of one trainable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Angle {
    Fixed(f64),
    Param { index: usize, scale: f64, offset: f64 },
}

impl Angle {
    pub fn param(index: usize) -> Self {
        Angle::Param {
            index,
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn resolve(&self, params: &[f64]) -> Result<f64> {
        match *self {
            Angle::Fixed(v) => Ok(v),
            Angle::Param { index, scale, offset } => params
                .get(index)
                .map(|p| scale * p + offset)
                .ok_or(Error::UnresolvedParam {
                    index,
                    available: params.len(),
                }),
        }
    }

    pub fn param_index(&self) -> Option<usize> {
        match *self {
            Angle::Param { index, .. } => Some(index),
            Angle::Fixed(_) => None,
        }
    }

    /// Affine map applied on top of the current angle.
    pub fn scaled(self, factor: f64, shift: f64) -> Self {
        match self {
            Angle::Fixed(v) => Angle::Fixed(factor * v + shift),
            Angle::Param { index, scale, offset } => Angle::Param {
                index,
                scale: factor * scale,
                offset: factor * offset + shift,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    /// For two-qubit kinds, `qubits[0]` is the control (or first SWAP operand).
    pub qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angle: Option<Angle>,
}

impl GateOp {
    pub fn new(kind: GateKind, qubits: Vec<usize>, angle: Option<Angle>) -> Self {
        Self { kind, qubits, angle }
    }

    pub fn single(kind: GateKind, q: usize) -> Self {
        Self::new(kind, vec![q], None)
    }

    pub fn rotation(kind: GateKind, q: usize, angle: Angle) -> Self {
        Self::new(kind, vec![q], Some(angle))
    }

    pub fn two(kind: GateKind, a: usize, b: usize) -> Self {
        Self::new(kind, vec![a, b], None)
    }

    pub fn controlled(kind: GateKind, control: usize, target: usize, angle: Angle) -> Self {
        Self::new(kind, vec![control, target], Some(angle))
    }

    pub fn cx(control: usize, target: usize) -> Self {
        Self::two(GateKind::Cx, control, target)
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind.arity() == 2
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let expected = self.kind.arity();
        if self.qubits.len() != expected {
            return Err(Error::Arity {
                kind: self.kind.name(),
                expected,
                got: self.qubits.len(),
            });
        }
        for &q in &self.qubits {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
        }
        if expected == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::RepeatedQubit(self.kind.name()));
        }
        if self.kind.takes_angle() && self.angle.is_none() {
            return Err(Error::MissingAngle(self.kind.name()));
        }
        Ok(())
    }

    pub fn resolve_angle(&self, params: &[f64]) -> Result<f64> {
        match &self.angle {
            Some(a) => a.resolve(params),
            None if self.kind.takes_angle() => Err(Error::MissingAngle(self.kind.name())),
            None => Ok(0.0),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub ops: Vec<GateOp>,
    /// Number of trainable parameters this circuit reads (`θ[0..n_params)`).
    pub n_params: usize,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ops: Vec::new(),
            n_params: 0,
        }
    }

    pub fn push(&mut self, op: GateOp) {
        if let Some(i) = op.angle.as_ref().and_then(Angle::param_index) {
            self.n_params = self.n_params.max(i + 1);
        }
        self.ops.push(op);
    }

    pub fn extend<I: IntoIterator<Item = GateOp>>(&mut self, ops: I) {
        for op in ops {
            self.push(op);
        }
    }

    /// Appends `other`, shifting its qubits by `qubit_offset` and its parameter
    /// indices by `param_offset`.
    pub fn append_shifted(&mut self, other: &Circuit, qubit_offset: usize, param_offset: usize) {
        for op in &other.ops {
            let mut op = op.clone();
            for q in &mut op.qubits {
                *q += qubit_offset;
            }
            if let Some(Angle::Param { index, .. }) = op.angle.as_mut() {
                *index += param_offset;
            }
            self.push(op);
        }
    }

    pub fn validate(&self) -> Result<()> {
        for op in &self.ops {
            op.validate(self.n_qubits)?;
            if let Some(i) = op.angle.as_ref().and_then(Angle::param_index) {
                if i >= self.n_params {
                    return Err(Error::Circuit(format!(
                        "parameter index {i} outside [0, {})",
                        self.n_params
                    )));
                }
            }
        }
        Ok(())
    }

    /// Distinct trainable indices referenced by the circuit.
    pub fn param_indices(&self) -> BTreeSet<usize> {
        self.ops
            .iter()
            .filter_map(|op| op.angle.as_ref().and_then(Angle::param_index))
            .collect()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|op| op.is_two_qubit()).count()
    }

    pub fn count_kind(&self, kind: GateKind) -> usize {
        self.ops.iter().filter(|op| op.kind == kind).count()
    }

    /// Replaces every trainable angle by its value under `params`.
    pub fn bind(&self, params: &[f64]) -> Result<Circuit> {
        let mut out = Circuit::new(self.n_qubits);
        for op in &self.ops {
            let mut op = op.clone();
            if let Some(a) = op.angle {
                op.angle = Some(Angle::Fixed(a.resolve(params)?));
            }
            out.ops.push(op);
        }
        Ok(out)
    }
}
