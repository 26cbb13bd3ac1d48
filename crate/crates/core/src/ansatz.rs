//! Trainable circuit templates: the RX/RZ/CRZ-ring block, its path-shaped
//! variant, the stacked baseline VQC and the reverse-tree ansatz.

use serde::{Deserialize, Serialize};

use crate::encoder::EncoderLayout;
use crate::error::{Error, Result};
use crate::sim::{Angle, Circuit, GateKind, GateOp};

/// Entangling pattern of one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// CRZ ring `q0→q1→…→q_last→q0`.
    #[default]
    Ring,
    /// Forward CRZ chain along the qubit order, then a reversed chain back to the head.
    Chain,
}

/// Per-level repeat counts `R = [r_1, …, r_m]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LayerSpec {
    pub repeats: Vec<usize>,
}

impl LayerSpec {
    pub fn new(repeats: Vec<usize>) -> Self {
        Self { repeats }
    }

    /// `[0, …, 0, r]` over `levels` levels.
    pub fn top_only(levels: usize, r: usize) -> Self {
        let mut repeats = vec![0; levels];
        if let Some(last) = repeats.last_mut() {
            *last = r;
        }
        Self { repeats }
    }

    pub fn validate(&self, levels: usize) -> Result<()> {
        if self.repeats.len() != levels {
            return Err(Error::LayerSpec(format!(
                "{} repeat counts given for a {levels}-level tree",
                self.repeats.len()
            )));
        }
        if self.repeats.iter().all(|&r| r == 0) {
            return Err(Error::LayerSpec("at least one level needs a nonzero repeat count".into()));
        }
        Ok(())
    }
}

/// Qubit sets acted on by the blocks of each tree level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeTopology {
    pub levels: Vec<Vec<Vec<usize>>>,
}

impl TreeTopology {
    /// Level 1 holds `spans`; each further level merges neighbours pairwise, folding
    /// a trailing odd block into the last pair, until one block remains.
    pub fn from_spans(spans: Vec<Vec<usize>>) -> Result<Self> {
        if spans.is_empty() || spans.iter().any(Vec::is_empty) {
            return Err(Error::LayerSpec("tree needs at least one nonempty span".into()));
        }
        let mut levels = vec![spans];
        while levels.last().map_or(0, Vec::len) > 1 {
            let prev = levels.last().unwrap();
            let mut next: Vec<Vec<usize>> = prev
                .chunks(2)
                .map(|pair| pair.iter().flatten().copied().collect())
                .collect();
            if prev.len() % 2 == 1 {
                let odd = next.pop().unwrap();
                next.last_mut().unwrap().extend(odd);
            }
            levels.push(next);
        }
        Ok(Self { levels })
    }

    /// Level-1 spans from an encoder layout, padded with one ancilla span up to `n_qubits`.
    pub fn from_layout(layout: &EncoderLayout, n_qubits: usize) -> Result<Self> {
        if n_qubits < layout.total_qubits {
            return Err(Error::LayerSpec(format!(
                "{n_qubits} qubits cannot hold a {}-qubit encoding",
                layout.total_qubits
            )));
        }
        let mut spans: Vec<Vec<usize>> = layout.qubit_spans.iter().map(|s| s.qubits().collect()).collect();
        if n_qubits > layout.total_qubits {
            spans.push((layout.total_qubits..n_qubits).collect());
        }
        Self::from_spans(spans)
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Number of levels for `g` level-1 spans under the pairwise merge rule.
pub fn tree_levels(g: usize) -> usize {
    if g == 0 {
        0
    } else {
        (usize::BITS - 1 - g.leading_zeros()) as usize + 1
    }
}

fn push_rotation(ops: &mut Vec<GateOp>, kind: GateKind, q: usize, next: &mut usize) {
    ops.push(GateOp::rotation(kind, q, Angle::param(*next)));
    *next += 1;
}

fn push_crz(ops: &mut Vec<GateOp>, c: usize, t: usize, next: &mut usize) {
    ops.push(GateOp::controlled(GateKind::Crz, c, t, Angle::param(*next)));
    *next += 1;
}

/// Appends one block on `qubits` with parameters numbered from `*next`.
/// A single qubit gets an (RX, RZ) pair.
pub fn append_block(ops: &mut Vec<GateOp>, qubits: &[usize], kind: BlockKind, next: &mut usize) {
    for &q in qubits {
        push_rotation(ops, GateKind::Rx, q, next);
    }
    for &q in qubits {
        push_rotation(ops, GateKind::Rz, q, next);
    }
    let n = qubits.len();
    if n < 2 {
        return;
    }
    match kind {
        BlockKind::Ring => {
            for k in 0..n {
                push_crz(ops, qubits[k], qubits[(k + 1) % n], next);
            }
        }
        BlockKind::Chain => {
            for k in 0..n - 1 {
                push_crz(ops, qubits[k], qubits[k + 1], next);
            }
            for k in (1..n).rev() {
                push_crz(ops, qubits[k], qubits[k - 1], next);
            }
        }
    }
}

pub fn block_param_count(n_qubits: usize, kind: BlockKind) -> usize {
    let entangling = match (n_qubits, kind) {
        (0 | 1, _) => 0,
        (n, BlockKind::Ring) => n,
        (n, BlockKind::Chain) => 2 * (n - 1),
    };
    2 * n_qubits + entangling
}

/// One ring block: RX on each qubit, RZ on each qubit, then a CRZ ring.
pub fn build_baseline_block(qubits: &[usize]) -> Result<Circuit> {
    build_block(qubits, BlockKind::Ring)
}

pub fn build_block(qubits: &[usize], kind: BlockKind) -> Result<Circuit> {
    if qubits.len() < 2 {
        return Err(Error::LayerSpec("a block needs at least 2 qubits".into()));
    }
    let mut seen = qubits.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != qubits.len() {
        return Err(Error::LayerSpec("block qubits must be distinct".into()));
    }
    let mut ops = Vec::new();
    let mut next = 0;
    append_block(&mut ops, qubits, kind, &mut next);
    let mut c = Circuit::new(seen.last().unwrap() + 1);
    c.extend(ops);
    Ok(c)
}

/// `blocks` ring blocks over all qubits.
pub fn build_vqc(n_qubits: usize, blocks: usize) -> Result<Circuit> {
    build_vqc_with(n_qubits, blocks, BlockKind::Ring)
}

pub fn build_vqc_with(n_qubits: usize, blocks: usize, kind: BlockKind) -> Result<Circuit> {
    if blocks == 0 {
        return Err(Error::LayerSpec("at least one block is required".into()));
    }
    if n_qubits < 2 {
        return Err(Error::LayerSpec("a block needs at least 2 qubits".into()));
    }
    let qubits: Vec<usize> = (0..n_qubits).collect();
    let mut ops = Vec::new();
    let mut next = 0;
    for _ in 0..blocks {
        append_block(&mut ops, &qubits, kind, &mut next);
    }
    let mut c = Circuit::new(n_qubits);
    c.extend(ops);
    Ok(c)
}

/// Reverse-tree ansatz: `r_ℓ` blocks on every span of level `ℓ`.
pub fn build_tree_ansatz(topology: &TreeTopology, layers: &LayerSpec, kind: BlockKind) -> Result<Circuit> {
    layers.validate(topology.depth())?;
    let n_qubits = topology.levels[0].iter().flatten().max().map_or(0, |q| q + 1);
    let mut ops = Vec::new();
    let mut next = 0;
    for (spans, &r) in topology.levels.iter().zip(&layers.repeats) {
        for span in spans {
            for _ in 0..r {
                append_block(&mut ops, span, kind, &mut next);
            }
        }
    }
    let mut c = Circuit::new(n_qubits);
    c.extend(ops);
    Ok(c)
}

pub fn tree_param_count(topology: &TreeTopology, layers: &LayerSpec, kind: BlockKind) -> usize {
    topology
        .levels
        .iter()
        .zip(&layers.repeats)
        .map(|(spans, &r)| r * spans.iter().map(|s| block_param_count(s.len(), kind)).sum::<usize>())
        .sum()
}

/// Serializable description of the trainable part of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnsatzSpec {
    Vqc {
        blocks: usize,
        #[serde(default)]
        kind: BlockKind,
    },
    Tree {
        layers: LayerSpec,
        #[serde(default)]
        kind: BlockKind,
    },
}

impl AnsatzSpec {
    pub fn kind(&self) -> BlockKind {
        match self {
            AnsatzSpec::Vqc { kind, .. } | AnsatzSpec::Tree { kind, .. } => *kind,
        }
    }

    pub fn build(&self, layout: &EncoderLayout, n_qubits: usize) -> Result<Circuit> {
        match self {
            AnsatzSpec::Vqc { blocks, kind } => build_vqc_with(n_qubits, *blocks, *kind),
            AnsatzSpec::Tree { layers, kind } => {
                build_tree_ansatz(&TreeTopology::from_layout(layout, n_qubits)?, layers, *kind)
            }
        }
    }
}
