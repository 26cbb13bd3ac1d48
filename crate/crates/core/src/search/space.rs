//! The four-segment design space and decoding of sampled choices.

use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzSpec, BlockKind, LayerSpec, TreeTopology};
use crate::compiler::{candidate_set, Candidate, CouplingGraph};
use crate::encoder::{DuplicationSpec, EncoderSpec, GroupSpec};
use crate::error::{Error, Result};
use crate::sim::MAX_QUBITS;
use crate::trainer::ModelSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segment {
    Spatial,
    Duplication,
    Layer,
    Physical,
}

/// Which segments the controller explores; inactive ones are pinned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentMask {
    pub spatial: bool,
    pub duplication: bool,
    pub layer: bool,
    pub physical: bool,
}

impl SegmentMask {
    pub const ALL: SegmentMask = SegmentMask {
        spatial: true,
        duplication: true,
        layer: true,
        physical: true,
    };

    pub fn is_active(&self, segment: Segment) -> bool {
        match segment {
            Segment::Spatial => self.spatial,
            Segment::Duplication => self.duplication,
            Segment::Layer => self.layer,
            Segment::Physical => self.physical,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    /// Images whose classes are (close to) linearly separable, e.g. MNIST digits.
    LinearImage,
    Nonlinear,
    /// Flat vectors without spatial structure, e.g. text embeddings.
    Vector,
}

/// Turns off nonlinearity exploration for linearly separable images and
/// layer exploration for vector data.
pub fn select_optimizers(kind: DataKind, _shape: (usize, usize)) -> SegmentMask {
    match kind {
        DataKind::LinearImage => SegmentMask {
            duplication: false,
            ..SegmentMask::ALL
        },
        DataKind::Nonlinear => SegmentMask::ALL,
        DataKind::Vector => SegmentMask {
            layer: false,
            ..SegmentMask::ALL
        },
    }
}

/// Shape of the model input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputKind {
    /// Row-major `width x height` grid, encoded with the spatial encoder.
    Grid { shape: (usize, usize) },
    /// `(θ, φ)` pairs, encoded as Bloch-sphere copies (one group).
    Bloch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub segment: Segment,
    /// Position within its segment.
    pub index: usize,
    pub choices: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub input: InputKind,
    pub spatial: Vec<GroupSpec>,
    /// Copy counts available to each duplication slot; group `i` reads slot `min(i, slots - 1)`.
    pub dup_choices: Vec<usize>,
    pub dup_slots: usize,
    /// Repeat counts per tree level; only the first `depth` slots are read.
    pub layer_choices: Vec<usize>,
    pub layer_slots: usize,
    pub candidates: Vec<Candidate>,
    pub graph: CouplingGraph,
    pub mask: SegmentMask,
    pub n_classes: usize,
    pub block: BlockKind,
    /// Repeats of the single top-level block used when layers are pinned.
    pub pinned_top_repeats: usize,
}

/// Result of decoding one choice vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decoded {
    /// Model without placement; `None` when the design is infeasible.
    pub spec: Option<ModelSpec>,
    pub n_qubits: usize,
    /// Index into the space's candidate list, `None` when the physical segment is pinned.
    pub candidate: Option<usize>,
    pub infeasible: Option<String>,
}

impl SearchSpace {
    /// Space for `(θ, φ)` data: copies `1..=max_copies`, two layer slots.
    pub fn bloch(graph: CouplingGraph, max_copies: usize, layer_choices: Vec<usize>, k: usize) -> Result<Self> {
        let candidates = candidate_set(&graph, graph.n_phys.min(MAX_QUBITS), k);
        let space = Self {
            input: InputKind::Bloch,
            spatial: vec![GroupSpec::new(1, 1, 1)],
            dup_choices: (1..=max_copies.max(1)).collect(),
            dup_slots: 1,
            layer_slots: 2,
            layer_choices,
            candidates,
            graph,
            mask: SegmentMask::ALL,
            n_classes: 2,
            block: BlockKind::Ring,
            pinned_top_repeats: 1,
        };
        space.validate()?;
        Ok(space)
    }

    /// Space for grid data with the given window choices.
    pub fn grid(
        shape: (usize, usize),
        spatial: Vec<GroupSpec>,
        dup_choices: Vec<usize>,
        layer_choices: Vec<usize>,
        graph: CouplingGraph,
        k: usize,
    ) -> Result<Self> {
        let mut dup_slots = 1;
        let mut layer_slots = 1;
        for f in &spatial {
            let g = f.group_count(shape)?;
            dup_slots = dup_slots.max(g);
            layer_slots = layer_slots.max(crate::ansatz::tree_levels(g * dup_choices.iter().max().copied().unwrap_or(1) + 1));
        }
        let candidates = candidate_set(&graph, graph.n_phys.min(MAX_QUBITS), k);
        let space = Self {
            input: InputKind::Grid { shape },
            spatial,
            dup_choices,
            dup_slots,
            layer_choices,
            layer_slots,
            candidates,
            graph,
            mask: SegmentMask::ALL,
            n_classes: 2,
            block: BlockKind::Ring,
            pinned_top_repeats: 1,
        };
        space.validate()?;
        Ok(space)
    }

    pub fn with_mask(mut self, mask: SegmentMask) -> Self {
        self.mask = mask;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let empty = |name: &str| Error::Search(format!("{name} segment has no choices"));
        if self.spatial.is_empty() {
            return Err(empty("spatial"));
        }
        if self.dup_choices.is_empty() || self.dup_choices.contains(&0) {
            return Err(Error::Search("duplication choices must be positive".into()));
        }
        if self.layer_choices.is_empty() {
            return Err(empty("layer"));
        }
        if self.mask.physical && self.candidates.is_empty() {
            return Err(empty("physical"));
        }
        if !self.mask.duplication && !self.dup_choices.contains(&1) {
            return Err(Error::Search("pinned duplication needs the choice 1".into()));
        }
        if self.n_classes < 2 {
            return Err(Error::Search("at least two classes".into()));
        }
        Ok(())
    }

    /// Every slot in sampling order.
    pub fn slots(&self) -> Vec<Slot> {
        let mut out = vec![Slot {
            segment: Segment::Spatial,
            index: 0,
            choices: self.spatial.len(),
        }];
        out.extend((0..self.dup_slots).map(|index| Slot {
            segment: Segment::Duplication,
            index,
            choices: self.dup_choices.len(),
        }));
        out.extend((0..self.layer_slots).map(|index| Slot {
            segment: Segment::Layer,
            index,
            choices: self.layer_choices.len(),
        }));
        out.push(Slot {
            segment: Segment::Physical,
            index: 0,
            choices: self.candidates.len().max(1),
        });
        out
    }

    /// Choice index emitted for a masked slot.
    pub fn default_choice(&self, slot: &Slot) -> usize {
        match slot.segment {
            Segment::Duplication => self.dup_choices.iter().position(|&c| c == 1).unwrap_or(0),
            _ => 0,
        }
    }

    pub fn is_active(&self, slot: &Slot) -> bool {
        self.mask.is_active(slot.segment)
    }

    /// Qubit count of the longest device path.
    pub fn max_path_qubits(&self) -> usize {
        self.graph.longest_path_len()
    }

    pub fn decode(&self, choices: &[usize]) -> Result<Decoded> {
        let slots = self.slots();
        if choices.len() != slots.len() {
            return Err(Error::Search(format!(
                "{} choices for {} slots",
                choices.len(),
                slots.len()
            )));
        }
        for (c, s) in choices.iter().zip(&slots) {
            if *c >= s.choices {
                return Err(Error::Search(format!("choice {c} out of range for {:?} slot", s.segment)));
            }
        }
        let pick = |segment: Segment| -> Vec<usize> {
            slots
                .iter()
                .zip(choices)
                .filter(|(s, _)| s.segment == segment)
                .map(|(s, &c)| if self.is_active(s) { c } else { self.default_choice(s) })
                .collect()
        };
        let group = self.spatial[pick(Segment::Spatial)[0]];
        let dup_idx = pick(Segment::Duplication);
        let encoder_copies = |g: usize| -> Vec<usize> {
            (0..g)
                .map(|i| self.dup_choices[dup_idx[i.min(dup_idx.len() - 1)]])
                .collect()
        };
        let encoder = match self.input {
            InputKind::Bloch => EncoderSpec::Bloch {
                copies: encoder_copies(1)[0],
            },
            InputKind::Grid { shape } => {
                let g = group.group_count(shape)?;
                EncoderSpec::Spatial {
                    shape,
                    group,
                    duplication: DuplicationSpec::new(encoder_copies(g)),
                }
            }
        };
        let candidate = self.mask.physical.then(|| pick(Segment::Physical)[0]);
        let placeholder = ModelSpec::new(
            encoder.clone(),
            AnsatzSpec::Vqc {
                blocks: 1,
                kind: self.block,
            },
            self.n_classes,
        );
        let n_qubits = placeholder.n_qubits()?;
        let infeasible = |reason: String| Decoded {
            spec: None,
            n_qubits,
            candidate,
            infeasible: Some(reason),
        };
        if n_qubits > MAX_QUBITS {
            return Ok(infeasible(format!("{n_qubits} qubits exceeds the simulator limit")));
        }
        let layout = encoder.layout()?;
        let depth = TreeTopology::from_layout(&layout, n_qubits)?.depth();
        let layers = if self.mask.layer {
            let r: Vec<usize> = pick(Segment::Layer)
                .iter()
                .map(|&i| self.layer_choices[i])
                .chain(std::iter::repeat(0))
                .take(depth)
                .collect();
            LayerSpec::new(r)
        } else {
            LayerSpec::top_only(depth, self.pinned_top_repeats)
        };
        if let Err(e) = layers.validate(depth) {
            return Ok(infeasible(e.to_string()));
        }
        let spec = ModelSpec::new(
            encoder,
            AnsatzSpec::Tree {
                layers,
                kind: self.block,
            },
            self.n_classes,
        );
        Ok(Decoded {
            spec: Some(spec),
            n_qubits,
            candidate,
            infeasible: None,
        })
    }
}
