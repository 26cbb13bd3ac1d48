//! Data-encoding circuits: amplitude preparation, angle encoding, the grouped
//! spatial encoder with duplicated copies, and single-qubit Bloch encoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Angle, Circuit, GateKind, GateOp};

/// Sliding-window grouping `(W, H, S)` over a 2D grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupSpec {
    pub w: usize,
    pub h: usize,
    pub s: usize,
}

impl GroupSpec {
    pub fn new(w: usize, h: usize, s: usize) -> Self {
        Self { w, h, s }
    }

    pub fn validate(&self, shape: (usize, usize)) -> Result<()> {
        let (width, height) = shape;
        if self.w == 0 || self.h == 0 || self.s == 0 {
            return Err(Error::GroupSpec(format!("{self} has a zero component")));
        }
        if self.w > width || self.h > height {
            return Err(Error::GroupSpec(format!(
                "{self} exceeds the {width}x{height} input"
            )));
        }
        Ok(())
    }

    pub fn group_count(&self, shape: (usize, usize)) -> Result<usize> {
        self.validate(shape)?;
        Ok(((shape.0 - self.w) / self.s + 1) * ((shape.1 - self.h) / self.s + 1))
    }

    /// Qubits needed to amplitude-encode one group.
    pub fn qubits_per_group(&self) -> usize {
        ceil_log2(self.w * self.h).max(1)
    }
}

impl std::fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.w, self.h, self.s)
    }
}

/// Number of copies `c_i` per group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DuplicationSpec {
    pub counts: Vec<usize>,
}

impl DuplicationSpec {
    pub fn new(counts: Vec<usize>) -> Self {
        Self { counts }
    }

    pub fn ones(groups: usize) -> Self {
        Self { counts: vec![1; groups] }
    }

    pub fn uniform(groups: usize, c: usize) -> Self {
        Self { counts: vec![c; groups] }
    }

    /// Total qubits `Σ c_i q_i`.
    pub fn qubit_demand(&self, qubits_per_group: usize) -> usize {
        self.counts.iter().sum::<usize>() * qubits_per_group
    }

    pub fn validate(&self, groups: usize, qubits_per_group: usize, budget: Option<usize>) -> Result<()> {
        if self.counts.len() != groups {
            return Err(Error::GroupSpec(format!(
                "duplication lists {} counts for {groups} groups",
                self.counts.len()
            )));
        }
        if self.counts.iter().any(|&c| c == 0) {
            return Err(Error::GroupSpec("every duplication count must be at least 1".into()));
        }
        let required = self.qubit_demand(qubits_per_group);
        match budget {
            Some(available) if required > available => Err(Error::QubitBudget { required, available }),
            _ => Ok(()),
        }
    }
}

/// One group copy placed on a contiguous qubit range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitSpan {
    pub group: usize,
    pub copy: usize,
    pub start: usize,
    pub len: usize,
}

impl QubitSpan {
    pub fn qubits(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderLayout {
    /// `(width, height)` of the source grid.
    pub shape: (usize, usize),
    /// Per group, source cells `(x, y)` in row-major window order.
    pub group_cells: Vec<Vec<(usize, usize)>>,
    /// Group-major list of copy spans.
    pub qubit_spans: Vec<QubitSpan>,
    pub total_qubits: usize,
}

impl EncoderLayout {
    pub fn group_count(&self) -> usize {
        self.group_cells.len()
    }

    pub fn copies(&self, group: usize) -> usize {
        self.qubit_spans.iter().filter(|s| s.group == group).count()
    }
}

pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

/// Row-major sliding windows with one copy per group.
pub fn partition_groups(shape: (usize, usize), f: GroupSpec) -> Result<EncoderLayout> {
    let g = f.group_count(shape)?;
    layout_with_copies(shape, f, &DuplicationSpec::ones(g))
}

fn layout_with_copies(shape: (usize, usize), f: GroupSpec, dup: &DuplicationSpec) -> Result<EncoderLayout> {
    let g = f.group_count(shape)?;
    let q = f.qubits_per_group();
    dup.validate(g, q, None)?;
    let (width, height) = shape;
    let mut group_cells = Vec::with_capacity(g);
    for y0 in (0..=height - f.h).step_by(f.s) {
        for x0 in (0..=width - f.w).step_by(f.s) {
            let cells = (0..f.h)
                .flat_map(|dy| (0..f.w).map(move |dx| (x0 + dx, y0 + dy)))
                .collect();
            group_cells.push(cells);
        }
    }
    let mut qubit_spans = Vec::new();
    let mut next = 0;
    for (group, &c) in dup.counts.iter().enumerate() {
        for copy in 0..c {
            qubit_spans.push(QubitSpan {
                group,
                copy,
                start: next,
                len: q,
            });
            next += q;
        }
    }
    Ok(EncoderLayout {
        shape,
        group_cells,
        qubit_spans,
        total_qubits: next,
    })
}

/// Uniformly-controlled RY tree preparing `values / ‖values‖` on `⌈log2 N⌉` qubits.
///
/// Values are zero-padded to a power of two. Qubit `n-1` is rotated first, then
/// each lower qubit conditioned on all higher ones.
pub fn amplitude_prep(values: &[f64]) -> Result<Circuit> {
    if values.is_empty() {
        return Err(Error::ZeroVector);
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidState(format!("amplitude input {v} must be finite and nonnegative")));
    }
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let n = ceil_log2(values.len());
    let mut amps = vec![0.0; 1 << n];
    for (a, v) in amps.iter_mut().zip(values) {
        *a = v / norm;
    }
    let mut circuit = Circuit::new(n);
    for level in 0..n {
        let target = n - 1 - level;
        let half = 1usize << target;
        let thetas: Vec<f64> = (0..1usize << level)
            .map(|b| {
                let block = &amps[b * 2 * half..(b + 1) * 2 * half];
                let lower = block[..half].iter().map(|a| a * a).sum::<f64>().sqrt();
                let upper = block[half..].iter().map(|a| a * a).sum::<f64>().sqrt();
                2.0 * upper.atan2(lower)
            })
            .collect();
        if thetas.iter().all(|t| t.abs() < 1e-15) {
            continue;
        }
        uniformly_controlled_ry(&mut circuit, target, &thetas);
    }
    Ok(circuit)
}

fn gray(i: usize) -> usize {
    i ^ (i >> 1)
}

/// Appends RY(θ_b) on `target` controlled by the pattern `b` of qubits above it
/// (bit `j` of `b` is qubit `target + 1 + j`), as alternating RY and CX gates.
fn uniformly_controlled_ry(circuit: &mut Circuit, target: usize, thetas: &[f64]) {
    let k = ceil_log2(thetas.len());
    if k == 0 {
        circuit.push(GateOp::rotation(GateKind::Ry, target, Angle::Fixed(thetas[0])));
        return;
    }
    let size = thetas.len();
    for i in 0..size {
        let phi = thetas
            .iter()
            .enumerate()
            .map(|(b, t)| {
                if (b & gray(i)).count_ones() % 2 == 0 {
                    *t
                } else {
                    -t
                }
            })
            .sum::<f64>()
            / size as f64;
        circuit.push(GateOp::rotation(GateKind::Ry, target, Angle::Fixed(phi)));
        let flip = gray(i) ^ gray((i + 1) % size);
        let control = target + 1 + flip.trailing_zeros() as usize;
        circuit.push(GateOp::cx(control, target));
    }
}

/// Rotation layout `"<qubits>x<rounds>_r<axes>"`, e.g. `4x4_ryzxy` or `8x2_ryz`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleScheme {
    pub n_qubits: usize,
    pub axes: Vec<GateKind>,
}

impl AngleScheme {
    pub fn parse(name: &str) -> Result<Self> {
        let bad = || Error::Config(format!("angle scheme `{name}` is not of the form `<q>x<rounds>_r<axes>`"));
        let (dims, axes) = name.split_once('_').ok_or_else(bad)?;
        let (q, rounds) = dims.split_once('x').ok_or_else(bad)?;
        let n_qubits: usize = q.parse().map_err(|_| bad())?;
        let rounds: usize = rounds.parse().map_err(|_| bad())?;
        let axes = axes
            .strip_prefix('r')
            .ok_or_else(bad)?
            .chars()
            .map(|c| match c {
                'x' => Ok(GateKind::Rx),
                'y' => Ok(GateKind::Ry),
                'z' => Ok(GateKind::Rz),
                _ => Err(bad()),
            })
            .collect::<Result<Vec<_>>>()?;
        if n_qubits == 0 || axes.len() != rounds {
            return Err(bad());
        }
        Ok(Self { n_qubits, axes })
    }

    pub fn capacity(&self) -> usize {
        self.n_qubits * self.axes.len()
    }
}

/// Value `j` becomes a rotation about `axes[j / k]` on qubit `j % k`.
pub fn angle_encode(values: &[f64], scheme: &AngleScheme) -> Result<Circuit> {
    if values.len() > scheme.capacity() {
        return Err(Error::LengthMismatch {
            expected: scheme.capacity(),
            got: values.len(),
        });
    }
    let k = scheme.n_qubits;
    let mut circuit = Circuit::new(k);
    for (j, &v) in values.iter().enumerate() {
        circuit.push(GateOp::rotation(scheme.axes[j / k], j % k, Angle::Fixed(v)));
    }
    Ok(circuit)
}

/// Gates preparing one group's normalized values on qubits `start..start + q`.
fn group_ops(values: &[f64], q: usize, start: usize) -> Result<Vec<GateOp>> {
    if values.len() == 1 {
        let v = values[0].clamp(0.0, 1.0);
        return Ok(vec![GateOp::rotation(GateKind::Ry, start, Angle::Fixed(2.0 * v.asin()))]);
    }
    if values.iter().all(|v| *v == 0.0) {
        return Ok(Vec::new());
    }
    let prep = amplitude_prep(values)?;
    debug_assert!(prep.n_qubits <= q);
    Ok(prep
        .ops
        .into_iter()
        .map(|mut op| {
            op.qubits.iter_mut().for_each(|x| *x += start);
            op
        })
        .collect())
}

/// Encodes `data` (row-major, `shape = (width, height)`) group by group, preparing
/// `c_i` identical copies of each normalized group vector.
pub fn build_st_encoder(
    data: &[f64],
    shape: (usize, usize),
    f: GroupSpec,
    dup: &DuplicationSpec,
    budget: Option<usize>,
) -> Result<(Circuit, EncoderLayout)> {
    if data.len() != shape.0 * shape.1 {
        return Err(Error::LengthMismatch {
            expected: shape.0 * shape.1,
            got: data.len(),
        });
    }
    let g = f.group_count(shape)?;
    dup.validate(g, f.qubits_per_group(), budget)?;
    let layout = layout_with_copies(shape, f, dup)?;
    let mut circuit = Circuit::new(layout.total_qubits);
    let mut per_group = Vec::with_capacity(g);
    for cells in &layout.group_cells {
        let values: Vec<f64> = cells.iter().map(|&(x, y)| data[y * shape.0 + x].max(0.0)).collect();
        per_group.push(group_ops(&values, f.qubits_per_group(), 0)?);
    }
    for span in &layout.qubit_spans {
        for op in &per_group[span.group] {
            let mut op = op.clone();
            op.qubits.iter_mut().for_each(|x| *x += span.start);
            circuit.push(op);
        }
    }
    Ok((circuit, layout))
}

/// `copies` qubits each prepared as `RZ(φ)·RY(θ)|0⟩`, a point on the Bloch sphere.
pub fn bloch_encoder(theta: f64, phi: f64, copies: usize) -> Result<(Circuit, EncoderLayout)> {
    if copies == 0 {
        return Err(Error::GroupSpec("at least one copy is required".into()));
    }
    let layout = layout_with_copies((1, 1), GroupSpec::new(1, 1, 1), &DuplicationSpec::new(vec![copies]))?;
    let mut circuit = Circuit::new(copies);
    for q in 0..copies {
        circuit.push(GateOp::rotation(GateKind::Ry, q, Angle::Fixed(theta)));
        circuit.push(GateOp::rotation(GateKind::Rz, q, Angle::Fixed(phi)));
    }
    Ok((circuit, layout))
}

/// Serializable description of an input encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EncoderSpec {
    /// Grouped amplitude encoding of a `width x height` grid.
    Spatial {
        shape: (usize, usize),
        group: GroupSpec,
        duplication: DuplicationSpec,
    },
    /// Plain amplitude encoding of the whole input.
    Amplitude { len: usize },
    /// Rotation-angle encoding, e.g. `4x4_ryzxy`.
    Angle { scheme: String },
    /// Features `(θ, φ)` prepared on `copies` qubits.
    Bloch { copies: usize },
}

impl EncoderSpec {
    pub fn n_features(&self) -> Result<usize> {
        Ok(match self {
            EncoderSpec::Spatial { shape, .. } => shape.0 * shape.1,
            EncoderSpec::Amplitude { len } => *len,
            EncoderSpec::Angle { scheme } => AngleScheme::parse(scheme)?.capacity(),
            EncoderSpec::Bloch { .. } => 2,
        })
    }

    pub fn n_qubits(&self) -> Result<usize> {
        Ok(self.layout()?.total_qubits)
    }

    /// Layout of the encoded register; angle encoding reports one span per qubit.
    pub fn layout(&self) -> Result<EncoderLayout> {
        match self {
            EncoderSpec::Spatial {
                shape,
                group,
                duplication,
            } => layout_with_copies(*shape, *group, duplication),
            EncoderSpec::Amplitude { len } => {
                let q = ceil_log2(*len).max(1);
                Ok(EncoderLayout {
                    shape: (*len, 1),
                    group_cells: vec![(0..*len).map(|x| (x, 0)).collect()],
                    qubit_spans: vec![QubitSpan {
                        group: 0,
                        copy: 0,
                        start: 0,
                        len: q,
                    }],
                    total_qubits: q,
                })
            }
            EncoderSpec::Angle { scheme } => {
                let scheme = AngleScheme::parse(scheme)?;
                Ok(EncoderLayout {
                    shape: (scheme.capacity(), 1),
                    group_cells: (0..scheme.n_qubits)
                        .map(|q| (q..scheme.capacity()).step_by(scheme.n_qubits).map(|x| (x, 0)).collect())
                        .collect(),
                    qubit_spans: (0..scheme.n_qubits)
                        .map(|q| QubitSpan {
                            group: q,
                            copy: 0,
                            start: q,
                            len: 1,
                        })
                        .collect(),
                    total_qubits: scheme.n_qubits,
                })
            }
            EncoderSpec::Bloch { copies } => Ok(bloch_encoder(0.0, 0.0, *copies)?.1),
        }
    }

    /// Encoding circuit for one feature vector.
    pub fn encode(&self, features: &[f64]) -> Result<Circuit> {
        let expected = self.n_features()?;
        if features.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: features.len(),
            });
        }
        match self {
            EncoderSpec::Spatial {
                shape,
                group,
                duplication,
            } => Ok(build_st_encoder(features, *shape, *group, duplication, None)?.0),
            EncoderSpec::Amplitude { len } => {
                let q = ceil_log2(*len).max(1);
                let mut circuit = Circuit::new(q);
                let clamped: Vec<f64> = features.iter().map(|v| v.max(0.0)).collect();
                circuit.extend(group_ops(&clamped, q, 0)?);
                Ok(circuit)
            }
            EncoderSpec::Angle { scheme } => angle_encode(features, &AngleScheme::parse(scheme)?),
            EncoderSpec::Bloch { copies } => Ok(bloch_encoder(features[0], features[1], *copies)?.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_circuit, StateVector};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn amps(c: &Circuit) -> Vec<f64> {
        run_circuit(c, &[], None)
            .unwrap()
            .amplitudes()
            .iter()
            .map(|a| {
                assert!(a.im.abs() < 1e-12);
                a.re
            })
            .collect()
    }

    #[test]
    fn group_counts_for_4x4() {
        let l = partition_groups((4, 4), GroupSpec::new(2, 2, 2)).unwrap();
        assert_eq!(l.group_count(), 4);
        assert_eq!(l.total_qubits, 8);
        assert!(l.qubit_spans.iter().all(|s| s.len == 2));
        assert_eq!(l.group_cells[1], vec![(2, 0), (3, 0), (2, 1), (3, 1)]);

        let l = partition_groups((4, 4), GroupSpec::new(4, 4, 1)).unwrap();
        assert_eq!((l.group_count(), l.total_qubits), (1, 4));

        let l = partition_groups((4, 4), GroupSpec::new(1, 1, 1)).unwrap();
        assert_eq!((l.group_count(), l.total_qubits), (16, 16));
    }

    #[test]
    fn overlapping_and_invalid_groups() {
        assert_eq!(GroupSpec::new(2, 2, 1).group_count((4, 4)).unwrap(), 9);
        assert!(partition_groups((4, 4), GroupSpec::new(5, 1, 1)).is_err());
        assert!(partition_groups((4, 4), GroupSpec::new(2, 2, 0)).is_err());
    }

    #[test]
    fn amplitude_prep_examples() {
        let c = amplitude_prep(&[0.6, 0.8]).unwrap();
        assert_eq!(c.n_qubits, 1);
        assert_eq!(c.ops.len(), 1);
        assert_abs_diff_eq!(c.ops[0].angle.unwrap().resolve(&[]).unwrap(), 2.0 * 0.8f64.atan2(0.6));
        let a = amps(&c);
        assert_abs_diff_eq!(a[0], 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 0.8, epsilon = 1e-12);

        assert!(amplitude_prep(&[1.0, 0.0, 0.0, 0.0]).unwrap().ops.is_empty());
        for a in amps(&amplitude_prep(&[1.0; 4]).unwrap()) {
            assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        }
        assert!(matches!(amplitude_prep(&[0.0, 0.0]), Err(Error::ZeroVector)));
    }

    #[test]
    fn amplitude_prep_pads_to_power_of_two() {
        let c = amplitude_prep(&[1.0, 2.0, 2.0]).unwrap();
        let a = amps(&c);
        let expect = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0, 0.0];
        for (x, y) in a.iter().zip(expect) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn angle_schemes() {
        let s = AngleScheme::parse("4x4_ryzxy").unwrap();
        assert_eq!(s.axes, vec![GateKind::Ry, GateKind::Rz, GateKind::Rx, GateKind::Ry]);
        let c = angle_encode(&[0.1; 16], &s).unwrap();
        assert_eq!(c.n_qubits, 4);
        assert_eq!(c.ops[4].kind, GateKind::Rz);
        assert_eq!(c.ops[4].qubits, vec![0]);

        let s = AngleScheme::parse("8x2_ryz").unwrap();
        let c = angle_encode(&[0.1; 16], &s).unwrap();
        assert_eq!(c.n_qubits, 8);
        assert_eq!(c.count_kind(GateKind::Ry), 8);
        assert_eq!(c.count_kind(GateKind::Rz), 8);
        assert!(angle_encode(&[0.0; 17], &s).is_err());

        let one = AngleScheme::parse("1x1_ry").unwrap();
        let a = amps(&angle_encode(&[0.9], &one).unwrap());
        assert_abs_diff_eq!(a[0], 0.45f64.cos(), epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 0.45f64.sin(), epsilon = 1e-12);
        assert!(AngleScheme::parse("4x4_ryz").is_err());
    }

    #[test]
    fn duplicated_pair_gives_products() {
        let (c, layout) = build_st_encoder(
            &[0.6, 0.8],
            (2, 1),
            GroupSpec::new(2, 1, 1),
            &DuplicationSpec::new(vec![2]),
            None,
        )
        .unwrap();
        assert_eq!(layout.total_qubits, 2);
        let a = amps(&c);
        for (x, y) in a.iter().zip([0.36, 0.48, 0.48, 0.64]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-12);
        }
    }

    #[test]
    fn triple_copy_cube() {
        let (a, b) = (0.28, 0.96);
        let (c, _) = build_st_encoder(&[a, b], (2, 1), GroupSpec::new(2, 1, 1), &DuplicationSpec::new(vec![3]), None)
            .unwrap();
        assert_abs_diff_eq!(amps(&c)[7], b * b * b, epsilon = 1e-10);
    }

    #[test]
    fn budget_is_enforced() {
        let err = build_st_encoder(
            &[0.5; 16],
            (4, 4),
            GroupSpec::new(2, 2, 2),
            &DuplicationSpec::uniform(4, 2),
            Some(10),
        )
        .unwrap_err();
        assert!(matches!(err, Error::QubitBudget { required: 16, available: 10 }));
    }

    #[test]
    fn single_cells_use_one_ry() {
        let data: Vec<f64> = (0..4).map(|i| i as f64 / 4.0).collect();
        let (c, layout) =
            build_st_encoder(&data, (2, 2), GroupSpec::new(1, 1, 1), &DuplicationSpec::ones(4), None).unwrap();
        assert_eq!(layout.total_qubits, 4);
        assert_eq!(c.ops.len(), 4);
        assert!(c.ops.iter().all(|op| op.kind == GateKind::Ry));
        let s = run_circuit(&c, &[], None).unwrap();
        let z = s.expectation_z(&[3]).unwrap()[0];
        assert_abs_diff_eq!(z, 1.0 - 2.0 * 0.75f64.powi(2), epsilon = 1e-12);
    }

    #[test]
    fn zero_group_encodes_ground_state() {
        let (c, _) =
            build_st_encoder(&[0.0; 4], (2, 2), GroupSpec::new(2, 2, 2), &DuplicationSpec::ones(1), None).unwrap();
        assert!(c.ops.is_empty());
    }

    #[test]
    fn bloch_equator() {
        let (c, _) = bloch_encoder(std::f64::consts::FRAC_PI_2, 0.0, 1).unwrap();
        let s = run_circuit(&c, &[], None).unwrap();
        let expect = StateVector::from_real(1, &[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap();
        for (a, b) in s.amplitudes().iter().zip(expect.amplitudes()) {
            assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn spec_feature_counts() {
        let spatial = EncoderSpec::Spatial {
            shape: (4, 4),
            group: GroupSpec::new(2, 2, 2),
            duplication: DuplicationSpec::ones(4),
        };
        assert_eq!(spatial.n_features().unwrap(), 16);
        assert_eq!(spatial.n_qubits().unwrap(), 8);
        assert_eq!(EncoderSpec::Amplitude { len: 16 }.n_qubits().unwrap(), 4);
        assert_eq!(EncoderSpec::Bloch { copies: 3 }.n_qubits().unwrap(), 3);
        assert!(spatial.encode(&[0.1; 15]).is_err());
    }
}
