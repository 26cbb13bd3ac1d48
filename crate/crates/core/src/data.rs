//! Synthetic Bloch-sphere datasets, IDX image ingestion, and dataset files.

use std::f64::consts::{PI, TAU};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Angular margin kept clear around every class boundary.
pub const BOUNDARY_GAP: f64 = 0.03 * PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DatasetId {
    L1,
    L2,
    N1,
    N2,
    N3,
    N4,
    N5,
    N6,
}

/// How a dataset places points on the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `φ ∈ {0, π}`: points on the great circle reached by RY alone.
    RyPlane,
    /// Whole-sphere points labelled by octant.
    Octant,
}

impl DatasetId {
    pub const ALL: [DatasetId; 8] = [
        DatasetId::L1,
        DatasetId::L2,
        DatasetId::N1,
        DatasetId::N2,
        DatasetId::N3,
        DatasetId::N4,
        DatasetId::N5,
        DatasetId::N6,
    ];
    pub const NONLINEAR: [DatasetId; 6] = [
        DatasetId::N1,
        DatasetId::N2,
        DatasetId::N3,
        DatasetId::N4,
        DatasetId::N5,
        DatasetId::N6,
    ];

    pub fn family(self) -> Family {
        match self {
            DatasetId::L1 | DatasetId::N1 | DatasetId::N3 | DatasetId::N5 => Family::RyPlane,
            _ => Family::Octant,
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, DatasetId::L1 | DatasetId::L2)
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetId::L1 => "L1",
            DatasetId::L2 => "L2",
            DatasetId::N1 => "N1",
            DatasetId::N2 => "N2",
            DatasetId::N3 => "N3",
            DatasetId::N4 => "N4",
            DatasetId::N5 => "N5",
            DatasetId::N6 => "N6",
        }
    }
}

impl FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownDataset(s.to_string()))
    }
}

impl std::fmt::Display for DatasetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochSample {
    pub theta: f64,
    pub phi: f64,
    pub label: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub id: DatasetId,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
}

impl DatasetSpec {
    pub fn new(id: DatasetId, seed: u64) -> Self {
        Self {
            id,
            n_train: 1600,
            n_test: 320,
            seed,
        }
    }

    pub fn with_sizes(self, n_train: usize, n_test: usize) -> Self {
        Self { n_train, n_test, ..self }
    }
}

/// Labelled feature vector consumed by the trainer and the classical baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Split {
    pub fn map_features(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Split {
        let map = |v: &Vec<Sample>| {
            v.iter()
                .map(|s| Sample {
                    features: f(&s.features),
                    label: s.label,
                })
                .collect()
        };
        Split {
            train: map(&self.train),
            test: map(&self.test),
        }
    }
}

struct ArcSet {
    split: f64,
    heavy_weight: f64,
}

/// Arc layout per RY-plane set: the split angle `t` and the weight of the `(t, π)` arcs.
fn arcs(id: DatasetId) -> Option<ArcSet> {
    let (t, w) = match id {
        DatasetId::N1 => (0.5, 0.7),
        DatasetId::N3 => (0.4, 0.75),
        DatasetId::N5 => (0.6, 0.65),
        _ => return None,
    };
    Some(ArcSet {
        split: t * PI,
        heavy_weight: w,
    })
}

fn uniform_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo + BOUNDARY_GAP / 2.0..hi - BOUNDARY_GAP / 2.0)
}

/// Class 0 holds `θ ∈ (0, t)` at `φ = 0` and `θ ∈ (t, π)` at `φ = π`; class 1
/// the mirror image. The `(t, π)` arcs are drawn with probability `w`.
fn ry_plane_sample(rng: &mut ChaCha8Rng, arcs: &ArcSet, label: usize) -> BlochSample {
    let far = rng.gen::<f64>() < arcs.heavy_weight;
    let (lo, hi) = if far { (arcs.split, PI) } else { (0.0, arcs.split) };
    let front = far == (label == 1);
    BlochSample {
        theta: uniform_in(rng, lo, hi),
        phi: if front { 0.0 } else { PI },
        label,
    }
}

type OctantRule = fn([f64; 3]) -> usize;

fn octant_rule(id: DatasetId) -> Option<(OctantRule, f64, fn([f64; 3], usize) -> bool)> {
    fn none(_: [f64; 3], _: usize) -> bool {
        false
    }
    match id {
        DatasetId::L2 => Some((|s| usize::from(s[2] < 0.0), 0.5, none)),
        DatasetId::N2 => Some((|s| usize::from(s[0] * s[1] < 0.0), 0.7, |s, label| {
            (s[0] > 0.0) == (label == 0)
        })),
        DatasetId::N4 => Some((|s| usize::from(s[0] * s[2] < 0.0), 0.65, |s, _| s[2] < 0.0)),
        DatasetId::N6 => Some((|s| usize::from(s[1] * s[2] < 0.0), 0.5, none)),
        _ => None,
    }
}

fn octant_sample(
    rng: &mut ChaCha8Rng,
    rule: OctantRule,
    weight: f64,
    heavy: fn([f64; 3], usize) -> bool,
    label: usize,
) -> BlochSample {
    let margin = (BOUNDARY_GAP / 2.0).sin();
    loop {
        let z: f64 = rng.gen_range(-1.0..1.0);
        let azimuth: f64 = rng.gen_range(0.0..TAU);
        let r = (1.0 - z * z).sqrt();
        let v = [r * azimuth.cos(), r * azimuth.sin(), z];
        if v.iter().any(|c| c.abs() < margin) || rule(v) != label {
            continue;
        }
        let p = if heavy(v, label) { weight } else { 1.0 - weight };
        if rng.gen::<f64>() > p / weight.max(1.0 - weight) {
            continue;
        }
        return BlochSample {
            theta: z.acos(),
            phi: v[1].atan2(v[0]).rem_euclid(TAU),
            label,
        };
    }
}

/// Generates `n_train + n_test` samples with alternating labels, then shuffles.
pub fn gen_bloch(spec: &DatasetSpec) -> Result<Vec<BlochSample>> {
    if spec.n_train == 0 || spec.n_test == 0 {
        return Err(Error::Dataset("train and test sizes must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_train + spec.n_test;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % 2;
        let sample = if spec.id == DatasetId::L1 {
            BlochSample {
                theta: uniform_in(&mut rng, 0.0, PI / 2.0) + label as f64 * PI / 2.0,
                phi: if rng.gen::<bool>() { 0.0 } else { PI },
                label,
            }
        } else if let Some(a) = arcs(spec.id) {
            ry_plane_sample(&mut rng, &a, label)
        } else {
            let (rule, weight, heavy) = octant_rule(spec.id).expect("every id has a generator");
            octant_sample(&mut rng, rule, weight, heavy, label)
        };
        out.push(sample);
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// Train/test split with raw `(θ, φ)` features for quantum encoders.
pub fn bloch_split(spec: &DatasetSpec) -> Result<Split> {
    let samples = gen_bloch(spec)?;
    let to_sample = |s: &BlochSample| Sample {
        features: vec![s.theta, s.phi],
        label: s.label,
    };
    Ok(Split {
        train: samples[..spec.n_train].iter().map(to_sample).collect(),
        test: samples[spec.n_train..].iter().map(to_sample).collect(),
    })
}

/// Amplitudes of `U3(θ, φ, 0)|0⟩` as real features: `(a0, Re a1)` for the RY
/// plane, `(Re a0, Im a0, Re a1, Im a1)` for the whole sphere.
pub fn encode_bloch(sample: &BlochSample, family: Family) -> Vec<f64> {
    encode_angles(sample.theta, sample.phi, family)
}

pub fn encode_angles(theta: f64, phi: f64, family: Family) -> Vec<f64> {
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    match family {
        Family::RyPlane => vec![c, phi.cos() * s],
        Family::Octant => vec![c, 0.0, phi.cos() * s, phi.sin() * s],
    }
}

/// Same split with amplitude features for classical models.
pub fn classical_features(split: &Split, family: Family) -> Split {
    split.map_features(|f| encode_angles(f[0], f[1], family))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSample {
    pub width: usize,
    pub height: usize,
    /// Row-major intensities in `[0, 1]`.
    pub pixels: Vec<f64>,
    pub label: usize,
}

impl ImageSample {
    pub fn to_sample(&self) -> Sample {
        Sample {
            features: self.pixels.clone(),
            label: self.label,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageSplit {
    pub classes: Vec<u8>,
    pub train: Vec<ImageSample>,
    pub test: Vec<ImageSample>,
}

impl ImageSplit {
    pub fn to_split(&self) -> Split {
        Split {
            train: self.train.iter().map(ImageSample::to_sample).collect(),
            test: self.test.iter().map(ImageSample::to_sample).collect(),
        }
    }
}

/// Raw IDX image tensor.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub count: usize,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u8>,
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    BufReader::new(File::open(path)?).read_to_end(&mut buf)?;
    Ok(buf)
}

fn be_u32(bytes: &[u8], at: usize) -> Result<usize> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]) as usize)
        .ok_or_else(|| Error::Dataset("truncated IDX header".into()))
}

pub fn read_idx_images(path: &Path) -> Result<IdxImages> {
    let bytes = read_all(path)?;
    if be_u32(&bytes, 0)? != 0x0803 {
        return Err(Error::Dataset(format!("{} is not an IDX image file", path.display())));
    }
    let (count, rows, cols) = (be_u32(&bytes, 4)?, be_u32(&bytes, 8)?, be_u32(&bytes, 12)?);
    let data = bytes[16..].to_vec();
    if data.len() != count * rows * cols {
        return Err(Error::Dataset(format!(
            "{} holds {} pixel bytes, header promises {}",
            path.display(),
            data.len(),
            count * rows * cols
        )));
    }
    Ok(IdxImages { count, rows, cols, data })
}

pub fn read_idx_labels(path: &Path) -> Result<Vec<u8>> {
    let bytes = read_all(path)?;
    if be_u32(&bytes, 0)? != 0x0801 {
        return Err(Error::Dataset(format!("{} is not an IDX label file", path.display())));
    }
    let count = be_u32(&bytes, 4)?;
    let labels = bytes[8..].to_vec();
    if labels.len() != count {
        return Err(Error::Dataset(format!("{} is truncated", path.display())));
    }
    Ok(labels)
}

/// Writes an IDX image file (used for fixtures and tests).
pub fn write_idx_images(path: &Path, rows: usize, cols: usize, data: &[u8]) -> Result<()> {
    let count = data.len() / (rows * cols);
    let mut bytes = Vec::with_capacity(16 + data.len());
    for v in [0x0803u32, count as u32, rows as u32, cols as u32] {
        bytes.extend(v.to_be_bytes());
    }
    bytes.extend_from_slice(data);
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 + labels.len());
    for v in [0x0801u32, labels.len() as u32] {
        bytes.extend(v.to_be_bytes());
    }
    bytes.extend_from_slice(labels);
    std::fs::write(path, bytes)?;
    Ok(())
}

/// Non-overlapping block averaging of a `rows x cols` byte image, scaled to `[0, 1]`.
pub fn average_pool(pixels: &[u8], rows: usize, cols: usize, out: (usize, usize)) -> Result<Vec<f64>> {
    let (w, h) = out;
    if w == 0 || h == 0 || rows % h != 0 || cols % w != 0 {
        return Err(Error::Dataset(format!("cannot pool {cols}x{rows} evenly to {w}x{h}")));
    }
    let (bh, bw) = (rows / h, cols / w);
    let mut result = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            for r in y * bh..(y + 1) * bh {
                for c in x * bw..(x + 1) * bw {
                    sum += pixels[r * cols + c] as f64;
                }
            }
            result.push((sum / (bh * bw) as f64 / 255.0).clamp(0.0, 1.0));
        }
    }
    Ok(result)
}

/// Standard file names inside an MNIST-style directory.
pub fn idx_paths(dir: &Path) -> [PathBuf; 4] {
    [
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    ]
}

pub const TEST_IMAGES: usize = 200;

/// Loads the images of `classes` from an IDX directory, pools them to
/// `downsample_to = (width, height)`, and keeps the first 200 matching test
/// images. Labels become class positions in `classes`.
pub fn ingest_images(dir: &Path, classes: &[u8], downsample_to: (usize, usize)) -> Result<ImageSplit> {
    let [tr_img, tr_lab, te_img, te_lab] = idx_paths(dir);
    let load = |img: &Path, lab: &Path, limit: Option<usize>| -> Result<Vec<ImageSample>> {
        let images = read_idx_images(img)?;
        let labels = read_idx_labels(lab)?;
        if labels.len() != images.count {
            return Err(Error::Dataset(format!(
                "{} images but {} labels",
                images.count,
                labels.len()
            )));
        }
        let size = images.rows * images.cols;
        let mut out = Vec::new();
        for (i, &digit) in labels.iter().enumerate() {
            if limit.is_some_and(|l| out.len() >= l) {
                break;
            }
            if let Some(label) = classes.iter().position(|&c| c == digit) {
                let pixels = average_pool(&images.data[i * size..(i + 1) * size], images.rows, images.cols, downsample_to)?;
                out.push(ImageSample {
                    width: downsample_to.0,
                    height: downsample_to.1,
                    pixels,
                    label,
                });
            }
        }
        Ok(out)
    };
    let train = load(&tr_img, &tr_lab, None)?;
    let test = load(&te_img, &te_lab, Some(TEST_IMAGES))?;
    if train.is_empty() || test.is_empty() {
        return Err(Error::Dataset(format!("no images with labels {classes:?}")));
    }
    Ok(ImageSplit {
        classes: classes.to_vec(),
        train,
        test,
    })
}

pub fn write_bloch_csv(path: &Path, samples: &[Sample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["theta", "phi", "label"])?;
    for s in samples {
        w.write_record([s.features[0].to_string(), s.features[1].to_string(), s.label.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `p0..p{k-1},label` rows.
pub fn write_feature_csv(path: &Path, samples: &[Sample], prefix: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    let width = samples.first().map_or(0, |s| s.features.len());
    let mut header: Vec<String> = (0..width).map(|i| format!("{prefix}{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for s in samples {
        let mut row: Vec<String> = s.features.iter().map(f64::to_string).collect();
        row.push(s.label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads any CSV whose last column is `label` and whose other columns are features.
pub fn read_samples_csv(path: &Path) -> Result<Vec<Sample>> {
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().last() != Some("label") {
        return Err(Error::Dataset(format!("{}: last column must be `label`", path.display())));
    }
    let mut out = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Dataset(format!("{}: bad number `{s}` on row {}", path.display(), row + 2)))
        };
        let n = record.len();
        let features = record.iter().take(n - 1).map(parse).collect::<Result<Vec<_>>>()?;
        let label = parse(&record[n - 1])? as usize;
        out.push(Sample { features, label });
    }
    Ok(out)
}

/// Provenance written next to generated dataset files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: String,
    pub id: String,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub family: Option<Family>,
    pub files: Vec<String>,
    pub columns: Vec<String>,
}

/// Writes `<id>_train.csv`, `<id>_test.csv` and `<id>_manifest.json` into `dir`.
pub fn write_bloch_dataset(dir: &Path, spec: &DatasetSpec) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let split = bloch_split(spec)?;
    let id = spec.id.name();
    let train = format!("{id}_train.csv");
    let test = format!("{id}_test.csv");
    write_bloch_csv(&dir.join(&train), &split.train)?;
    write_bloch_csv(&dir.join(&test), &split.test)?;
    let manifest = Manifest {
        kind: "bloch".into(),
        id: id.into(),
        seed: spec.seed,
        n_train: spec.n_train,
        n_test: spec.n_test,
        family: Some(spec.id.family()),
        files: vec![train, test],
        columns: vec!["theta".into(), "phi".into(), "label".into()],
    };
    std::fs::write(dir.join(format!("{id}_manifest.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Loads a dataset written by [`write_bloch_dataset`] or [`write_image_dataset`].
pub fn read_dataset(manifest_path: &Path) -> Result<(Manifest, Split)> {
    let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    if manifest.files.len() != 2 {
        return Err(Error::Dataset("manifest must list a train and a test file".into()));
    }
    let train = read_samples_csv(&dir.join(&manifest.files[0]))?;
    let test = read_samples_csv(&dir.join(&manifest.files[1]))?;
    Ok((manifest, Split { train, test }))
}

pub fn write_image_dataset(dir: &Path, name: &str, images: &ImageSplit, seed: u64) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let split = images.to_split();
    let train = format!("{name}_train.csv");
    let test = format!("{name}_test.csv");
    write_feature_csv(&dir.join(&train), &split.train, "p")?;
    write_feature_csv(&dir.join(&test), &split.test, "p")?;
    let width = split.train.first().map_or(0, |s| s.features.len());
    let mut columns: Vec<String> = (0..width).map(|i| format!("p{i}")).collect();
    columns.push("label".into());
    let manifest = Manifest {
        kind: "image".into(),
        id: name.into(),
        seed,
        n_train: split.train.len(),
        n_test: split.test.len(),
        family: None,
        files: vec![train, test],
        columns,
    };
    std::fs::write(dir.join(format!("{name}_manifest.json")), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Best accuracy of any rule `θ > τ` or `θ < τ`.
pub fn best_theta_threshold(samples: &[BlochSample]) -> f64 {
    let mut sorted: Vec<&BlochSample> = samples.iter().collect();
    sorted.sort_by(|a, b| a.theta.total_cmp(&b.theta));
    let n = sorted.len() as f64;
    let total_ones = sorted.iter().filter(|s| s.label == 1).count() as f64;
    let mut ones_below = 0.0;
    let mut best: f64 = total_ones.max(n - total_ones);
    for (i, s) in sorted.iter().enumerate() {
        if s.label == 1 {
            ones_below += 1.0;
        }
        let below = (i + 1) as f64;
        let zeros_below = below - ones_below;
        let ones_above = total_ones - ones_below;
        let zeros_above = (n - below) - ones_above;
        best = best.max(zeros_below + ones_above).max(ones_below + zeros_above);
    }
    best / n
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn parses_ids() {
        assert_eq!("n4".parse::<DatasetId>().unwrap(), DatasetId::N4);
        let err = "N7".parse::<DatasetId>().unwrap_err();
        assert!(err.to_string().contains("L1, L2, N1"));
    }

    #[test]
    fn poles_and_equator() {
        let s = |theta| BlochSample { theta, phi: 0.0, label: 0 };
        assert_eq!(encode_bloch(&s(0.0), Family::RyPlane), vec![1.0, 0.0]);
        let south = encode_bloch(&s(PI), Family::RyPlane);
        assert_abs_diff_eq!(south[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(south[1], 1.0, epsilon = 1e-12);
        let eq = encode_bloch(&s(PI / 2.0), Family::RyPlane);
        assert_abs_diff_eq!(eq[0], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(eq[1], std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_eq!(encode_bloch(&s(0.3), Family::Octant).len(), 4);
    }

    #[test]
    fn generation_is_balanced_and_in_range() {
        for id in DatasetId::ALL {
            let spec = DatasetSpec::new(id, 3).with_sizes(200, 41);
            let samples = gen_bloch(&spec).unwrap();
            assert_eq!(samples.len(), 241);
            let ones = samples.iter().filter(|s| s.label == 1).count() as i64;
            assert!((241 - 2 * ones).abs() <= 1, "{id}");
            for s in &samples {
                assert!((0.0..=PI).contains(&s.theta) && (0.0..TAU).contains(&s.phi), "{id}");
                if id.family() == Family::RyPlane {
                    assert!(s.phi == 0.0 || s.phi == PI);
                }
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DatasetSpec::new(DatasetId::N2, 9).with_sizes(50, 10);
        assert_eq!(gen_bloch(&spec).unwrap(), gen_bloch(&spec).unwrap());
        assert_ne!(gen_bloch(&spec).unwrap(), gen_bloch(&DatasetSpec { seed: 10, ..spec }).unwrap());
    }

    #[test]
    fn theta_threshold_certificates() {
        let l1 = gen_bloch(&DatasetSpec::new(DatasetId::L1, 1)).unwrap();
        assert_eq!(best_theta_threshold(&l1), 1.0);
        for id in [DatasetId::N1, DatasetId::N3, DatasetId::N5] {
            let s = gen_bloch(&DatasetSpec::new(id, 1)).unwrap();
            assert!(best_theta_threshold(&s) <= 0.75, "{id}");
        }
    }

    #[test]
    fn pooling_constant_image() {
        let out = average_pool(&[255u8; 28 * 28], 28, 28, (4, 4)).unwrap();
        assert_eq!(out, vec![1.0; 16]);
        assert!(average_pool(&[0u8; 25], 5, 5, (4, 4)).is_err());
    }

    #[test]
    fn pooling_averages_blocks() {
        let mut img = vec![0u8; 4 * 4];
        img[0] = 255;
        img[1] = 255;
        let out = average_pool(&img, 4, 4, (2, 2)).unwrap();
        assert_abs_diff_eq!(out[0], 0.5);
        assert_eq!(&out[1..], &[0.0, 0.0, 0.0]);
    }
}
