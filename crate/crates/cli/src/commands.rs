use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stvqc::ansatz::{AnsatzSpec, BlockKind, LayerSpec, TreeTopology};
use stvqc::baselines::{train_linear, train_quad_mlp, LinearConfig, MlpConfig};
use stvqc::compiler::{compile_swap_free, find_paths, metrics, rank_candidates, transpile, Candidate, CouplingGraph, Metrics};
use stvqc::data::{bloch_split, classical_features, ingest_images, read_dataset, DatasetId, DatasetSpec, Sample, Split};
use stvqc::encoder::{DuplicationSpec, EncoderSpec, GroupSpec};
use stvqc::search::{self, placed_spec, write_history_csv, write_jsonl, RewardRecord, SearchConfig, SearchSpace, SegmentMask};
use stvqc::sim::{from_qasm, to_qasm, Angle, Circuit, NoiseModel};
use stvqc::trainer::{evaluate, train, train_with_state, Checkpoint, EvalOptions, ModelSpec, TrainConfig, TrainReport};

use crate::*;

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(a) => gen_data(cli, a),
        Command::Train(a) => train_cmd(cli, a),
        Command::Search(a) => search_cmd(cli, a),
        Command::Compile(a) => compile_cmd(cli, a),
        Command::Eval(a) => eval_cmd(cli, a),
        Command::Report(a) => report_cmd(cli, a),
    }
}

/// Writes through a temporary sibling so a failed run leaves no partial file.
fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_file(path, serde_json::to_string_pretty(value)?.as_bytes())
}

fn out_dir(cli: &Cli) -> Result<&Path> {
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating output directory {}", cli.out.display()))?;
    Ok(&cli.out)
}

fn require(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} {} does not exist", path.display());
    }
    Ok(())
}

fn parse_dims(text: &str, n: usize, what: &str) -> Result<Vec<usize>> {
    let dims: Vec<usize> = text
        .split('x')
        .map(|t| t.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| anyhow!("{what} `{text}` is not of the form {}", vec!["N"; n].join("x")))?;
    if dims.len() != n {
        bail!("{what} `{text}` needs {n} sizes separated by `x`");
    }
    Ok(dims)
}

pub fn topology(name: &str) -> Result<CouplingGraph> {
    if let Some(n) = name.strip_prefix("line:") {
        let n: usize = n.parse().map_err(|_| anyhow!("`{name}`: expected line:N"))?;
        if n == 0 {
            bail!("`{name}`: a line needs at least one qubit");
        }
        return Ok(CouplingGraph::line(n));
    }
    CouplingGraph::load(name).with_context(|| format!("loading topology `{name}` (use lima, heavyhex27, line:N or a JSON file)"))
}

enum Input {
    /// `(θ, φ)` pairs.
    Bloch,
    /// Pooled images, row-major.
    Image { shape: (usize, usize), classes: usize },
}

struct Loaded {
    split: Split,
    input: Input,
}

fn load_data(args: &DataArgs) -> Result<Loaded> {
    require(&args.dataset, "dataset")?;
    if args.dataset.is_dir() {
        let pool = parse_dims(&args.pool, 2, "pool size")?;
        let images = ingest_images(&args.dataset, &args.digits, (pool[0], pool[1]))
            .with_context(|| format!("reading images from {}", args.dataset.display()))?;
        return Ok(Loaded {
            split: images.to_split(),
            input: Input::Image {
                shape: (pool[0], pool[1]),
                classes: args.digits.len(),
            },
        });
    }
    let (_, split) = read_dataset(&args.dataset).with_context(|| format!("reading dataset {}", args.dataset.display()))?;
    Ok(Loaded {
        split,
        input: Input::Bloch,
    })
}

impl Loaded {
    fn n_classes(&self) -> usize {
        match self.input {
            Input::Bloch => 2,
            Input::Image { classes, .. } => classes,
        }
    }

    fn width(&self) -> usize {
        self.split.train.first().map_or(0, |s| s.features.len())
    }
}

/// A design exported by `search`, retrainable with `train --model-file`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Design {
    pub spec: ModelSpec,
    pub train: TrainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub episode: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<RewardRecord>,
}

fn read_model_file(path: &Path) -> Result<Design> {
    require(path, "model file")?;
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("spec").is_some() {
        return serde_json::from_value(value).with_context(|| format!("{} is not a valid design", path.display()));
    }
    let spec: ModelSpec =
        serde_json::from_value(value).with_context(|| format!("{} is neither a design nor a model spec", path.display()))?;
    Ok(Design {
        spec,
        train: TrainConfig::default(),
        max_train: None,
        episode: None,
        record: None,
    })
}

fn model_from_flags(args: &ModelArgs, data: &Loaded) -> Result<ModelSpec> {
    let encoder = match args.encoder.unwrap_or(match data.input {
        Input::Bloch => EncoderChoice::Bloch,
        Input::Image { .. } => EncoderChoice::Spatial,
    }) {
        EncoderChoice::Bloch => EncoderSpec::Bloch { copies: args.copies },
        EncoderChoice::Amplitude => EncoderSpec::Amplitude { len: data.width() },
        EncoderChoice::Angle => EncoderSpec::Angle {
            scheme: args.scheme.clone(),
        },
        EncoderChoice::Spatial => {
            let Input::Image { shape, .. } = data.input else {
                bail!("the spatial encoder needs image data; use --encoder bloch for (θ, φ) sets");
            };
            let [w, h, s] = args.group[..] else {
                bail!("--group takes three sizes w,h,s");
            };
            let group = GroupSpec::new(w, h, s);
            let groups = group.group_count(shape)?;
            let duplication = match &args.dup {
                Some(d) => DuplicationSpec::new(d.clone()),
                None => DuplicationSpec::ones(groups),
            };
            EncoderSpec::Spatial {
                shape,
                group,
                duplication,
            }
        }
    };
    let kind = match args.block_kind {
        BlockChoice::Ring => BlockKind::Ring,
        BlockChoice::Chain => BlockKind::Chain,
    };
    let n_classes = data.n_classes();
    let ansatz = match args.ansatz {
        AnsatzChoice::Vqc => AnsatzSpec::Vqc {
            blocks: args.blocks,
            kind,
        },
        AnsatzChoice::Tree => {
            let repeats = match &args.layers {
                Some(l) => l.clone(),
                None => {
                    let n_qubits = encoder.n_qubits()?.max(n_classes);
                    let depth = TreeTopology::from_layout(&encoder.layout()?, n_qubits)?.depth();
                    let mut r = vec![1; depth];
                    r[depth - 1] = 2;
                    r
                }
            };
            AnsatzSpec::Tree {
                layers: LayerSpec::new(repeats),
                kind,
            }
        }
    };
    Ok(ModelSpec::new(encoder, ansatz, n_classes))
}

fn limited<'a>(samples: &'a [Sample], limit: Option<usize>) -> &'a [Sample] {
    &samples[..limit.map_or(samples.len(), |n| n.min(samples.len()))]
}

fn noise_options<'a>(args: &NoiseArgs, seed: u64, graph: Option<&'a CouplingGraph>) -> Result<EvalOptions<'a>> {
    Ok(EvalOptions {
        noise: Some(NoiseModel::new(args.p1, args.p2, args.p_ro, seed)?),
        graph,
        shots: args.shots,
    })
}

fn gen_data(cli: &Cli, args: &GenDataArgs) -> Result<()> {
    let id: DatasetId = args.id.parse()?;
    let spec = DatasetSpec::new(id, cli.seed).with_sizes(args.n_train, args.n_test);
    let dir = out_dir(cli)?;
    stvqc::data::write_bloch_dataset(dir, &spec)?;
    println!("{}", dir.join(format!("{id}_manifest.json")).display());
    Ok(())
}

fn train_cmd(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let (spec, mut config, max_train) = match &args.model.model_file {
        // A design keeps its own training settings so it retrains to the logged result.
        Some(path) => {
            let d = read_model_file(path)?;
            (d.spec, d.train, d.max_train)
        }
        None => (
            model_from_flags(&args.model, &data)?,
            TrainConfig {
                seed: cli.seed,
                ..TrainConfig::default()
            },
            None,
        ),
    };
    config.epochs = args.epochs.unwrap_or(config.epochs);
    config.batch_size = args.batch_size.unwrap_or(config.batch_size);
    config.lr = args.lr.unwrap_or(config.lr);

    let model = spec.build().context("building the model")?;
    let train_set = limited(&data.split.train, max_train);
    let (mut report, rng) = train_with_state(&model, train_set, &data.split.test, &config)?;
    if args.noise.noisy {
        let graph = args.noise.topology.as_deref().map(topology).transpose()?;
        let options = noise_options(&args.noise, config.seed, graph.as_ref())?;
        let eval = evaluate(&model, &report.params, limited(&data.split.test, args.noise.limit), &options)?;
        report.noisy_test_accuracy = Some(eval.accuracy);
        report.deviation = Some(eval.deviation);
    }
    let dir = out_dir(cli)?;
    let checkpoint = Checkpoint {
        spec,
        params: report.params.clone(),
        config,
        rng,
    };
    checkpoint.save(&dir.join("checkpoint.json"))?;
    write_json(&dir.join("train_report.json"), &report)?;
    println!("{}", summary(&report));
    Ok(())
}

fn summary(report: &TrainReport) -> String {
    let mut s = format!(
        "test accuracy {:.4}, final loss {:.4}, {} params",
        report.test_accuracy,
        report.final_loss(),
        report.n_params
    );
    if let (Some(acc), Some(dev)) = (report.noisy_test_accuracy, report.deviation) {
        s.push_str(&format!(", noisy accuracy {acc:.4}, deviation {dev:.5}"));
    }
    s
}

#[derive(Serialize)]
struct EvalOutput {
    samples: usize,
    accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    noisy_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    deviation: Option<f64>,
}

fn eval_cmd(cli: &Cli, args: &EvalArgs) -> Result<()> {
    require(&args.checkpoint, "checkpoint")?;
    let checkpoint = Checkpoint::load(&args.checkpoint).with_context(|| format!("reading {}", args.checkpoint.display()))?;
    let data = load_data(&args.data)?;
    let model = checkpoint.spec.build()?;
    let samples = limited(&data.split.test, args.noise.limit);
    let ideal = evaluate(&model, &checkpoint.params, samples, &EvalOptions::default())?;
    let mut out = EvalOutput {
        samples: samples.len(),
        accuracy: ideal.accuracy,
        noisy_accuracy: None,
        deviation: None,
    };
    if args.noise.noisy {
        let graph = args.noise.topology.as_deref().map(topology).transpose()?;
        let noisy = evaluate(&model, &checkpoint.params, samples, &noise_options(&args.noise, cli.seed, graph.as_ref())?)?;
        out.noisy_accuracy = Some(noisy.accuracy);
        out.deviation = Some(noisy.deviation);
    }
    write_json(&out_dir(cli)?.join("eval.json"), &out)?;
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

fn parse_mask(segments: &[String]) -> Result<SegmentMask> {
    let mut mask = SegmentMask {
        spatial: false,
        duplication: false,
        layer: false,
        physical: false,
    };
    for s in segments {
        match s.trim() {
            "spatial" => mask.spatial = true,
            "duplication" | "nonlinearity" => mask.duplication = true,
            "layer" | "layers" => mask.layer = true,
            "physical" | "placement" => mask.physical = true,
            other => bail!("unknown segment `{other}` (valid: spatial, duplication, layer, physical)"),
        }
    }
    Ok(mask)
}

#[derive(Serialize)]
struct SearchSummary {
    strategy: &'static str,
    episodes: usize,
    best_episode: usize,
    best_reward: f64,
    running_best: Vec<f64>,
}

fn search_cmd(cli: &Cli, args: &SearchArgs) -> Result<()> {
    let data = load_data(&args.data)?;
    let graph = topology(&args.topology)?;
    let copies: Vec<usize> = (1..=args.max_copies.max(1)).collect();
    let mut space = match data.input {
        Input::Bloch => SearchSpace::bloch(graph, args.max_copies, args.layer_choices.clone(), args.k)?,
        Input::Image { shape, classes } => {
            let windows = args
                .windows
                .iter()
                .map(|w| parse_dims(w, 3, "window").map(|d| GroupSpec::new(d[0], d[1], d[2])))
                .collect::<Result<Vec<_>>>()?;
            let mut space = SearchSpace::grid(shape, windows, copies, args.layer_choices.clone(), graph, args.k)?;
            space.n_classes = classes;
            space.with_mask(search::select_optimizers(search::DataKind::LinearImage, shape))
        }
    };
    if let Some(segments) = &args.segments {
        space = space.with_mask(parse_mask(segments)?);
        space.validate()?;
    }
    let config = SearchConfig {
        episodes: args.episodes,
        rho: args.rho,
        train: TrainConfig {
            epochs: args.epochs,
            seed: cli.seed,
            ..TrainConfig::default()
        },
        noise: if args.ideal {
            None
        } else {
            Some(NoiseModel::new(0.001, 0.01, 0.02, cli.seed)?)
        },
        shots: args.shots,
        max_train: args.max_train,
        max_val: args.max_val,
        seed: cli.seed,
        ..SearchConfig::default()
    };
    let result = if args.random {
        search::random_search(&space, &data.split, &config)?
    } else {
        search::search(&space, &data.split, &config)?
    };

    let dir = out_dir(cli)?;
    write_history_csv(&dir.join("history.csv"), &result.history)?;
    write_jsonl(&dir.join("history.jsonl"), &result.history)?;
    let best = &result.best;
    match placed_spec(&space, &best.sample.decoded) {
        Ok(spec) => {
            let design = Design {
                spec,
                train: config.train,
                max_train: config.max_train,
                episode: Some(best.episode),
                record: Some(best.record.clone()),
            };
            write_json(&dir.join("best.json"), &design)?;
        }
        Err(e) => eprintln!("warning: no feasible design found ({e}); best.json not written"),
    }
    let summary = SearchSummary {
        strategy: if args.random { "random" } else { "controller" },
        episodes: result.history.len(),
        best_episode: best.episode,
        best_reward: result.best_reward(),
        running_best: search::running_best(&result.history),
    };
    write_json(&dir.join("search.json"), &summary)?;
    println!(
        "best reward {:.4} at episode {} (validation accuracy {:.4}, {} qubits)",
        summary.best_reward, best.episode, best.record.acc, best.record.n_qubits
    );
    Ok(())
}

/// Turns fixed controlled-rotation angles into parameters so the swap-free
/// rewrite may re-route them; returns the circuit and the angle values.
fn lift_controlled_angles(circuit: &Circuit) -> (Circuit, Vec<f64>) {
    let mut out = circuit.clone();
    let mut values = Vec::new();
    for op in &mut out.ops {
        if let (true, Some(Angle::Fixed(v))) = (op.kind.is_controlled_rotation(), op.angle) {
            op.angle = Some(Angle::param(values.len()));
            values.push(v);
        }
    }
    out.n_params = values.len();
    (out, values)
}

#[derive(Serialize)]
struct CompileOutput {
    #[serde(flatten)]
    metrics: Metrics,
    strategy: String,
    mapping: Vec<usize>,
    final_mapping: Vec<usize>,
}

fn compile_cmd(cli: &Cli, args: &CompileArgs) -> Result<()> {
    require(&args.circuit, "circuit file")?;
    let text = std::fs::read_to_string(&args.circuit)?;
    let circuit = from_qasm(&text).with_context(|| format!("parsing {}", args.circuit.display()))?;
    let graph = topology(&args.topology)?;
    let n = circuit.n_qubits;
    if n > graph.n_phys {
        bail!("circuit uses {n} qubits but the device has {}", graph.n_phys);
    }
    let (compiled, params) = match args.strategy {
        Strategy::Naive => {
            let mapping = args.mapping.clone().unwrap_or_else(|| (0..n).collect());
            (transpile(&circuit, &graph, &mapping)?, Vec::new())
        }
        Strategy::SwapFree => {
            let paths: Vec<Candidate> = find_paths(&graph, n).into_iter().map(Candidate::Path).collect();
            let candidate = rank_candidates(&paths, 1)
                .into_iter()
                .next()
                .ok_or_else(|| anyhow!("the device has no {n}-qubit path"))?;
            let (lifted, mut values) = lift_controlled_angles(&circuit);
            let compiled = compile_swap_free(&lifted, &graph, &candidate)?;
            // Chain gates added by the rewrite start at angle zero.
            values.resize(compiled.circuit.n_params.max(values.len()), 0.0);
            (compiled, values)
        }
    };
    let dir = out_dir(cli)?;
    write_file(&dir.join("compiled.qasm"), to_qasm(&compiled.circuit, &params)?.as_bytes())?;
    let out = CompileOutput {
        metrics: metrics(&compiled),
        strategy: format!("{:?}", args.strategy).to_lowercase(),
        mapping: compiled.mapping.clone(),
        final_mapping: compiled.final_mapping.clone(),
    };
    write_json(&dir.join("metrics.json"), &out)?;
    println!("{}", serde_json::to_string(&out)?);
    Ok(())
}

#[derive(Serialize, Deserialize, Clone, Copy)]
struct ReportRow {
    seed: u64,
    linear: f64,
    mlp: f64,
    vqc: f64,
    st_vqc: f64,
}

fn report_row(id: DatasetId, seed: u64, args: &ReportArgs) -> Result<ReportRow> {
    let split = bloch_split(&DatasetSpec::new(id, seed).with_sizes(args.n_train, args.n_test))?;
    let features = classical_features(&split, id.family());
    let config = TrainConfig {
        epochs: args.epochs,
        seed,
        ..TrainConfig::default()
    };
    let quantum = |spec: ModelSpec| -> Result<f64> {
        Ok(train(&spec.build()?, &split.train, &split.test, &config)?.test_accuracy)
    };
    let kind = BlockKind::Ring;
    Ok(ReportRow {
        seed,
        linear: train_linear(&features, &LinearConfig::default())?.1,
        mlp: train_quad_mlp(&features, &MlpConfig { seed, ..MlpConfig::default() })?.1,
        vqc: quantum(ModelSpec::new(EncoderSpec::Bloch { copies: 1 }, AnsatzSpec::Vqc { blocks: 1, kind }, 2))?,
        st_vqc: quantum(ModelSpec::new(
            EncoderSpec::Bloch { copies: 2 },
            AnsatzSpec::Tree {
                layers: LayerSpec::new(vec![2, 2]),
                kind,
            },
            2,
        ))?,
    })
}

fn mean_row(rows: &[ReportRow]) -> ReportRow {
    let n = rows.len().max(1) as f64;
    let avg = |f: fn(&ReportRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    ReportRow {
        seed: 0,
        linear: avg(|r| r.linear),
        mlp: avg(|r| r.mlp),
        vqc: avg(|r| r.vqc),
        st_vqc: avg(|r| r.st_vqc),
    }
}

fn report_cmd(cli: &Cli, args: &ReportArgs) -> Result<()> {
    let ids = args.ids.iter().map(|s| s.parse::<DatasetId>()).collect::<Result<Vec<_>, _>>()?;
    if args.seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let jobs: Vec<(DatasetId, u64)> = ids
        .iter()
        .flat_map(|&id| (0..args.seeds).map(move |s| (id, s.wrapping_add(cli.seed))))
        .collect();
    let rows: Vec<(DatasetId, ReportRow)> = jobs
        .par_iter()
        .map(|&(id, seed)| Ok((id, report_row(id, seed, args)?)))
        .collect::<Result<_>>()?;

    let dir = out_dir(cli)?;
    let mut csv = String::from("id,seed,linear,mlp,vqc,st_vqc\n");
    for (id, r) in &rows {
        csv.push_str(&format!("{id},{},{},{},{},{}\n", r.seed, r.linear, r.mlp, r.vqc, r.st_vqc));
    }
    write_file(&dir.join("report.csv"), csv.as_bytes())?;

    let mut means: BTreeMap<String, ReportRow> = BTreeMap::new();
    for id in &ids {
        let of_id: Vec<ReportRow> = rows.iter().filter(|(i, _)| i == id).map(|(_, r)| *r).collect();
        means.insert(id.to_string(), mean_row(&of_id));
    }
    for (label, nonlinear) in [("linear_sets", false), ("nonlinear_sets", true)] {
        let group: Vec<ReportRow> = rows
            .iter()
            .filter(|(id, _)| DatasetId::NONLINEAR.contains(id) == nonlinear)
            .map(|(_, r)| *r)
            .collect();
        if !group.is_empty() {
            means.insert(label.to_string(), mean_row(&group));
        }
    }
    write_json(&dir.join("report.json"), &means)?;
    println!("{:<15} {:>7} {:>7} {:>7} {:>7}", "set", "linear", "mlp", "vqc", "st-vqc");
    for (name, r) in &means {
        println!("{name:<15} {:>7.4} {:>7.4} {:>7.4} {:>7.4}", r.linear, r.mlp, r.vqc, r.st_vqc);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use stvqc::sim::GateKind;

    #[test]
    fn masks_from_segment_names() {
        let mask = parse_mask(&["spatial".into(), "layer".into()]).unwrap();
        assert!(mask.spatial && mask.layer && !mask.duplication && !mask.physical);
        assert!(parse_mask(&["qubits".into()]).is_err());
    }

    #[test]
    fn topology_names() {
        assert_eq!(topology("line:3").unwrap().n_phys, 3);
        assert_eq!(topology("lima").unwrap().n_phys, 5);
        assert!(topology("line:x").is_err());
        assert!(topology("/no/such/device.json").is_err());
    }

    #[test]
    fn dims_parse() {
        assert_eq!(parse_dims("2x2x1", 3, "window").unwrap(), vec![2, 2, 1]);
        assert!(parse_dims("2x2", 3, "window").is_err());
        assert!(parse_dims("ax2", 2, "pool").is_err());
    }

    #[test]
    fn lifting_keeps_angles_as_parameter_values() {
        let mut c = Circuit::new(2);
        c.push(stvqc::sim::GateOp::controlled(GateKind::Crz, 0, 1, Angle::Fixed(0.3)));
        c.push(stvqc::sim::GateOp::rotation(GateKind::Rx, 0, Angle::Fixed(0.2)));
        let (lifted, values) = lift_controlled_angles(&c);
        assert_eq!(values, vec![0.3]);
        assert_eq!(lifted.ops[0].angle, Some(Angle::param(0)));
        assert_eq!(lifted.ops[1].angle, Some(Angle::Fixed(0.2)));
    }
}
