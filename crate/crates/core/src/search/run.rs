//! Sampling, evaluation and the search loops.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::controller::{ControllerConfig, ControllerPolicy};
use super::reward::{RewardRecord, DEFAULT_RHO};
use super::space::{Decoded, SearchSpace};
use crate::compiler::{find_paths, rank_candidates, Candidate};
use crate::data::{Sample, Split};
use crate::error::{Error, Result};
use crate::sim::NoiseModel;
use crate::trainer::{evaluate, train, EvalOptions, ModelSpec, Placement, TrainConfig, TrainReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub episodes: usize,
    pub rho: f64,
    pub controller: ControllerConfig,
    /// Per-episode training budget (half the final epochs by default).
    pub train: TrainConfig,
    /// Noise used for the validation accuracy in the reward.
    pub noise: Option<NoiseModel>,
    pub shots: usize,
    /// Caps on the samples used per episode; `None` uses the whole split.
    pub max_train: Option<usize>,
    pub max_val: Option<usize>,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            episodes: 60,
            rho: DEFAULT_RHO,
            controller: ControllerConfig::default(),
            train: TrainConfig {
                epochs: 25,
                ..TrainConfig::default()
            },
            noise: Some(NoiseModel {
                p1: 0.001,
                p2: 0.01,
                p_ro: 0.02,
                seed: 0,
            }),
            shots: 256,
            max_train: None,
            max_val: None,
            seed: 0,
        }
    }
}

/// One sampled design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSample {
    /// One choice per slot of the space; masked slots hold their default.
    pub choices: Vec<usize>,
    /// Choices of the active slots only, as seen by the controller.
    pub actions: Vec<usize>,
    pub log_prob: f64,
    pub decoded: Decoded,
}

impl SolutionSample {
    /// Identity of the decoded design, used for caching evaluations.
    pub fn design_key(&self) -> String {
        serde_json::to_string(&(&self.decoded.spec, self.decoded.candidate, self.decoded.n_qubits))
            .expect("designs serialize")
    }
}

fn active_slots(space: &SearchSpace) -> Vec<usize> {
    space
        .slots()
        .iter()
        .enumerate()
        .filter(|(_, s)| space.is_active(s))
        .map(|(i, _)| i)
        .collect()
}

fn assemble(space: &SearchSpace, actions: Vec<usize>, log_prob: f64) -> Result<SolutionSample> {
    let slots = space.slots();
    let mut choices: Vec<usize> = slots.iter().map(|s| space.default_choice(s)).collect();
    for (&slot, &a) in active_slots(space).iter().zip(&actions) {
        choices[slot] = a;
    }
    let decoded = space.decode(&choices)?;
    Ok(SolutionSample {
        choices,
        actions,
        log_prob,
        decoded,
    })
}

/// Controller sizes for the active slots of `space`.
pub fn policy_sizes(space: &SearchSpace) -> Vec<usize> {
    let slots = space.slots();
    active_slots(space).into_iter().map(|i| slots[i].choices).collect()
}

/// Autoregressive sample from the policy; masked slots contribute nothing.
pub fn sample(policy: &ControllerPolicy, space: &SearchSpace, rng: &mut ChaCha8Rng) -> Result<SolutionSample> {
    if policy.sizes != policy_sizes(space) {
        return Err(Error::Search(format!(
            "policy heads {:?} do not match active slots {:?}",
            policy.sizes,
            policy_sizes(space)
        )));
    }
    let (actions, log_prob) = policy.sample(rng, false);
    assemble(space, actions, log_prob)
}

pub fn sample_greedy(policy: &ControllerPolicy, space: &SearchSpace) -> Result<SolutionSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (actions, log_prob) = policy.sample(&mut rng, true);
    assemble(space, actions, log_prob)
}

/// Uniform choice on every active slot.
pub fn sample_uniform(space: &SearchSpace, rng: &mut ChaCha8Rng) -> Result<SolutionSample> {
    let sizes = policy_sizes(space);
    let actions: Vec<usize> = sizes.iter().map(|&k| rng.gen_range(0..k)).collect();
    let log_prob = -sizes.iter().map(|&k| (k as f64).ln()).sum::<f64>();
    assemble(space, actions, log_prob)
}

/// Device placement for a feasible design: the selected candidate when its
/// size matches, otherwise the best-ranked path of the right size.
fn placement_for(space: &SearchSpace, decoded: &Decoded) -> Option<Candidate> {
    let n = decoded.n_qubits;
    if let Some(c) = decoded.candidate.map(|i| &space.candidates[i]) {
        if c.size() == n {
            return Some(c.clone());
        }
    }
    if let Some(c) = space.candidates.iter().find(|c| c.size() == n && c.is_path()) {
        return Some(c.clone());
    }
    let paths: Vec<Candidate> = find_paths(&space.graph, n).into_iter().map(Candidate::Path).collect();
    rank_candidates(&paths, 1).into_iter().next()
}

fn truncate(samples: &[Sample], cap: Option<usize>) -> &[Sample] {
    &samples[..cap.map_or(samples.len(), |c| c.min(samples.len()))]
}

/// Trains, places and validates one design. Infeasibility and failures become
/// zero-accuracy records rather than errors.
pub fn evaluate_solution(sample: &SolutionSample, split: &Split, space: &SearchSpace, config: &SearchConfig) -> RewardRecord {
    let longest = space.max_path_qubits();
    evaluate_with_longest(sample, split, space, config, longest)
}

fn evaluate_with_longest(
    sample: &SolutionSample,
    split: &Split,
    space: &SearchSpace,
    config: &SearchConfig,
    longest: usize,
) -> RewardRecord {
    let d = &sample.decoded;
    let n = d.n_qubits;
    let bn = n > longest;
    let bq = d.candidate.is_some_and(|i| space.candidates[i].size() != n);
    let fail = |reason: String| RewardRecord {
        n_qubits: n,
        ..RewardRecord::infeasible(reason, bn, bq, config.rho)
    };
    if let Some(reason) = &d.infeasible {
        return fail(reason.clone());
    }
    if bn {
        return fail(format!("{n} qubits exceed the longest device path of {longest}"));
    }
    let Some(spec) = &d.spec else {
        return fail("design did not decode".into());
    };
    let Some(candidate) = placement_for(space, d) else {
        return fail(format!("no {n}-qubit path on the device"));
    };
    match train_and_validate(spec, candidate, split, space, config) {
        Ok((acc, acc_ideal, n_params)) => RewardRecord {
            n_qubits: n,
            n_params,
            ..RewardRecord::new(acc, acc_ideal, bn, bq, config.rho)
        },
        Err(e) => fail(e.to_string()),
    }
}

fn train_and_validate(
    spec: &ModelSpec,
    candidate: Candidate,
    split: &Split,
    space: &SearchSpace,
    config: &SearchConfig,
) -> Result<(f64, f64, usize)> {
    let spec = spec.clone().with_placement(Placement {
        graph: space.graph.clone(),
        candidate,
    });
    let model = spec.build()?;
    let val = truncate(&split.test, config.max_val);
    let report = train(&model, truncate(&split.train, config.max_train), val, &config.train)?;
    let acc = match config.noise {
        Some(noise) => {
            let options = EvalOptions {
                noise: Some(noise),
                graph: None,
                shots: config.shots,
            };
            evaluate(&model, &report.params, val, &options)?.accuracy
        }
        None => report.test_accuracy,
    };
    Ok((acc, report.test_accuracy, model.n_params()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub episode: usize,
    pub sample: SolutionSample,
    pub record: RewardRecord,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: HistoryEntry,
    pub history: Vec<HistoryEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<ControllerPolicy>,
}

impl SearchResult {
    pub fn best_reward(&self) -> f64 {
        self.best.record.reward
    }
}

/// Index of the best entry: highest reward among penalty-free designs with
/// positive accuracy, falling back to the highest reward overall. Ties keep
/// the earliest episode.
pub fn best_index(history: &[HistoryEntry]) -> Option<usize> {
    let pick = |filter: &dyn Fn(&HistoryEntry) -> bool| {
        history
            .iter()
            .enumerate()
            .filter(|(_, h)| filter(h))
            .fold(None, |best: Option<(usize, f64)>, (i, h)| match best {
                Some((_, r)) if r >= h.record.reward => best,
                _ => Some((i, h.record.reward)),
            })
            .map(|(i, _)| i)
    };
    pick(&|h| h.record.penalty == 0 && h.record.acc > 0.0).or_else(|| pick(&|_| true))
}

/// Best reward seen up to and including each episode.
pub fn running_best(history: &[HistoryEntry]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    history
        .iter()
        .map(|h| {
            best = best.max(h.record.reward);
            best
        })
        .collect()
}

struct Evaluator<'a> {
    split: &'a Split,
    space: &'a SearchSpace,
    config: &'a SearchConfig,
    longest: usize,
    cache: HashMap<String, RewardRecord>,
}

impl Evaluator<'_> {
    /// Evaluates a batch, reusing cached designs; new designs run in parallel.
    fn run(&mut self, samples: &[SolutionSample]) -> Vec<RewardRecord> {
        let keys: Vec<String> = samples.iter().map(SolutionSample::design_key).collect();
        let mut todo: Vec<usize> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && !todo.iter().any(|&j| keys[j] == *k) {
                todo.push(i);
            }
        }
        let fresh: Vec<RewardRecord> = todo
            .par_iter()
            .map(|&i| evaluate_with_longest(&samples[i], self.split, self.space, self.config, self.longest))
            .collect();
        for (&i, r) in todo.iter().zip(fresh) {
            self.cache.insert(keys[i].clone(), r);
        }
        keys.iter().map(|k| self.cache[k].clone()).collect()
    }
}

fn check_budget(config: &SearchConfig) -> Result<()> {
    if config.episodes == 0 {
        return Err(Error::Search("budget must be at least one episode".into()));
    }
    Ok(())
}

fn finish(history: Vec<HistoryEntry>, policy: Option<ControllerPolicy>) -> SearchResult {
    let best = history[best_index(&history).expect("non-empty history")].clone();
    SearchResult { best, history, policy }
}

/// Controller-driven search: sample a batch, evaluate, update, repeat.
pub fn search(space: &SearchSpace, split: &Split, config: &SearchConfig) -> Result<SearchResult> {
    check_budget(config)?;
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut policy = ControllerPolicy::new(policy_sizes(space), config.controller, &mut rng)?;
    let mut eval = Evaluator {
        split,
        space,
        config,
        longest: space.max_path_qubits(),
        cache: HashMap::new(),
    };
    let mut history = Vec::with_capacity(config.episodes);
    while history.len() < config.episodes {
        let count = config.controller.batch.min(config.episodes - history.len());
        let samples: Vec<SolutionSample> = (0..count)
            .map(|_| sample(&policy, space, &mut rng))
            .collect::<Result<_>>()?;
        let records = eval.run(&samples);
        let batch: Vec<(Vec<usize>, f64)> = samples
            .iter()
            .zip(&records)
            .map(|(s, r)| (s.actions.clone(), r.reward))
            .collect();
        policy.update(&batch)?;
        for (sample, record) in samples.into_iter().zip(records) {
            history.push(HistoryEntry {
                episode: history.len(),
                sample,
                record,
            });
        }
    }
    Ok(finish(history, Some(policy)))
}

/// Uniform random sampling with the same evaluator and budget.
pub fn random_search(space: &SearchSpace, split: &Split, config: &SearchConfig) -> Result<SearchResult> {
    check_budget(config)?;
    space.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let samples: Vec<SolutionSample> = (0..config.episodes)
        .map(|_| sample_uniform(space, &mut rng))
        .collect::<Result<_>>()?;
    let mut eval = Evaluator {
        split,
        space,
        config,
        longest: space.max_path_qubits(),
        cache: HashMap::new(),
    };
    let records = eval.run(&samples);
    let history = samples
        .into_iter()
        .zip(records)
        .enumerate()
        .map(|(episode, (sample, record))| HistoryEntry {
            episode,
            sample,
            record,
        })
        .collect();
    Ok(finish(history, None))
}

/// The decoded design with the device placement used during evaluation.
pub fn placed_spec(space: &SearchSpace, decoded: &Decoded) -> Result<ModelSpec> {
    let spec = decoded
        .spec
        .clone()
        .ok_or_else(|| Error::Search("design is infeasible".into()))?;
    let candidate = placement_for(space, decoded).ok_or_else(|| Error::Search("no placement for design".into()))?;
    Ok(spec.with_placement(Placement {
        graph: space.graph.clone(),
        candidate,
    }))
}

/// Retrains the best design at the full budget.
pub fn retrain_best(result: &SearchResult, space: &SearchSpace, split: &Split, config: &TrainConfig) -> Result<TrainReport> {
    let model = placed_spec(space, &result.best.sample.decoded)?.build()?;
    train(&model, &split.train, &split.test, config)
}

/// One JSON object per episode: `{episode, record, sample}`.
pub fn write_jsonl(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for h in history {
        serde_json::to_writer(&mut w, h)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

/// `episode,acc_ideal,acc_noisy,reward` rows.
pub fn write_history_csv(path: &Path, history: &[HistoryEntry]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["episode", "acc_ideal", "acc_noisy", "reward"])?;
    for h in history {
        w.write_record([
            h.episode.to_string(),
            h.record.acc_ideal.to_string(),
            h.record.acc.to_string(),
            h.record.reward.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
