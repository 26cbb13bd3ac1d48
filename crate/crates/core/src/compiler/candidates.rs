//! Physical-qubit candidates: simple paths, near-path subgraphs and per-size ranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::CouplingGraph;
use crate::error::{Error, Result};

pub const PATH_EXPANSION_CAP: usize = 1_000_000;
const RANDOM_RESTARTS: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathCandidate {
    pub qubits: Vec<usize>,
    pub noise_score: f64,
}

impl PathCandidate {
    pub fn new(graph: &CouplingGraph, qubits: Vec<usize>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= graph.n_phys || !seen.insert(q) {
                return Err(Error::Topology(format!("{qubits:?} is not a simple path")));
            }
            if i > 0 && !graph.adjacent(qubits[i - 1], q) {
                return Err(Error::Topology(format!("{} and {q} are not coupled", qubits[i - 1])));
            }
        }
        let noise_score = qubits.iter().map(|&q| graph.err_1q[q]).sum::<f64>()
            + qubits.windows(2).map(|w| graph.edge_error(w[0], w[1])).sum::<f64>();
        Ok(Self { qubits, noise_score })
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }
}

/// A base path plus greedily attached qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphCandidate {
    pub path: PathCandidate,
    /// `(qubit, distance to the path)` in insertion order.
    pub extra: Vec<(usize, usize)>,
    /// `(added qubit, member it attaches to)` in insertion order.
    pub attachments: Vec<(usize, usize)>,
    pub fat: usize,
    pub noise_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Candidate {
    Path(PathCandidate),
    Subgraph(SubgraphCandidate),
}

impl Candidate {
    /// Path members in order, then attached qubits in insertion order.
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Candidate::Path(p) => p.qubits.clone(),
            Candidate::Subgraph(s) => s.path.qubits.iter().copied().chain(s.extra.iter().map(|e| e.0)).collect(),
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Candidate::Path(p) => p.len(),
            Candidate::Subgraph(s) => s.path.len() + s.extra.len(),
        }
    }

    pub fn noise_score(&self) -> f64 {
        match self {
            Candidate::Path(p) => p.noise_score,
            Candidate::Subgraph(s) => s.noise_score,
        }
    }

    pub fn is_path(&self) -> bool {
        matches!(self, Candidate::Path(_))
    }
}

fn canonical(path: &[usize]) -> Vec<usize> {
    if path.len() > 1 && path[0] > path[path.len() - 1] {
        path.iter().rev().copied().collect()
    } else {
        path.to_vec()
    }
}

/// All simple paths with exactly `n` qubits, one orientation each, sorted.
pub fn find_paths(graph: &CouplingGraph, n: usize) -> Vec<PathCandidate> {
    find_paths_capped(graph, n, PATH_EXPANSION_CAP)
}

/// As [`find_paths`], switching to seeded random restarts after `cap` DFS expansions.
pub fn find_paths_capped(graph: &CouplingGraph, n: usize, cap: usize) -> Vec<PathCandidate> {
    if n == 0 || n > graph.n_phys {
        return Vec::new();
    }
    let mut found = BTreeSet::new();
    let mut budget = cap;
    let mut complete = true;
    let mut path = Vec::with_capacity(n);
    let mut on_path = vec![false; graph.n_phys];
    for root in 0..graph.n_phys {
        path.push(root);
        on_path[root] = true;
        complete &= extend(graph, n, &mut path, &mut on_path, &mut found, &mut budget);
        on_path[root] = false;
        path.pop();
        if !complete {
            break;
        }
    }
    if !complete {
        random_paths(graph, n, &mut found);
    }
    found
        .into_iter()
        .map(|p| PathCandidate::new(graph, p).expect("enumerated paths are simple"))
        .collect()
}

fn extend(
    graph: &CouplingGraph,
    n: usize,
    path: &mut Vec<usize>,
    on_path: &mut [bool],
    found: &mut BTreeSet<Vec<usize>>,
    budget: &mut usize,
) -> bool {
    if path.len() == n {
        found.insert(canonical(path));
        return true;
    }
    if *budget == 0 {
        return false;
    }
    *budget -= 1;
    let last = *path.last().unwrap();
    for &v in graph.neighbors(last) {
        if !on_path[v] {
            on_path[v] = true;
            path.push(v);
            let ok = extend(graph, n, path, on_path, found, budget);
            path.pop();
            on_path[v] = false;
            if !ok {
                return false;
            }
        }
    }
    true
}

fn random_paths(graph: &CouplingGraph, n: usize, found: &mut BTreeSet<Vec<usize>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
    let mut on_path = vec![false; graph.n_phys];
    for _ in 0..RANDOM_RESTARTS {
        let mut path = vec![rng.gen_range(0..graph.n_phys)];
        on_path[path[0]] = true;
        while path.len() < n {
            let options: Vec<usize> = graph
                .neighbors(*path.last().unwrap())
                .iter()
                .copied()
                .filter(|&v| !on_path[v])
                .collect();
            match options.choose(&mut rng) {
                Some(&v) => {
                    on_path[v] = true;
                    path.push(v);
                }
                None => break,
            }
        }
        if path.len() == n {
            found.insert(canonical(&path));
        }
        path.iter().for_each(|&q| on_path[q] = false);
    }
}

/// Adds qubits next to the current member set, each step taking the one nearest
/// to `path` (then lower `err_1q`, then lower index), until `target` qubits.
pub fn grow_subgraph(graph: &CouplingGraph, path: &PathCandidate, target: usize) -> Result<SubgraphCandidate> {
    if target <= path.len() {
        return Err(Error::Topology(format!(
            "target {target} must exceed the path size {}",
            path.len()
        )));
    }
    if target > graph.n_phys {
        return Err(Error::CandidateTooSmall {
            required: target,
            available: graph.n_phys,
        });
    }
    let dist = graph.distances_from(&path.qubits);
    let mut member = vec![false; graph.n_phys];
    path.qubits.iter().for_each(|&q| member[q] = true);
    let mut extra = Vec::new();
    let mut attachments = Vec::new();
    let mut score = path.noise_score;
    while path.len() + extra.len() < target {
        let best = (0..graph.n_phys)
            .filter(|&v| !member[v] && graph.neighbors(v).iter().any(|&u| member[u]))
            .min_by(|&a, &b| {
                dist[a]
                    .cmp(&dist[b])
                    .then(graph.err_1q[a].total_cmp(&graph.err_1q[b]))
                    .then(a.cmp(&b))
            })
            .ok_or_else(|| Error::Topology("no reachable qubit left to add".into()))?;
        let anchor = *graph
            .neighbors(best)
            .iter()
            .filter(|&&u| member[u])
            .min_by_key(|&&u| (dist[u], u))
            .unwrap();
        member[best] = true;
        score += graph.err_1q[best] + graph.edge_error(best, anchor);
        extra.push((best, dist[best]));
        attachments.push((best, anchor));
    }
    let fat = extra.iter().map(|e| e.1).max().unwrap_or(0);
    Ok(SubgraphCandidate {
        path: path.clone(),
        extra,
        attachments,
        fat,
        noise_score: score,
    })
}

fn compare(a: &Candidate, b: &Candidate) -> Ordering {
    a.noise_score()
        .total_cmp(&b.noise_score())
        .then_with(|| a.qubits().cmp(&b.qubits()))
}

/// Keeps the `k` lowest-noise candidates per size, ties broken by qubit list.
pub fn rank_candidates(candidates: &[Candidate], k: usize) -> Vec<Candidate> {
    let mut buckets: BTreeMap<usize, Vec<&Candidate>> = BTreeMap::new();
    for c in candidates {
        buckets.entry(c.size()).or_default().push(c);
    }
    buckets
        .into_values()
        .flat_map(|mut bucket| {
            bucket.sort_by(|a, b| compare(a, b));
            bucket.into_iter().take(k.max(1)).cloned()
        })
        .collect()
}

/// Ranked candidates for sizes `2..=max_size`: paths where the device has
/// them, subgraphs grown from the best longest paths beyond that.
pub fn candidate_set(graph: &CouplingGraph, max_size: usize, k: usize) -> Vec<Candidate> {
    let max_size = max_size.min(graph.n_phys);
    let mut all = Vec::new();
    let mut longest: Vec<Candidate> = Vec::new();
    for size in 2..=max_size {
        let paths = find_paths(graph, size);
        if paths.is_empty() {
            if longest.is_empty() {
                break;
            }
            let bases: Vec<Candidate> = rank_candidates(&longest, 4 * k.max(1));
            for base in bases {
                if let Candidate::Path(p) = base {
                    if let Ok(s) = grow_subgraph(graph, &p, size) {
                        all.push(Candidate::Subgraph(s));
                    }
                }
            }
        } else {
            longest = paths.into_iter().map(Candidate::Path).collect();
            all.extend(longest.iter().cloned());
        }
    }
    rank_candidates(&all, k)
}
