//! Device coupling graph with static error rates.

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LIMA5: &str = include_str!("../../fixtures/lima5.json");
const HEAVYHEX27: &str = include_str!("../../fixtures/heavyhex27.json");

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGraph {
    n_phys: usize,
    edges: Vec<[usize; 2]>,
    #[serde(default)]
    err_1q: Vec<f64>,
    #[serde(default)]
    err_2q: BTreeMap<String, f64>,
    #[serde(default)]
    err_ro: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct CouplingGraph {
    pub n_phys: usize,
    pub edges: Vec<(usize, usize)>,
    pub err_1q: Vec<f64>,
    /// Keyed by `(min, max)`.
    pub err_2q: BTreeMap<(usize, usize), f64>,
    pub err_ro: Vec<f64>,
    adjacency: Vec<Vec<usize>>,
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TryFrom<RawGraph> for CouplingGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        let mut err_2q = BTreeMap::new();
        for (key, value) in &raw.err_2q {
            let (a, b) = key
                .split_once('-')
                .and_then(|(a, b)| Some((a.trim().parse().ok()?, b.trim().parse().ok()?)))
                .ok_or_else(|| Error::Topology(format!("bad edge key `{key}`, expected \"a-b\"")))?;
            err_2q.insert(edge_key(a, b), *value);
        }
        CouplingGraph::new(
            raw.n_phys,
            raw.edges.into_iter().map(|[a, b]| (a, b)).collect(),
            raw.err_1q,
            err_2q,
            raw.err_ro,
        )
    }
}

impl From<CouplingGraph> for RawGraph {
    fn from(g: CouplingGraph) -> Self {
        RawGraph {
            n_phys: g.n_phys,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
            err_1q: g.err_1q,
            err_2q: g.err_2q.into_iter().map(|((a, b), v)| (format!("{a}-{b}"), v)).collect(),
            err_ro: g.err_ro,
        }
    }
}

impl CouplingGraph {
    /// Missing error tables default to zero.
    pub fn new(
        n_phys: usize,
        edges: Vec<(usize, usize)>,
        mut err_1q: Vec<f64>,
        mut err_2q: BTreeMap<(usize, usize), f64>,
        mut err_ro: Vec<f64>,
    ) -> Result<Self> {
        if n_phys == 0 {
            return Err(Error::Topology("device has no qubits".into()));
        }
        let mut adjacency = vec![Vec::new(); n_phys];
        let mut dedup = Vec::new();
        for &(a, b) in &edges {
            if a >= n_phys || b >= n_phys {
                return Err(Error::Topology(format!("edge {a}-{b} references a qubit >= {n_phys}")));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on qubit {a}")));
            }
            if !adjacency[a].contains(&b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
                dedup.push((a, b));
            }
        }
        adjacency.iter_mut().for_each(|n| n.sort_unstable());
        for (name, table) in [("err_1q", &mut err_1q), ("err_ro", &mut err_ro)] {
            if table.is_empty() {
                table.resize(n_phys, 0.0);
            }
            if table.len() != n_phys {
                return Err(Error::Topology(format!("{name} has {} entries for {n_phys} qubits", table.len())));
            }
        }
        for &(a, b) in &dedup {
            err_2q.entry(edge_key(a, b)).or_insert(0.0);
        }
        if let Some((a, b)) = err_2q
            .keys()
            .find(|&&(a, b)| a >= n_phys || !adjacency[a].contains(&b))
        {
            return Err(Error::Topology(format!("err_2q given for non-edge {a}-{b}")));
        }
        let all_rates = err_1q.iter().chain(err_ro.iter()).chain(err_2q.values());
        if let Some(v) = all_rates.copied().find(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Topology(format!("error rate {v} outside [0, 1]")));
        }
        Ok(Self {
            n_phys,
            edges: dedup,
            err_1q,
            err_2q,
            err_ro,
            adjacency,
        })
    }

    /// Error-free graph from an edge list.
    pub fn from_edges(n_phys: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::new(n_phys, edges.to_vec(), Vec::new(), BTreeMap::new(), Vec::new())
    }

    pub fn line(n: usize) -> Self {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::from_edges(n, &edges).expect("line graph is valid")
    }

    /// Five qubits in a T shape: `0–1, 1–2, 1–3, 3–4`.
    pub fn lima() -> Self {
        serde_json::from_str(LIMA5).expect("bundled fixture is valid")
    }

    /// 27-qubit heavy-hex lattice.
    pub fn heavy_hex27() -> Self {
        serde_json::from_str(HEAVYHEX27).expect("bundled fixture is valid")
    }

    /// Bundled fixture by name (`lima`, `heavyhex27`), otherwise a JSON file path.
    pub fn load(name_or_path: &str) -> Result<Self> {
        match name_or_path {
            "lima" | "lima5" => Ok(Self::lima()),
            "heavyhex27" | "heavy-hex" | "heavyhex" => Ok(Self::heavy_hex27()),
            path => Self::from_json_file(Path::new(path)),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        a < self.n_phys && self.adjacency[a].contains(&b)
    }

    pub fn edge_error(&self, a: usize, b: usize) -> f64 {
        self.err_2q.get(&edge_key(a, b)).copied().unwrap_or(0.0)
    }

    /// BFS hop distances from a set of sources (`usize::MAX` if unreachable).
    pub fn distances_from(&self, sources: &[usize]) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.n_phys];
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist[s] != 0 {
                dist[s] = 0;
                queue.push_back(s);
            }
        }
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Shortest path `a → b` visiting lower-index neighbours first; `None` if disconnected.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        let dist = self.distances_from(&[b]);
        if dist[a] == usize::MAX {
            return None;
        }
        let mut path = vec![a];
        let mut cur = a;
        while cur != b {
            cur = *self.adjacency[cur].iter().find(|&&v| dist[v] + 1 == dist[cur])?;
            path.push(cur);
        }
        Some(path)
    }

    /// Qubit count of the longest simple path.
    pub fn longest_path_len(&self) -> usize {
        fn dfs(g: &CouplingGraph, u: usize, seen: &mut [bool], depth: usize, best: &mut usize, budget: &mut usize) {
            *best = (*best).max(depth);
            if *best == g.n_phys || *budget == 0 {
                return;
            }
            *budget -= 1;
            for &v in g.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    dfs(g, v, seen, depth + 1, best, budget);
                    seen[v] = false;
                }
            }
        }
        let mut best = 1;
        let mut budget = 5_000_000usize;
        let mut seen = vec![false; self.n_phys];
        for s in 0..self.n_phys {
            seen[s] = true;
            dfs(self, s, &mut seen, 1, &mut best, &mut budget);
            seen[s] = false;
        }
        best
    }
}
