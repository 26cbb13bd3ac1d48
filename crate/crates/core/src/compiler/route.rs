//! Mapping logical circuits onto a coupling graph: naive SWAP routing, the
//! path-aligned swap-free rewrite, and circuit metrics.

use serde::{Deserialize, Serialize};

use super::candidates::Candidate;
use super::decompose::{decompose_to_basis, optimize};
use super::graph::CouplingGraph;
use crate::ansatz::append_block;
use crate::ansatz::BlockKind;
use crate::error::{Error, Result};
use crate::sim::{Angle, Circuit, GateKind, GateOp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledCircuit {
    /// Basis-gate circuit over `n_phys` physical qubits.
    pub circuit: Circuit,
    /// `mapping[logical] = physical` before the first gate.
    pub mapping: Vec<usize>,
    /// Placement after routing SWAPs.
    pub final_mapping: Vec<usize>,
    pub swap_count: usize,
    pub param_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metrics {
    pub depth: usize,
    pub cx_count: usize,
    pub swap_count: usize,
    pub param_count: usize,
}

/// Longest chain of gates sharing qubits.
pub fn circuit_depth(circuit: &Circuit) -> usize {
    let mut level = vec![0usize; circuit.n_qubits];
    let mut depth = 0;
    for op in &circuit.ops {
        let l = op.qubits.iter().map(|&q| level[q]).max().unwrap_or(0) + 1;
        op.qubits.iter().for_each(|&q| level[q] = l);
        depth = depth.max(l);
    }
    depth
}

pub fn metrics(compiled: &CompiledCircuit) -> Metrics {
    Metrics {
        depth: circuit_depth(&compiled.circuit),
        cx_count: compiled.circuit.count_kind(GateKind::Cx),
        swap_count: compiled.swap_count,
        param_count: compiled.param_count,
    }
}

fn check_mapping(n_logical: usize, graph: &CouplingGraph, mapping: &[usize]) -> Result<()> {
    if mapping.len() != n_logical {
        return Err(Error::LengthMismatch {
            expected: n_logical,
            got: mapping.len(),
        });
    }
    let mut used = vec![false; graph.n_phys];
    for &p in mapping {
        if p >= graph.n_phys || std::mem::replace(&mut used[p], true) {
            return Err(Error::Topology(format!("mapping {mapping:?} is not injective into the device")));
        }
    }
    Ok(())
}

/// Lowers to the basis, then for every CX on uncoupled qubits inserts SWAPs
/// along a shortest path, moving the control next to the target. SWAPs are
/// counted and then expanded into 3 CX each.
pub fn route_naive(circuit: &Circuit, graph: &CouplingGraph, mapping: &[usize]) -> Result<CompiledCircuit> {
    if circuit.n_qubits > graph.n_phys {
        return Err(Error::CandidateTooSmall {
            required: circuit.n_qubits,
            available: graph.n_phys,
        });
    }
    check_mapping(circuit.n_qubits, graph, mapping)?;
    let lowered = decompose_to_basis(circuit)?;
    let mut phys_of = mapping.to_vec();
    let mut logical_at: Vec<Option<usize>> = vec![None; graph.n_phys];
    for (l, &p) in mapping.iter().enumerate() {
        logical_at[p] = Some(l);
    }
    let mut out = Circuit::new(graph.n_phys);
    let mut swap_count = 0;
    for op in &lowered.ops {
        if op.is_two_qubit() {
            let (a, b) = (op.qubits[0], op.qubits[1]);
            if !graph.adjacent(phys_of[a], phys_of[b]) {
                let path = graph.shortest_path(phys_of[a], phys_of[b]).ok_or_else(|| {
                    Error::Topology(format!(
                        "physical qubits {} and {} are disconnected",
                        phys_of[a], phys_of[b]
                    ))
                })?;
                for w in path[..path.len() - 1].windows(2) {
                    let (p, q) = (w[0], w[1]);
                    out.ops.extend([GateOp::cx(p, q), GateOp::cx(q, p), GateOp::cx(p, q)]);
                    swap_count += 1;
                    let (lp, lq) = (logical_at[p], logical_at[q]);
                    logical_at[p] = lq;
                    logical_at[q] = lp;
                    if let Some(l) = lp {
                        phys_of[l] = q;
                    }
                    if let Some(l) = lq {
                        phys_of[l] = p;
                    }
                }
            }
        }
        let mut mapped = op.clone();
        mapped.qubits.iter_mut().for_each(|q| *q = phys_of[*q]);
        out.push(mapped);
    }
    out.n_params = out.n_params.max(lowered.n_params);
    Ok(CompiledCircuit {
        circuit: out,
        mapping: mapping.to_vec(),
        final_mapping: phys_of,
        swap_count,
        param_count: circuit.param_indices().len(),
    })
}

/// [`route_naive`] followed by the peephole pass.
pub fn transpile(circuit: &Circuit, graph: &CouplingGraph, mapping: &[usize]) -> Result<CompiledCircuit> {
    let mut compiled = route_naive(circuit, graph, mapping)?;
    compiled.circuit = optimize(&compiled.circuit);
    Ok(compiled)
}

/// Visiting order used to lay logical qubits on a candidate: the path order,
/// or for subgraphs a depth-first walk from the path head that enters every
/// side branch before continuing along the path.
pub fn placement_order(graph: &CouplingGraph, candidate: &Candidate) -> Vec<usize> {
    match candidate {
        Candidate::Path(p) => p.qubits.clone(),
        Candidate::Subgraph(_) => dfs_tree(graph, candidate).0,
    }
}

/// Discovery order and `(parent, child)` tree edges of the placement walk.
fn dfs_tree(graph: &CouplingGraph, candidate: &Candidate) -> (Vec<usize>, Vec<(usize, usize)>) {
    let path = match candidate {
        Candidate::Path(p) => &p.qubits,
        Candidate::Subgraph(s) => &s.path.qubits,
    };
    let mut walk = Walk {
        graph,
        path,
        in_set: vec![false; graph.n_phys],
        seen: vec![false; graph.n_phys],
        order: Vec::new(),
        edges: Vec::new(),
    };
    candidate.qubits().into_iter().for_each(|q| walk.in_set[q] = true);
    walk.visit(path[0]);
    (walk.order, walk.edges)
}

struct Walk<'a> {
    graph: &'a CouplingGraph,
    path: &'a [usize],
    in_set: Vec<bool>,
    seen: Vec<bool>,
    order: Vec<usize>,
    edges: Vec<(usize, usize)>,
}

impl Walk<'_> {
    fn visit(&mut self, u: usize) {
        self.seen[u] = true;
        self.order.push(u);
        let branches: Vec<usize> = self
            .graph
            .neighbors(u)
            .iter()
            .copied()
            .filter(|&v| self.in_set[v] && !self.path.contains(&v))
            .collect();
        let next_on_path = self
            .path
            .iter()
            .position(|&q| q == u)
            .and_then(|i| self.path.get(i + 1).copied());
        for v in branches.into_iter().chain(next_on_path) {
            if !self.seen[v] {
                self.edges.push((u, v));
                self.visit(v);
            }
        }
    }
}

/// Swap-free entangling skeleton for `n_logical` qubits on a candidate.
///
/// On a path, each block is RX and RZ on every qubit, a forward CRZ chain
/// along the path, then a reversed chain back to the head. On a subgraph the
/// chains follow the placement walk's tree edges out and back. Every
/// two-qubit gate sits on a device edge. Returns the fragment over physical
/// qubits and the logical-to-physical map.
pub fn build_swap_free(
    graph: &CouplingGraph,
    n_logical: usize,
    candidate: &Candidate,
    blocks: usize,
) -> Result<(Circuit, Vec<usize>)> {
    if candidate.size() < n_logical {
        return Err(Error::CandidateTooSmall {
            required: n_logical,
            available: candidate.size(),
        });
    }
    if candidate.is_path() && candidate.size() != n_logical {
        return Err(Error::Topology(format!(
            "path of {} qubits for {n_logical} logical qubits; paths must match exactly",
            candidate.size()
        )));
    }
    if blocks == 0 || n_logical == 0 {
        return Err(Error::LayerSpec("at least one block over at least one qubit".into()));
    }
    let mut ops = Vec::new();
    let mut next = 0;
    let mapping: Vec<usize>;
    match candidate {
        Candidate::Path(p) => {
            mapping = p.qubits.clone();
            for _ in 0..blocks {
                append_block(&mut ops, &mapping, BlockKind::Chain, &mut next);
            }
        }
        Candidate::Subgraph(_) => {
            let (order, edges) = dfs_tree(graph, candidate);
            mapping = order[..n_logical].to_vec();
            let tree: Vec<(usize, usize)> = edges
                .into_iter()
                .filter(|(a, b)| mapping.contains(a) && mapping.contains(b))
                .collect();
            for _ in 0..blocks {
                for &q in &mapping {
                    ops.push(GateOp::rotation(GateKind::Rx, q, Angle::param(next)));
                    next += 1;
                }
                for &q in &mapping {
                    ops.push(GateOp::rotation(GateKind::Rz, q, Angle::param(next)));
                    next += 1;
                }
                let back: Vec<(usize, usize)> = tree.iter().rev().map(|&(a, b)| (b, a)).collect();
                for &(a, b) in tree.iter().chain(&back) {
                    ops.push(GateOp::controlled(GateKind::Crz, a, b, Angle::param(next)));
                    next += 1;
                }
            }
        }
    }
    let mut circuit = Circuit::new(graph.n_phys);
    circuit.extend(ops);
    Ok((circuit, mapping))
}

/// Lays logical qubit `i` on the candidate's `i`-th placement qubit and
/// replaces every trainable controlled rotation between uncoupled qubits with a
/// chain of fresh-parameter rotations along the device path joining them. The
/// remaining gates are routed naively.
pub fn compile_swap_free(circuit: &Circuit, graph: &CouplingGraph, candidate: &Candidate) -> Result<CompiledCircuit> {
    if candidate.size() < circuit.n_qubits {
        return Err(Error::CandidateTooSmall {
            required: circuit.n_qubits,
            available: candidate.size(),
        });
    }
    let order = placement_order(graph, candidate);
    let mapping = order[..circuit.n_qubits].to_vec();
    let rewritten = rewrite_nonadjacent(circuit, graph, &mapping);
    transpile(&rewritten, graph, &mapping)
}

/// Same rewrite with an explicit initial mapping.
pub fn rewrite_nonadjacent(circuit: &Circuit, graph: &CouplingGraph, mapping: &[usize]) -> Circuit {
    let mut logical_at = vec![None; graph.n_phys];
    for (l, &p) in mapping.iter().enumerate() {
        logical_at[p] = Some(l);
    }
    let mut out = Circuit::new(circuit.n_qubits);
    out.n_params = circuit.n_params;
    let mut fresh = circuit.n_params;
    for op in &circuit.ops {
        let trainable = matches!(op.angle, Some(Angle::Param { .. }));
        if op.kind.is_controlled_rotation() && trainable {
            let (a, b) = (mapping[op.qubits[0]], mapping[op.qubits[1]]);
            if !graph.adjacent(a, b) {
                let chain = graph
                    .shortest_path(a, b)
                    .and_then(|p| p.into_iter().map(|q| logical_at[q]).collect::<Option<Vec<usize>>>());
                if let Some(chain) = chain {
                    for w in chain.windows(2) {
                        out.push(GateOp::controlled(op.kind, w[0], w[1], Angle::param(fresh)));
                        fresh += 1;
                    }
                    continue;
                }
            }
        }
        out.push(op.clone());
    }
    out
}

/// Relabels the touched physical qubits (plus every mapped qubit) to `0..k`.
/// Returns the compact circuit and `local[physical]`.
pub fn compact(compiled: &CompiledCircuit) -> (Circuit, Vec<Option<usize>>) {
    let n = compiled.circuit.n_qubits;
    let mut used = vec![false; n];
    compiled
        .circuit
        .ops
        .iter()
        .flat_map(|op| op.qubits.iter())
        .chain(compiled.final_mapping.iter())
        .for_each(|&q| used[q] = true);
    let mut local = vec![None; n];
    let mut k = 0;
    for (p, &u) in used.iter().enumerate() {
        if u {
            local[p] = Some(k);
            k += 1;
        }
    }
    let mut out = Circuit::new(k);
    for op in &compiled.circuit.ops {
        let mut op = op.clone();
        op.qubits.iter_mut().for_each(|q| *q = local[*q].unwrap());
        out.push(op);
    }
    out.n_params = out.n_params.max(compiled.circuit.n_params);
    (out, local)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_vqc;
    use crate::compiler::candidates::{find_paths, grow_subgraph, PathCandidate};

    fn ring4() -> Circuit {
        build_vqc(4, 1).unwrap()
    }

    #[test]
    fn empty_and_parallel_metrics() {
        let g = CouplingGraph::line(3);
        let m = metrics(&route_naive(&Circuit::new(3), &g, &[0, 1, 2]).unwrap());
        assert_eq!((m.depth, m.cx_count, m.swap_count, m.param_count), (0, 0, 0, 0));
        let mut c = Circuit::new(3);
        (0..3).for_each(|q| c.push(GateOp::single(GateKind::X, q)));
        assert_eq!(circuit_depth(&c), 1);
    }

    #[test]
    fn bell_metrics() {
        let mut c = Circuit::new(2);
        c.push(GateOp::single(GateKind::H, 0));
        c.push(GateOp::cx(0, 1));
        let m = metrics(&route_naive(&c, &CouplingGraph::line(2), &[0, 1]).unwrap());
        assert_eq!(m.cx_count, 1);
        assert_eq!(m.depth, 3 + 1);
    }

    #[test]
    fn ring_on_line_needs_swaps() {
        let g = CouplingGraph::line(4);
        let naive = route_naive(&ring4(), &g, &[0, 1, 2, 3]).unwrap();
        assert!(naive.swap_count >= 1);
        let base_cx = decompose_to_basis(&ring4()).unwrap().count_kind(GateKind::Cx);
        assert_eq!(metrics(&naive).cx_count, base_cx + 3 * naive.swap_count);
        assert!(naive.circuit.ops.iter().filter(|o| o.is_two_qubit()).all(|o| g.adjacent(o.qubits[0], o.qubits[1])));
    }

    #[test]
    fn routable_circuit_needs_no_swaps() {
        let mut c = Circuit::new(3);
        c.push(GateOp::cx(0, 1));
        c.push(GateOp::cx(2, 1));
        assert_eq!(route_naive(&c, &CouplingGraph::line(3), &[0, 1, 2]).unwrap().swap_count, 0);
    }

    #[test]
    fn swap_free_on_line() {
        let g = CouplingGraph::line(4);
        let path = Candidate::Path(PathCandidate::new(&g, vec![0, 1, 2, 3]).unwrap());
        let (frag, mapping) = build_swap_free(&g, 4, &path, 1).unwrap();
        assert_eq!(mapping, vec![0, 1, 2, 3]);
        assert_eq!(route_naive(&frag, &g, &[0, 1, 2, 3]).unwrap().swap_count, 0);
        for w in mapping.windows(2) {
            assert!(frag.ops.iter().any(|o| o.is_two_qubit() && o.qubits.contains(&w[0]) && o.qubits.contains(&w[1])));
        }
        let compiled = compile_swap_free(&ring4(), &g, &path).unwrap();
        assert_eq!(compiled.swap_count, 0);
        assert_eq!(compiled.param_count, 12 - 1 + 3);
    }

    #[test]
    fn two_qubit_edge_collapses() {
        let g = CouplingGraph::line(2);
        let path = Candidate::Path(PathCandidate::new(&g, vec![0, 1]).unwrap());
        let (frag, _) = build_swap_free(&g, 2, &path, 1).unwrap();
        assert_eq!(frag.count_kind(GateKind::Crz), 2);
    }

    #[test]
    fn subgraph_placement_stays_on_edges() {
        let g = CouplingGraph::lima();
        let p = find_paths(&g, 4).remove(0);
        let sub = Candidate::Subgraph(grow_subgraph(&g, &p, 5).unwrap());
        let (frag, mapping) = build_swap_free(&g, 5, &sub, 2).unwrap();
        assert_eq!(mapping, vec![0, 1, 2, 3, 4]);
        assert!(frag.ops.iter().filter(|o| o.is_two_qubit()).all(|o| g.adjacent(o.qubits[0], o.qubits[1])));
        let identity: Vec<usize> = (0..5).collect();
        assert_eq!(route_naive(&frag, &g, &identity).unwrap().swap_count, 0);
    }

    #[test]
    fn too_small_candidates_are_reported() {
        let g = CouplingGraph::lima();
        let p = Candidate::Path(PathCandidate::new(&g, vec![0, 1]).unwrap());
        assert!(matches!(build_swap_free(&g, 3, &p, 1), Err(Error::CandidateTooSmall { .. })));
    }

    #[test]
    fn compact_relabels() {
        let g = CouplingGraph::heavy_hex27();
        let mut c = Circuit::new(2);
        c.push(GateOp::cx(0, 1));
        let compiled = route_naive(&c, &g, &[25, 26]).unwrap();
        let (small, local) = compact(&compiled);
        assert_eq!(small.n_qubits, 2);
        assert_eq!(local[25], Some(0));
        assert_eq!(small.ops[0].qubits, vec![0, 1]);
    }
}
