//! Lowering logical circuits to a device: basis decomposition, placement,
//! routing and the swap-free path synthesis.

pub mod candidates;
pub mod decompose;
pub mod graph;
pub mod route;

pub use candidates::{
    candidate_set, find_paths, find_paths_capped, grow_subgraph, rank_candidates, Candidate, PathCandidate,
    SubgraphCandidate,
};
pub use decompose::{decompose_to_basis, optimize, BASIS};
pub use graph::CouplingGraph;
pub use route::{
    build_swap_free, circuit_depth, compact, compile_swap_free, metrics, placement_order, rewrite_nonadjacent,
    route_naive, transpile, CompiledCircuit, Metrics,
};
