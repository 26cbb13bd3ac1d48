//! State-vector simulation: gates, circuits, noise and circuit I/O.

pub mod gate;
pub mod noise;
pub mod qasm;
pub mod state;

pub use gate::{Angle, Circuit, GateKind, GateOp};
pub use noise::{
    deviation, expectation_z_from_distribution, ideal_distribution, run_noisy, write_distribution_csv, NoiseModel,
};
pub use qasm::{from_qasm, to_qasm};
pub use state::{apply_gate, run_circuit, single_matrix, StateVector, MAX_QUBITS};

/// `⟨Z⟩` on each listed qubit.
pub fn expectation_z(state: &StateVector, qubits: &[usize]) -> crate::Result<Vec<f64>> {
    state.expectation_z(qubits)
}
