use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("gate {kind} expects {expected} qubit(s), got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("gate {0} acts on the same qubit twice")]
    RepeatedQubit(&'static str),

    #[error("gate {0} requires an angle")]
    MissingAngle(&'static str),

    #[error("trainable parameter {index} unresolved (only {available} values supplied)")]
    UnresolvedParam { index: usize, available: usize },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid probability {name} = {value}")]
    Probability { name: &'static str, value: f64 },

    #[error("all-zero input vector cannot be normalized")]
    ZeroVector,

    #[error("qubit budget exceeded: design needs {required} qubits, only {available} available")]
    QubitBudget { required: usize, available: usize },

    #[error("invalid group spec: {0}")]
    GroupSpec(String),

    #[error("invalid layer spec: {0}")]
    LayerSpec(String),

    #[error("invalid circuit: {0}")]
    Circuit(String),

    #[error("unsupported gate kind for this operation: {0}")]
    Unsupported(String),

    #[error("topology error: {0}")]
    Topology(String),

    #[error("candidate has {available} qubits but the design needs {required}; use a processor with more qubits")]
    CandidateTooSmall { required: usize, available: usize },

    #[error("QASM parse error on line {line}: {msg}")]
    Qasm { line: usize, msg: String },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("unknown dataset id `{0}` (valid: L1, L2, N1, N2, N3, N4, N5, N6)")]
    UnknownDataset(String),

    #[error("model error: {0}")]
    Model(String),

    #[error("search space error: {0}")]
    Search(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
