//! Penalty and reward for evaluated designs.

use serde::{Deserialize, Serialize};

/// Default weight of one constraint violation.
pub const DEFAULT_RHO: f64 = 0.5;

/// `P = bn + bq`.
pub fn penalty(bn: bool, bq: bool) -> u8 {
    u8::from(bn) + u8::from(bq)
}

/// `R = acc - ρ·P`.
pub fn reward(acc: f64, penalty: u8, rho: f64) -> f64 {
    acc - rho * f64::from(penalty)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    /// Validation accuracy used in the reward (noisy when configured).
    pub acc: f64,
    /// Ideal-simulator accuracy on the same validation set.
    pub acc_ideal: f64,
    /// The design needs more qubits than the device's longest path.
    pub bn: bool,
    /// The selected physical candidate's size differs from the qubit demand.
    pub bq: bool,
    pub penalty: u8,
    pub reward: f64,
    pub n_qubits: usize,
    pub n_params: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub infeasible: Option<String>,
}

impl RewardRecord {
    pub fn new(acc: f64, acc_ideal: f64, bn: bool, bq: bool, rho: f64) -> Self {
        let p = penalty(bn, bq);
        Self {
            acc,
            acc_ideal,
            bn,
            bq,
            penalty: p,
            reward: reward(acc, p, rho),
            n_qubits: 0,
            n_params: 0,
            infeasible: None,
        }
    }

    pub fn infeasible(reason: String, bn: bool, bq: bool, rho: f64) -> Self {
        Self {
            infeasible: Some(reason),
            ..Self::new(0.0, 0.0, bn, bq, rho)
        }
    }
}
