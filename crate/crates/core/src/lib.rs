//! Spatial-temporal variational quantum circuits on a state-vector simulator.
//!
//! The crate covers the full pipeline: encoding classical data into qubit
//! registers, building trainable circuit templates, compiling them to a device
//! coupling graph, training with parameter-shift gradients, and searching the
//! design space with a recurrent policy controller.

pub mod ansatz;
pub mod baselines;
pub mod compiler;
pub mod data;
pub mod encoder;
pub mod error;
pub mod search;
pub mod sim;
pub mod trainer;

pub use error::{Error, Result};
