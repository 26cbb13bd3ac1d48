//! Design-space search: segment masks, a recurrent REINFORCE controller, and
//! penalized rewards from training and noisy validation.

pub mod controller;
pub mod reward;
pub mod run;
pub mod space;

pub use controller::{ControllerConfig, ControllerPolicy};
pub use reward::{penalty, reward, RewardRecord, DEFAULT_RHO};
pub use run::{
    best_index, evaluate_solution, placed_spec, random_search, retrain_best, running_best, sample, sample_greedy, sample_uniform,
    search, write_history_csv, write_jsonl, HistoryEntry, SearchConfig, SearchResult, SolutionSample,
};
pub use space::{select_optimizers, DataKind, Decoded, InputKind, SearchSpace, Segment, SegmentMask, Slot};
