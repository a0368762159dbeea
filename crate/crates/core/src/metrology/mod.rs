//! Accuracy-limited measurement of the clock observable, the arccos
//! filter/parity decision, and exact phase-estimation statistics.

mod accuracy;
mod decision;
mod phase;

use thiserror::Error;

pub use accuracy::{
    batch_rng, draw_batches, sample_exact, sample_with_accuracy, AccuracyModel, ExactSampler, FailureMode,
    SampleBatch, POSTULATE_SUCCESS,
};
pub use decision::{
    batch_csv, chernoff_confidence, decide, decide_values, filter_round, DecisionResult, GridPoint,
    MIN_FILTERED, ODD_FRACTION_FALSE, ODD_FRACTION_TRUE, PROBABILITY_GAP, THRESHOLD,
};
pub use phase::{
    kernel, phase_estimate_distribution, sample_phase_estimate, PhaseEstimationSetup, PhaseSampler,
    MAX_ANCILLAS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetrologyError {
    #[error("invalid accuracy model: {0}")]
    InvalidModel(String),
    #[error("{m} ancillas exceed the cap of {cap}")]
    AncillaCap { m: u32, cap: u32 },
    #[error("invalid phase-estimation setup: {0}")]
    InvalidSetup(String),
}
