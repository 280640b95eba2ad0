//! Monte Carlo unraveling of the measured, filtered and fed-back system.
//!
//! Each trajectory co-integrates the conditioned density matrix with the
//! filter signals of every measured channel; ensemble averages over
//! trajectories sample the joint distribution of state and signals.

mod ensemble;
mod model;
mod oscillator;
mod sparse;
mod stepper;

pub use ensemble::{
    run_ensemble, run_signal_ensemble, SeriesStats, SignalRecord, TrajectoryConfig, TrajectoryRecord,
    TRUNCATION_WARNING_LEVEL,
};
pub use model::{Feedback, FeedbackFn, QuantumState, SignalState, SystemModel, HERMITICITY_TOL};
pub use oscillator::{build_truncated_oscillator, shifted_trap_feedback, OscillatorOps};
pub use sparse::SparseOp;
pub use stepper::Stepper;

use thiserror::Error;

use crate::filters::FilterError;
use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("Fock cutoff must be at least 3, got {0}")]
    CutoffTooSmall(usize),
    #[error("{name} is invalid: {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("{0} is not Hermitian")]
    NotHermitian(&'static str),
    #[error("density matrix trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("expected {expected} channels, got {got}")]
    ChannelCount { expected: usize, got: usize },
    #[error("tap {tap} out of range for a filter of dimension {dim}")]
    TapOutOfRange { tap: usize, dim: usize },
    #[error("non-finite state at step {step}{}", .trajectory.map(|t| format!(" of trajectory {t}")).unwrap_or_default())]
    NonFinite {
        trajectory: Option<usize>,
        step: usize,
    },
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl TrajectoryError {
    pub(crate) fn in_trajectory(self, index: usize) -> Self {
        match self {
            TrajectoryError::NonFinite { step, .. } => TrajectoryError::NonFinite {
                trajectory: Some(index),
                step,
            },
            other => other,
        }
    }
}
