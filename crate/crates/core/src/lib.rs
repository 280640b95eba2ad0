//! Continuous quantum measurement with linearly filtered feedback.
//!
//! The crate is organised bottom-up:
//!
//! * [`numerics`] — small dense linear algebra, RK4 and seeded noise.
//! * [`filters`] — state-space realizations `dG = MG dt + b z dt`.
//! * [`protocol`] — the four oscillator cooling protocols and their parameters.
//! * [`moments`] — the closed moment systems and their steady states.
//! * [`analytics`] — closed-form asymptotic energies and thresholds.
//! * [`trajectory`] — stochastic master-equation Monte Carlo.
//! * [`phase`] — protocol phase diagrams over (γ, Ω).
//! * [`cli`] — the command-line front end.

pub mod analytics;
pub mod cli;
pub mod filters;
pub mod moments;
pub mod numerics;
pub mod output;
pub mod phase;
pub mod protocol;
pub mod trajectory;

pub use analytics::{EnergyNote, EnergyResult};
pub use filters::FilterModel;
pub use moments::{MomentSystem, SteadyState};
pub use protocol::{ProtocolKind, ProtocolParams};
