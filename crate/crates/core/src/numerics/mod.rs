//! Dense linear-algebra kernel: matrices, solves, exponentials, eigenvalues,
//! RK4 for affine systems and seeded Gaussian noise.

mod eigen;
mod expm;
mod lu;
mod matrix;
mod noise;
mod ode;

pub use eigen::{eigenvalues, spectral_abscissa};
pub use expm::mat_exp;
pub use lu::{solve_linear, Lu, MAX_CONDITION_ESTIMATE};
pub use matrix::{norm2, ComplexMatrix, Matrix, RealMatrix, Scalar};
pub use noise::NoiseStream;
pub use ode::integrate_affine;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("computation produced non-finite values")]
    NonFiniteResult,
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is singular (zero pivot in column {pivot})")]
    Singular { pivot: usize },
    #[error("matrix is ill-conditioned (pivot-ratio estimate {estimate:.3e})")]
    IllConditioned { estimate: f64 },
    #[error("eigenvalue iteration did not converge")]
    EigenNoConvergence,
    #[error("step size must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("integration overflowed to non-finite values at step {step}")]
    Overflow { step: usize },
}
