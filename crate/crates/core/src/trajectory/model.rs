//! Quantum state, signal state and the measured/fed-back system.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::oscillator::{build_truncated_oscillator, trap_centre, OscillatorOps};
use super::sparse::SparseOp;
use super::TrajectoryError;
use crate::filters::FilterModel;
use crate::numerics::ComplexMatrix;
use crate::protocol::ProtocolParams;

/// Tolerance for Hermiticity of operators and states.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Density matrix of the conditioned state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    rho: ComplexMatrix,
}

impl QuantumState {
    /// Validates Hermiticity (1e-12) and unit trace (1e-10).
    pub fn new(rho: ComplexMatrix) -> Result<Self, TrajectoryError> {
        rho.require_square()?;
        if rho.hermiticity_defect() > HERMITICITY_TOL {
            return Err(TrajectoryError::NotHermitian("density matrix"));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(TrajectoryError::BadTrace(tr.re));
        }
        Ok(Self { rho })
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn pure(psi: &[Complex64]) -> Result<Self, TrajectoryError> {
        let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(TrajectoryError::BadTrace(norm));
        }
        let n = psi.len();
        let mut rho = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                rho[(i, j)] = psi[i] * psi[j].conj() / (norm * norm);
            }
        }
        Ok(Self { rho })
    }

    /// Lowest eigenvector of a Hermitian `h`.
    pub fn ground_state(h: &ComplexMatrix) -> Result<Self, TrajectoryError> {
        h.require_square()?;
        if h.hermiticity_defect() > HERMITICITY_TOL {
            return Err(TrajectoryError::NotHermitian("Hamiltonian"));
        }
        let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
        let k = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k)
            .unwrap_or(0);
        let v: Vec<Complex64> = eig.eigenvectors.column(k).iter().copied().collect();
        Self::pure(&v)
    }

    pub fn dim(&self) -> usize {
        self.rho.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.rho
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        self.rho.as_mut_slice()
    }

    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        self.rho.as_slice().iter().map(|z| z.norm_sqr()).sum()
    }

    /// `Re Tr(A ρ)`.
    pub fn expectation(&self, a: &ComplexMatrix) -> f64 {
        a.matmul(&self.rho).trace().re
    }

    pub fn population(&self, k: usize) -> f64 {
        self.rho[(k, k)].re
    }

    /// Diagnostic: smallest eigenvalue of ρ (Euler–Maruyama may dip below 0).
    pub fn min_eigenvalue(&self) -> f64 {
        nalgebra::SymmetricEigen::new(self.rho.to_nalgebra())
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x))
    }
}

/// Filter state of every measured channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalState {
    channels: Vec<Vec<f64>>,
}

impl SignalState {
    pub fn new(channels: Vec<Vec<f64>>) -> Self {
        Self { channels }
    }

    pub fn zeros(n_channels: usize, filter_dim: usize) -> Self {
        Self {
            channels: vec![vec![0.0; filter_dim]; n_channels],
        }
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub(crate) fn channels_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.channels
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().flatten().all(|x| x.is_finite())
    }
}

pub type FeedbackFn = dyn Fn(&SignalState) -> ComplexMatrix + Send + Sync;

/// How the Hamiltonian depends on the filtered signals.
#[derive(Clone)]
pub enum Feedback {
    /// `H = H₀` regardless of the signals.
    Off,
    /// Harmonic trap centred on the `tap` component of the x- and p-channel
    /// signals; requires exactly two channels measuring x̂ and p̂.
    ShiftedTrap { tap: usize, omega: f64 },
    /// Arbitrary Hermitian-valued rule, re-evaluated every step.
    Custom(Arc<FeedbackFn>),
}

impl fmt::Debug for Feedback {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feedback::Off => f.write_str("Off"),
            Feedback::ShiftedTrap { tap, omega } => f
                .debug_struct("ShiftedTrap")
                .field("tap", tap)
                .field("omega", omega)
                .finish(),
            Feedback::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// Measured system: `H₀`, measured observables sharing one strength `λ`, one
/// filter realization copied per channel and a feedback rule.
#[derive(Debug, Clone)]
pub struct SystemModel {
    h0: ComplexMatrix,
    measured: Vec<ComplexMatrix>,
    lambda: f64,
    filter: FilterModel,
    feedback: Feedback,
    energy_scale: f64,
}

impl SystemModel {
    pub fn new(
        h0: ComplexMatrix,
        measured: Vec<ComplexMatrix>,
        lambda: f64,
        filter: FilterModel,
        feedback: Feedback,
    ) -> Result<Self, TrajectoryError> {
        let n = h0.require_square()?;
        if h0.hermiticity_defect() > HERMITICITY_TOL {
            return Err(TrajectoryError::NotHermitian("H0"));
        }
        for a in &measured {
            if a.rows() != n || a.cols() != n {
                return Err(TrajectoryError::DimensionMismatch {
                    expected: n,
                    got: a.rows(),
                });
            }
            if a.hermiticity_defect() > HERMITICITY_TOL {
                return Err(TrajectoryError::NotHermitian("measured operator"));
            }
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(TrajectoryError::InvalidParameter {
                name: "lambda",
                value: lambda,
            });
        }
        if let Feedback::ShiftedTrap { tap, omega } = feedback {
            if measured.len() != 2 {
                return Err(TrajectoryError::ChannelCount {
                    expected: 2,
                    got: measured.len(),
                });
            }
            if tap >= filter.dim() {
                return Err(TrajectoryError::TapOutOfRange {
                    tap,
                    dim: filter.dim(),
                });
            }
            if !(omega > 0.0 && omega.is_finite()) {
                return Err(TrajectoryError::InvalidParameter {
                    name: "omega",
                    value: omega,
                });
            }
        }
        Ok(Self {
            h0,
            measured,
            lambda,
            filter,
            feedback,
            energy_scale: 1.0,
        })
    }

    /// Energies in records are divided by `scale` (ω for oscillators).
    pub fn with_energy_scale(mut self, scale: f64) -> Self {
        self.energy_scale = scale;
        self
    }

    /// Oscillator with x̂ and p̂ measured and no feedback.
    pub fn measured_oscillator(
        n_fock: usize,
        omega: f64,
        lambda: f64,
        filter: FilterModel,
    ) -> Result<Self, TrajectoryError> {
        let osc = build_truncated_oscillator(n_fock, omega)?;
        Ok(Self::new(osc.h0, vec![osc.x, osc.p], lambda, filter, Feedback::Off)?
            .with_energy_scale(omega))
    }

    /// Oscillator under the shifted-trap feedback of a cooling protocol.
    pub fn cooling_protocol(p: &ProtocolParams, n_fock: usize) -> Result<Self, TrajectoryError> {
        let osc = build_truncated_oscillator(n_fock, p.omega)?;
        Self::from_oscillator(osc, p)
    }

    fn from_oscillator(osc: OscillatorOps, p: &ProtocolParams) -> Result<Self, TrajectoryError> {
        let filter = p.filter()?;
        let feedback = Feedback::ShiftedTrap {
            tap: p.kind.tap(),
            omega: p.omega,
        };
        Ok(Self::new(osc.h0, vec![osc.x, osc.p], p.lambda, filter, feedback)?
            .with_energy_scale(p.omega))
    }

    pub fn dim(&self) -> usize {
        self.h0.rows()
    }

    pub fn h0(&self) -> &ComplexMatrix {
        &self.h0
    }

    pub fn measured(&self) -> &[ComplexMatrix] {
        &self.measured
    }

    pub fn n_channels(&self) -> usize {
        self.measured.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn filter(&self) -> &FilterModel {
        &self.filter
    }

    pub fn feedback(&self) -> &Feedback {
        &self.feedback
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// Dense `H(G)`.
    pub fn hamiltonian(&self, signals: &SignalState) -> Result<ComplexMatrix, TrajectoryError> {
        match &self.feedback {
            Feedback::Off => Ok(self.h0.clone()),
            Feedback::ShiftedTrap { tap, omega } => {
                let (gx, gp) = trap_centre(signals, *tap)?;
                let n = self.dim();
                Ok(self
                    .h0
                    .sub(&self.measured[0].scale(Complex64::new(omega * gx, 0.0)))
                    .sub(&self.measured[1].scale(Complex64::new(omega * gp, 0.0)))
                    .add(&ComplexMatrix::identity(n).scale(Complex64::new(
                        0.5 * omega * (gx * gx + gp * gp),
                        0.0,
                    ))))
            }
            Feedback::Custom(f) => {
                let h = f(signals);
                if h.rows() != self.dim() || h.cols() != self.dim() {
                    return Err(TrajectoryError::DimensionMismatch {
                        expected: self.dim(),
                        got: h.rows(),
                    });
                }
                if h.hermiticity_defect() > HERMITICITY_TOL {
                    return Err(TrajectoryError::NotHermitian("feedback Hamiltonian"));
                }
                Ok(h)
            }
        }
    }
}

/// Sparse Hamiltonian assembly reused across steps.
#[derive(Debug, Clone)]
pub(crate) struct HamiltonianCache {
    mode: CacheMode,
    current: SparseOp,
}

#[derive(Debug, Clone)]
enum CacheMode {
    Fixed,
    Trap {
        tap: usize,
        omega: f64,
        h0: Vec<Complex64>,
        ax: Vec<Complex64>,
        ap: Vec<Complex64>,
        diag: Vec<bool>,
    },
    Dense,
}

impl HamiltonianCache {
    pub(crate) fn new(model: &SystemModel) -> Self {
        match &model.feedback {
            Feedback::Off => Self {
                mode: CacheMode::Fixed,
                current: SparseOp::from_dense(&model.h0),
            },
            Feedback::ShiftedTrap { tap, omega } => {
                let eye = ComplexMatrix::identity(model.dim());
                let fam = SparseOp::family(&[&model.h0, &model.measured[0], &model.measured[1], &eye]);
                let diag = fam[3].values().iter().map(|z| z.re == 1.0).collect();
                Self {
                    mode: CacheMode::Trap {
                        tap: *tap,
                        omega: *omega,
                        h0: fam[0].values().to_vec(),
                        ax: fam[1].values().to_vec(),
                        ap: fam[2].values().to_vec(),
                        diag,
                    },
                    current: fam[0].clone(),
                }
            }
            Feedback::Custom(_) => Self {
                mode: CacheMode::Dense,
                current: SparseOp::from_dense(&model.h0),
            },
        }
    }

    pub(crate) fn update(
        &mut self,
        model: &SystemModel,
        signals: &SignalState,
    ) -> Result<&SparseOp, TrajectoryError> {
        match &self.mode {
            CacheMode::Fixed => {}
            CacheMode::Trap {
                tap,
                omega,
                h0,
                ax,
                ap,
                diag,
            } => {
                let (gx, gp) = trap_centre(signals, *tap)?;
                let shift = 0.5 * omega * (gx * gx + gp * gp);
                let (cx, cp) = (omega * gx, omega * gp);
                for (k, v) in self.current.values_mut().iter_mut().enumerate() {
                    *v = h0[k] - ax[k] * cx - ap[k] * cp;
                    if diag[k] {
                        v.re += shift;
                    }
                }
            }
            CacheMode::Dense => {
                self.current = SparseOp::from_dense(&model.hamiltonian(signals)?);
            }
        }
        Ok(&self.current)
    }
}
