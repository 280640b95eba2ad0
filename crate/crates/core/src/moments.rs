//! Closed moment systems `dx/dt = A x + c` for the oscillator cooling protocols.
//!
//! Each component is an ensemble expectation value; component 0 is always
//! the feedback-Hamiltonian energy in units of ħω. The systems are written
//! out explicitly per protocol, not derived at runtime.

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{self, integrate_affine, solve_linear, NumericsError, RealMatrix};
use crate::protocol::{ProtocolKind, ProtocolParams};

/// Slack on the ground-state energy ½ħω when classifying physicality.
pub const PHYSICAL_SLACK: f64 = 1e-9;
/// Stability requires max Re(eig) < −STABILITY_REL_TOL·‖A‖∞.
pub const STABILITY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MomentError {
    #[error("expected a {expected} protocol, got {got}")]
    WrongKind {
        expected: ProtocolKind,
        got: ProtocolKind,
    },
    #[error("protocol {0} requires Omega")]
    MissingBigOmega(ProtocolKind),
    #[error("no unique steady state: {0}")]
    NoUniqueSteadyState(NumericsError),
    #[error("initial condition has length {got}, system has dimension {expected}")]
    InitialCondition { expected: usize, got: usize },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Affine ODE system over labeled expectation values.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentSystem {
    kind: ProtocolKind,
    a: RealMatrix,
    c: Vec<f64>,
    labels: Vec<&'static str>,
    energy_index: usize,
}

impl MomentSystem {
    pub fn kind(&self) -> ProtocolKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.a
    }

    pub fn offset(&self) -> &[f64] {
        &self.c
    }

    pub fn labels(&self) -> &[&'static str] {
        &self.labels
    }

    pub fn energy_index(&self) -> usize {
        self.energy_index
    }

    /// Initial vector with energy `e0` and every correlator zero, as for an
    /// ensemble starting in the ground state with zero signals when `e0 = ½`.
    pub fn initial_from_energy(&self, e0: f64) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        x[self.energy_index] = e0;
        x
    }

    /// `A x + c`.
    pub fn rate(&self, x: &[f64]) -> Vec<f64> {
        let mut r = self.a.mul_vec(x);
        for (ri, ci) in r.iter_mut().zip(&self.c) {
            *ri += ci;
        }
        r
    }
}

const SINGLE_LABELS: [&str; 1] = ["<H1>/hw"];

const R_LABELS: [&str; 4] = [
    "<H2>/hw",
    "<(x-Dx2)(Dx1-Dx2)>+<(p-Dp2)(Dp1-Dp2)>",
    "<(Dx1-Dx2)^2>+<(Dp1-Dp2)^2>",
    "<(x-Dx2)(Dp1-Dp2)>-<(p-Dp2)(Dx1-Dx2)>",
];

const S_LABELS: [&str; 9] = [
    "<H3>/hw",
    "<(x-Dx3)(Dx2-Dx3)>+<(p-Dp3)(Dp2-Dp3)>",
    "<(p-Dp3)(Dx2-Dx3)>-<(x-Dx3)(Dp2-Dp3)>",
    "<(Dx2-Dx3)^2>+<(Dp2-Dp3)^2>",
    "<(x-Dx3)(Dx1-Dx2)>+<(p-Dp3)(Dp1-Dp2)>",
    "<(p-Dp3)(Dx1-Dx2)>-<(x-Dx3)(Dp1-Dp2)>",
    "<(Dx1-Dx2)(Dx2-Dx3)>+<(Dp1-Dp2)(Dp2-Dp3)>",
    "<(Dp2-Dp3)(Dx1-Dx2)>-<(Dx2-Dx3)(Dp1-Dp2)>",
    "<(Dx1-Dx2)^2>+<(Dp1-Dp2)^2>",
];

const T_LABELS: [&str; 9] = [
    "<H_BP>/hw",
    "<(x-Ex1)Ex2>+<(p-Ep1)Ep2>",
    "<(x-Ex1)Ep2>-<(p-Ep1)Ex2>",
    "<Ex2^2+Ep2^2>",
    "<(x-Ex1)Ex1>+<(p-Ep1)Ep1>",
    "<(x-Ex1)Ep1>-<(p-Ep1)Ex1>",
    "<Ex1Ex2+Ep1Ep2>",
    "<Ex2Ep1-Ep2Ex1>",
    "<Ex1^2+Ep1^2>",
];

fn expect_kind(p: &ProtocolParams, expected: ProtocolKind) -> Result<(), MomentError> {
    if p.kind == expected {
        Ok(())
    } else {
        Err(MomentError::WrongKind {
            expected,
            got: p.kind,
        })
    }
}

fn big_omega(p: &ProtocolParams) -> Result<f64, MomentError> {
    p.big_omega.ok_or(MomentError::MissingBigOmega(p.kind))
}

/// `dU/dt = −2γ U + (λ + γ²/4λ)`, relaxing to `½(λ/γ + γ/4λ)`.
pub fn build_single_layer(p: &ProtocolParams) -> Result<MomentSystem, MomentError> {
    expect_kind(p, ProtocolKind::LowPass1)?;
    let (l, g) = (p.lambda, p.gamma);
    let u_inf = 0.5 * (l / g + g / (4.0 * l));
    Ok(MomentSystem {
        kind: p.kind,
        a: RealMatrix::from_rows(&[[-2.0 * g]])?,
        c: vec![2.0 * g * u_inf],
        labels: SINGLE_LABELS.to_vec(),
        energy_index: 0,
    })
}

/// Four-component system for feedback on the second of two low-pass stages.
pub fn build_two_layer(p: &ProtocolParams) -> Result<MomentSystem, MomentError> {
    expect_kind(p, ProtocolKind::LowPass2)?;
    let (l, g, w) = (p.lambda, p.gamma, p.omega);
    let o = big_omega(p)?;
    let s = o + g;
    let a = RealMatrix::from_rows(&[
        [0.0, -o, 0.0, 0.0],
        [2.0 * g, -s, -o, -w],
        [0.0, 2.0 * g, -2.0 * s, 0.0],
        [0.0, w, 0.0, -s],
    ])?;
    Ok(MomentSystem {
        kind: p.kind,
        a,
        c: vec![l, 0.0, g * g / (2.0 * l), 0.0],
        labels: R_LABELS.to_vec(),
        energy_index: 0,
    })
}

/// Nine-component system for feedback on the third stage of a (γ, Ω, Ω) cascade.
pub fn build_three_layer(p: &ProtocolParams) -> Result<MomentSystem, MomentError> {
    expect_kind(p, ProtocolKind::LowPass3)?;
    let (l, g, w) = (p.lambda, p.gamma, p.omega);
    let o = big_omega(p)?;
    #[rustfmt::skip]
    let a = RealMatrix::from_rows(&[
        [0.0,     -o,  0.0,      0.0,  0.0,       0.0,  0.0,             0.0,             0.0],
        [0.0,     -o,  w,        -o,   o,         0.0,  0.0,             0.0,             0.0],
        [0.0,     -w,  -o,       0.0,  0.0,       o,    0.0,             0.0,             0.0],
        [0.0,     0.0, 0.0,      -2.0 * o, 0.0,   0.0,  2.0 * o,         0.0,             0.0],
        [2.0 * g, -g,  0.0,      0.0,  -(g + o),  w,    -o,              0.0,             0.0],
        [0.0,     0.0, -g,       0.0,  -w,        -(g + o), 0.0,         -o,              0.0],
        [0.0,     g,   0.0,      -g,   0.0,       0.0,  -(2.0 * o + g),  0.0,             o],
        [0.0,     0.0, -g,       0.0,  0.0,       0.0,  0.0,             -(2.0 * o + g),  0.0],
        [0.0,     0.0, 0.0,      0.0,  2.0 * g,   0.0,  -2.0 * g,        0.0,             -2.0 * (o + g)],
    ])?;
    let mut c = vec![0.0; 9];
    c[0] = l;
    c[8] = g * g / (2.0 * l);
    Ok(MomentSystem {
        kind: p.kind,
        a,
        c,
        labels: S_LABELS.to_vec(),
        energy_index: 0,
    })
}

/// Nine-component system for feedback on the band-pass quadrature `E₁`.
///
/// The energy row is driven by `λ + γ²/4λ`, i.e. `2γ` times the single-layer
/// asymptotic energy; with this constant the fixed point reproduces the
/// closed-form band-pass energy.
pub fn build_bandpass_moments(p: &ProtocolParams) -> Result<MomentSystem, MomentError> {
    expect_kind(p, ProtocolKind::BandPass)?;
    let (l, g, w) = (p.lambda, p.gamma, p.omega);
    let o = big_omega(p)?;
    #[rustfmt::skip]
    let a = RealMatrix::from_rows(&[
        [-2.0 * g, o,        0.0,      0.0,      0.0,      0.0,  0.0,      0.0,  0.0],
        [0.0,      -2.0 * g, -w,       o,        o,        0.0,  0.0,      0.0,  0.0],
        [0.0,      w,        -2.0 * g, 0.0,      0.0,      o,    0.0,      0.0,  0.0],
        [0.0,      0.0,      0.0,      -2.0 * g, 0.0,      0.0,  2.0 * o,  0.0,  0.0],
        [2.0 * g,  -o,       0.0,      0.0,      -g,       -w,   o,        0.0,  0.0],
        [0.0,      0.0,      -o,       0.0,      w,        -g,   0.0,      o,    0.0],
        [0.0,      g,        0.0,      -o,       0.0,      0.0,  -g,       0.0,  o],
        [0.0,      0.0,      -g,       0.0,      0.0,      0.0,  0.0,      -g,   0.0],
        [0.0,      0.0,      0.0,      0.0,      2.0 * g,  0.0,  -2.0 * o, 0.0,  0.0],
    ])?;
    let mut c = vec![0.0; 9];
    c[0] = l + g * g / (4.0 * l);
    c[4] = -g * g / (2.0 * l);
    c[8] = g * g / (2.0 * l);
    Ok(MomentSystem {
        kind: p.kind,
        a,
        c,
        labels: T_LABELS.to_vec(),
        energy_index: 0,
    })
}

/// Dispatches on `p.kind`.
pub fn build(p: &ProtocolParams) -> Result<MomentSystem, MomentError> {
    match p.kind {
        ProtocolKind::LowPass1 => build_single_layer(p),
        ProtocolKind::LowPass2 => build_two_layer(p),
        ProtocolKind::LowPass3 => build_three_layer(p),
        ProtocolKind::BandPass => build_bandpass_moments(p),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Stable fixed point at or above the ground-state energy.
    Cooling,
    /// Stable fixed point below ħω/2: the moment closure has broken down.
    Unphysical,
    /// Some mode grows: the ensemble energy does not settle.
    Heating,
}

impl Regime {
    pub fn label(self) -> &'static str {
        match self {
            Regime::Cooling => "cooling",
            Regime::Unphysical => "unphysical",
            Regime::Heating => "heating",
        }
    }
}

/// Fixed point of a moment system together with its stability data.
///
/// `values` is the formal solution of `A x = −c`; it is only a long-time limit
/// when `stable` holds.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub values: Vec<f64>,
    pub energy_over_hw: f64,
    pub eigenvalues: Vec<Complex64>,
    pub stable: bool,
    pub physical: bool,
    /// `‖A x + c‖∞ / ‖c‖∞` at the returned fixed point.
    pub residual: f64,
}

impl SteadyState {
    pub fn regime(&self) -> Regime {
        match (self.stable, self.physical) {
            (false, _) => Regime::Heating,
            (true, false) => Regime::Unphysical,
            (true, true) => Regime::Cooling,
        }
    }

    /// Largest real part of the spectrum.
    pub fn spectral_abscissa(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn is_physical(energy_over_hw: f64) -> bool {
    energy_over_hw >= 0.5 - PHYSICAL_SLACK
}

/// Stability test shared by every caller: max Re(eig) < −tol·‖A‖∞.
pub fn is_stable(a: &RealMatrix, eigenvalues: &[Complex64]) -> bool {
    let bound = -STABILITY_REL_TOL * a.norm_inf();
    eigenvalues.iter().all(|z| z.re < bound)
}

/// Solves `A x = −c` and classifies the fixed point.
pub fn steady_state(sys: &MomentSystem) -> Result<SteadyState, MomentError> {
    let neg_c: Vec<f64> = sys.c.iter().map(|x| -x).collect();
    let values = solve_linear(&sys.a, &neg_c).map_err(|e| match e {
        NumericsError::Singular { .. }
        | NumericsError::IllConditioned { .. }
        | NumericsError::NonFiniteResult => MomentError::NoUniqueSteadyState(e),
        other => MomentError::Numerics(other),
    })?;
    let eigenvalues = numerics::eigenvalues(&sys.a)?;
    let stable = is_stable(&sys.a, &eigenvalues);
    let energy = values[sys.energy_index];
    let c_norm = sys.c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let residual = sys
        .rate(&values)
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.abs()))
        / c_norm.max(f64::MIN_POSITIVE);
    Ok(SteadyState {
        values,
        energy_over_hw: energy,
        eigenvalues,
        stable,
        physical: is_physical(energy),
        residual,
    })
}

/// RK4 path of the moment system from `x0`; `n + 1` states.
pub fn evolve(
    sys: &MomentSystem,
    x0: &[f64],
    dt: f64,
    n: usize,
) -> Result<Vec<Vec<f64>>, MomentError> {
    if x0.len() != sys.dim() {
        return Err(MomentError::InitialCondition {
            expected: sys.dim(),
            got: x0.len(),
        });
    }
    Ok(integrate_affine(&sys.a, &sys.c, x0, dt, n)?)
}

/// Monic coefficients of `det(sI − A)` in descending powers, by the
/// Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial(a: &RealMatrix) -> Result<Vec<f64>, NumericsError> {
    let n = a.require_square()?;
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(1.0);
    let mut m = RealMatrix::zeros(n, n);
    let eye = RealMatrix::identity(n);
    let mut c_prev = 1.0;
    for k in 1..=n {
        m = a.matmul(&m).add(&eye.scale(c_prev));
        let am = a.matmul(&m);
        let c_k = -am.trace() / k as f64;
        coeffs.push(c_k);
        c_prev = c_k;
    }
    Ok(coeffs)
}
