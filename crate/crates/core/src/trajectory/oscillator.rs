//! Truncated harmonic oscillator and the shifted-trap feedback Hamiltonian.

use num_complex::Complex64;

use super::{SignalState, TrajectoryError};
use crate::numerics::ComplexMatrix;

/// Dimensionless quadratures and bare Hamiltonian on a Fock cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatorOps {
    pub omega: f64,
    /// `(ω/2)(x̂² + p̂²)`, with the squares taken as truncated products.
    pub h0: ComplexMatrix,
    /// `(â + â†)/√2`.
    pub x: ComplexMatrix,
    /// `(â − â†)/(i√2)`.
    pub p: ComplexMatrix,
}

impl OscillatorOps {
    pub fn dim(&self) -> usize {
        self.h0.rows()
    }
}

/// Builds `x̂`, `p̂` and `Ĥ₀` on Fock states `|0⟩ … |N−1⟩`.
///
/// Away from the cutoff the algebra is exact: `[x̂, p̂] = i` except in the last
/// diagonal entry and `Ĥ₀` is diagonal with `ω(n + ½)` for `n < N − 1`.
pub fn build_truncated_oscillator(n: usize, omega: f64) -> Result<OscillatorOps, TrajectoryError> {
    if n < 3 {
        return Err(TrajectoryError::CutoffTooSmall(n));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(TrajectoryError::InvalidParameter {
            name: "omega",
            value: omega,
        });
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut x = ComplexMatrix::zeros(n, n);
    let mut p = ComplexMatrix::zeros(n, n);
    for k in 0..n - 1 {
        let s = ((k + 1) as f64 / 2.0).sqrt();
        x[(k, k + 1)] = Complex64::new(s, 0.0);
        x[(k + 1, k)] = Complex64::new(s, 0.0);
        p[(k, k + 1)] = Complex64::new(0.0, -s);
        p[(k + 1, k)] = Complex64::new(0.0, s);
    }
    let mut h0 = x.matmul(&x).add(&p.matmul(&p)).scale(Complex64::new(omega / 2.0, 0.0));
    // The products are exactly diagonal; clear rounding residue off the diagonal.
    for i in 0..n {
        for j in 0..n {
            if i != j {
                h0[(i, j)] = zero;
            } else {
                h0[(i, i)].im = 0.0;
            }
        }
    }
    Ok(OscillatorOps { omega, h0, x, p })
}

/// `(ω/2)[(p̂ − g_p)² + (x̂ − g_x)²]` with `g_x`, `g_p` the `tap` components of
/// the x- and p-channel signals.
pub fn shifted_trap_feedback(
    osc: &OscillatorOps,
    signals: &SignalState,
    tap: usize,
) -> Result<ComplexMatrix, TrajectoryError> {
    let (gx, gp) = trap_centre(signals, tap)?;
    let n = osc.dim();
    let eye = ComplexMatrix::identity(n);
    let dx = osc.x.sub(&eye.scale(Complex64::new(gx, 0.0)));
    let dp = osc.p.sub(&eye.scale(Complex64::new(gp, 0.0)));
    Ok(dx
        .matmul(&dx)
        .add(&dp.matmul(&dp))
        .scale(Complex64::new(osc.omega / 2.0, 0.0)))
}

pub(crate) fn trap_centre(signals: &SignalState, tap: usize) -> Result<(f64, f64), TrajectoryError> {
    let ch = signals.channels();
    if ch.len() != 2 {
        return Err(TrajectoryError::ChannelCount {
            expected: 2,
            got: ch.len(),
        });
    }
    let dim = ch[0].len();
    if tap >= dim || ch[1].len() != dim {
        return Err(TrajectoryError::TapOutOfRange { tap, dim });
    }
    Ok((ch[0][tap], ch[1][tap]))
}
