//! Fixed-step RK4 for affine systems `dx/dt = A x + c`.

use super::matrix::RealMatrix;
use super::NumericsError;

/// Integrates `dx/dt = A x + c` from `x0` with `n` classical RK4 steps of size
/// `dt`. Returns `n + 1` states, the first being `x0`.
pub fn integrate_affine(
    a: &RealMatrix,
    c: &[f64],
    x0: &[f64],
    dt: f64,
    n: usize,
) -> Result<Vec<Vec<f64>>, NumericsError> {
    let m = a.require_square()?;
    if c.len() != m || x0.len() != m {
        return Err(NumericsError::ShapeMismatch {
            expected: m,
            got: if c.len() != m { c.len() } else { x0.len() },
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(NumericsError::InvalidStep(dt));
    }

    let rhs = |x: &[f64]| -> Vec<f64> {
        let mut out = a.mul_vec(x);
        for (o, ci) in out.iter_mut().zip(c) {
            *o += ci;
        }
        out
    };
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(xi, ki)| xi + h * ki).collect()
    };

    let mut path = Vec::with_capacity(n + 1);
    path.push(x0.to_vec());
    let mut x = x0.to_vec();
    for step in 1..=n {
        let k1 = rhs(&x);
        let k2 = rhs(&axpy(&x, &k1, 0.5 * dt));
        let k3 = rhs(&axpy(&x, &k2, 0.5 * dt));
        let k4 = rhs(&axpy(&x, &k3, dt));
        for i in 0..m {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::Overflow { step });
        }
        path.push(x.clone());
    }
    Ok(path)
}
