//! Matrix exponential by scaling and squaring around a fixed [13/13] Padé core.

use super::lu::Lu;
use super::matrix::RealMatrix;
use super::NumericsError;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// One-norm bound below which the [13/13] approximant is accurate to unit roundoff.
const THETA_13: f64 = 5.371920351148152;

/// Computes `exp(A t)`.
pub fn mat_exp(a: &RealMatrix, t: f64) -> Result<RealMatrix, NumericsError> {
    let n = a.require_square()?;
    if !t.is_finite() {
        return Err(NumericsError::NonFiniteInput);
    }
    let at = a.scale(t);
    let norm = at.norm_one();
    if norm == 0.0 {
        return Ok(RealMatrix::identity(n));
    }

    let squarings = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let x = at.scale(0.5_f64.powi(squarings));

    let eye = RealMatrix::identity(n);
    let x2 = x.matmul(&x);
    let x4 = x2.matmul(&x2);
    let x6 = x4.matmul(&x2);
    let b = &PADE13;

    let u_inner = x6
        .scale(b[13])
        .add(&x4.scale(b[11]))
        .add(&x2.scale(b[9]));
    let u_tail = x6
        .scale(b[7])
        .add(&x4.scale(b[5]))
        .add(&x2.scale(b[3]))
        .add(&eye.scale(b[1]));
    let u = x.matmul(&x6.matmul(&u_inner).add(&u_tail));

    let v_inner = x6
        .scale(b[12])
        .add(&x4.scale(b[10]))
        .add(&x2.scale(b[8]));
    let v = x6
        .matmul(&v_inner)
        .add(&x6.scale(b[6]))
        .add(&x4.scale(b[4]))
        .add(&x2.scale(b[2]))
        .add(&eye.scale(b[0]));

    let numer = v.add(&u);
    let denom = v.sub(&u);
    let mut r = Lu::factor(&denom)?.solve_matrix(&numer)?;
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    if !r.all_finite() {
        return Err(NumericsError::NonFiniteResult);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &RealMatrix, b: &RealMatrix, rel: f64) {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!(
                (x - y).abs() <= rel * y.abs().max(1e-300) + 1e-300,
                "{x} vs {y}"
            );
        }
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let z = RealMatrix::zeros(2, 2);
        assert_eq!(mat_exp(&z, 7.0).unwrap(), RealMatrix::identity(2));
    }

    #[test]
    fn scalar_decay() {
        let a = RealMatrix::from_rows(&[[-1.0]]).unwrap();
        let e = mat_exp(&a, 1.0).unwrap();
        assert!((e[(0, 0)] - (-1.0f64).exp()).abs() < 1e-15);
        assert!((e[(0, 0)] - 0.3678794412).abs() < 1e-10);
    }

    #[test]
    fn damped_rotation_closed_form() {
        let (g, w, t) = (1.0, 2.0, 0.5);
        let a = RealMatrix::from_rows(&[[-g, -w], [w, -g]]).unwrap();
        let e = mat_exp(&a, t).unwrap();
        let d = (-g * t).exp();
        let (s, c) = (w * t).sin_cos();
        let expected = RealMatrix::from_rows(&[[d * c, -d * s], [d * s, d * c]]).unwrap();
        assert_close(&e, &expected, 1e-12);
    }

    #[test]
    fn large_norm_uses_squaring() {
        let a = RealMatrix::from_rows(&[[-30.0, 0.0], [0.0, 3.0]]).unwrap();
        let e = mat_exp(&a, 1.0).unwrap();
        assert!((e[(0, 0)] / (-30.0f64).exp() - 1.0).abs() < 1e-12);
        assert!((e[(1, 1)] / 3.0f64.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_is_exact() {
        let a = RealMatrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        let e = mat_exp(&a, 2.0).unwrap();
        let expected =
            RealMatrix::from_rows(&[[1.0, 2.0, 2.0], [0.0, 1.0, 2.0], [0.0, 0.0, 1.0]]).unwrap();
        assert_close(&e, &expected, 1e-13);
    }

    #[test]
    fn rejects_non_square() {
        let a = RealMatrix::zeros(2, 3);
        assert!(matches!(mat_exp(&a, 1.0), Err(NumericsError::NotSquare { .. })));
    }
}
