//! Eigenvalues of small dense real matrices.

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::matrix::RealMatrix;
use super::NumericsError;

const SCHUR_MAX_ITERATIONS: usize = 10_000;

/// All eigenvalues of a square real matrix, sorted by descending real part
/// (ties by descending imaginary part).
pub fn eigenvalues(a: &RealMatrix) -> Result<Vec<Complex64>, NumericsError> {
    a.require_square()?;
    let schur = Schur::try_new(a.to_nalgebra(), f64::EPSILON, SCHUR_MAX_ITERATIONS)
        .ok_or(NumericsError::EigenNoConvergence)?;
    let mut eig: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    eig.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
    Ok(eig)
}

/// Largest real part among the eigenvalues (the spectral abscissa).
pub fn spectral_abscissa(a: &RealMatrix) -> Result<f64, NumericsError> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}
