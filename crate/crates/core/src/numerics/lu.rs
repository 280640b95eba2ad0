//! Partial-pivot LU factorization and linear solves.

use super::matrix::{Matrix, Scalar};
use super::NumericsError;

/// Pivot-ratio condition estimate above which a system is rejected.
pub const MAX_CONDITION_ESTIMATE: f64 = 1e12;

/// `P A = L U` with unit-diagonal `L`, packed into a single matrix.
#[derive(Clone, Debug)]
pub struct Lu<T> {
    packed: Matrix<T>,
    perm: Vec<usize>,
    condition_estimate: f64,
}

impl<T: Scalar> Lu<T> {
    pub fn factor(a: &Matrix<T>) -> Result<Self, NumericsError> {
        let n = a.require_square()?;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.max_abs();

        for k in 0..n {
            let (pivot_row, pivot_abs) = (k..n)
                .map(|i| (i, lu[(i, k)].modulus()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs == 0.0 || pivot_abs <= scale * f64::EPSILON * 1e-4 {
                return Err(NumericsError::Singular { pivot: k });
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                let cols = lu.cols();
                let data = lu.as_mut_slice();
                for j in 0..cols {
                    data.swap(k * cols + j, pivot_row * cols + j);
                }
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor == T::zero() {
                    continue;
                }
                for j in (k + 1)..n {
                    let ukj = lu[(k, j)];
                    lu[(i, j)] = lu[(i, j)] - factor * ukj;
                }
            }
        }

        let (min_pivot, max_pivot) = (0..n)
            .map(|i| lu[(i, i)].modulus())
            .fold((f64::INFINITY, 0.0_f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
        let condition_estimate = max_pivot / min_pivot;
        if !(condition_estimate <= MAX_CONDITION_ESTIMATE) {
            return Err(NumericsError::IllConditioned {
                estimate: condition_estimate,
            });
        }
        Ok(Self {
            packed: lu,
            perm,
            condition_estimate,
        })
    }

    /// Ratio of the largest to the smallest pivot magnitude.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    pub fn solve(&self, y: &[T]) -> Result<Vec<T>, NumericsError> {
        let n = self.dim();
        if y.len() != n {
            return Err(NumericsError::ShapeMismatch {
                expected: n,
                got: y.len(),
            });
        }
        let lu = &self.packed;
        let mut x: Vec<T> = self.perm.iter().map(|&p| y[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc = acc - lu[(i, j)] * x[j];
            }
            x[i] = acc / lu[(i, i)];
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(NumericsError::NonFiniteResult);
        }
        Ok(x)
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix<T>) -> Result<Matrix<T>, NumericsError> {
        let n = self.dim();
        if b.rows() != n {
            return Err(NumericsError::ShapeMismatch {
                expected: n,
                got: b.rows(),
            });
        }
        let mut out = Matrix::zeros(n, b.cols());
        for j in 0..b.cols() {
            let col: Vec<T> = (0..n).map(|i| b[(i, j)]).collect();
            let x = self.solve(&col)?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }
}

/// Solves `A x = y` by partial-pivot elimination.
///
/// Fails instead of returning garbage when a pivot vanishes or the pivot-ratio
/// condition estimate exceeds [`MAX_CONDITION_ESTIMATE`].
pub fn solve_linear<T: Scalar>(a: &Matrix<T>, y: &[T]) -> Result<Vec<T>, NumericsError> {
    Lu::factor(a)?.solve(y)
}
