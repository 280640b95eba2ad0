//! Compressed-row complex operators for the density-matrix stepper.

use num_complex::Complex64;

use crate::numerics::ComplexMatrix;

/// Square complex operator in CSR form.
///
/// Only structurally nonzero entries are stored; the oscillator operators are
/// tridiagonal, which makes `A ρ` an `O(N²)` product instead of `O(N³)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOp {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl SparseOp {
    /// Drops exact zeros. Panics if `m` is not square.
    pub fn from_dense(m: &ComplexMatrix) -> Self {
        Self::with_pattern(m, |i, j| m[(i, j)] != Complex64::new(0.0, 0.0))
    }

    /// Operators sharing the union sparsity pattern of `ms` plus the diagonal,
    /// so that linear combinations reduce to combining value arrays.
    pub fn family(ms: &[&ComplexMatrix]) -> Vec<Self> {
        let zero = Complex64::new(0.0, 0.0);
        let keep = |i: usize, j: usize| i == j || ms.iter().any(|m| m[(i, j)] != zero);
        ms.iter().map(|m| Self::with_pattern(m, keep)).collect()
    }

    fn with_pattern(m: &ComplexMatrix, keep: impl Fn(usize, usize) -> bool) -> Self {
        let n = m.rows();
        assert_eq!(n, m.cols(), "sparse operator must be square");
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            for j in 0..n {
                if keep(i, j) {
                    cols.push(j);
                    vals.push(m[(i, j)]);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim: n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[cfg(test)]
    pub(crate) fn same_pattern(&self, other: &Self) -> bool {
        self.row_ptr == other.row_ptr && self.cols == other.cols
    }

    pub(crate) fn values(&self) -> &[Complex64] {
        &self.vals
    }

    pub(crate) fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.vals
    }

    /// `out = self · rho` for row-major `dim × dim` buffers.
    pub fn apply_left(&self, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        debug_assert_eq!(rho.len(), n * n);
        debug_assert_eq!(out.len(), n * n);
        for i in 0..n {
            let row_out = &mut out[i * n..(i + 1) * n];
            row_out.fill(Complex64::new(0.0, 0.0));
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.vals[idx];
                let k = self.cols[idx];
                let src = &rho[k * n..(k + 1) * n];
                for (o, s) in row_out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
    }

    /// `Tr(self · rho)`.
    pub fn trace_with(&self, rho: &[Complex64]) -> Complex64 {
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[idx] * rho[self.cols[idx] * n + i];
            }
        }
        acc
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let n = self.dim;
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[idx])] = self.vals[idx];
            }
        }
        m
    }
}
