//! Linear filter realizations `dG = M G dt + b z dt`.
//!
//! Three families are provided: cascades of exponential low-pass stages
//! (`D₁…Dₙ`), the band-pass quadrature pair (`E₁, E₂`) and companion-form
//! realizations of kernels obeying a finite linear ODE (`F₁…Fₙ`).

use num_complex::Complex64;
use thiserror::Error;

use crate::numerics::{self, mat_exp, solve_linear, ComplexMatrix, NumericsError, RealMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FilterError {
    #[error("a low-pass cascade needs at least one stage")]
    EmptyCascade,
    #[error("filter rate must be strictly positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("band-pass centre frequency must be non-negative and finite, got {0}")]
    NegativeCentre(f64),
    #[error("kernel order must be at least 1")]
    ZeroOrder,
    #[error("kernel of order {order} needs {order} coefficients and {order} initial derivatives, got {coefficients} and {derivatives}")]
    KernelShape {
        order: usize,
        coefficients: usize,
        derivatives: usize,
    },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("frequency {0} is resonant with the filter (iν is an eigenvalue of M)")]
    Resonant(f64),
    #[error("measurement strength must be positive, got {0}")]
    NonPositiveStrength(f64),
    #[error("no stationary state: M has an eigenvalue with real part {0} >= 0")]
    NoStationaryState(f64),
    #[error("invalid filter realization: {0}")]
    Invalid(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    LowPassCascade,
    BandPass,
    Kernel,
    Custom,
}

impl FilterKind {
    pub fn label(self) -> &'static str {
        match self {
            FilterKind::LowPassCascade => "lowpass",
            FilterKind::BandPass => "bandpass",
            FilterKind::Kernel => "kernel",
            FilterKind::Custom => "custom",
        }
    }
}

/// A linear filter realization: drift matrix `M`, input vector `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterModel {
    m: RealMatrix,
    b: Vec<f64>,
    kind: FilterKind,
    component_names: Vec<String>,
}

impl FilterModel {
    /// Arbitrary realization. Component names default to `G1…Gn`.
    pub fn new(m: RealMatrix, b: Vec<f64>) -> Result<Self, FilterError> {
        let n = m.require_square()?;
        if b.len() != n {
            return Err(FilterError::Invalid(format!(
                "b has length {} but M is {n}x{n}",
                b.len()
            )));
        }
        if b.iter().any(|x| !x.is_finite()) {
            return Err(FilterError::Invalid("b has non-finite entries".into()));
        }
        let names = (1..=n).map(|k| format!("G{k}")).collect();
        Ok(Self {
            m,
            b,
            kind: FilterKind::Custom,
            component_names: names,
        })
    }

    fn with_kind(mut self, kind: FilterKind, prefix: &str) -> Self {
        self.kind = kind;
        self.component_names = (1..=self.dim()).map(|k| format!("{prefix}{k}")).collect();
        self
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn drift(&self) -> &RealMatrix {
        &self.m
    }

    pub fn input(&self) -> &[f64] {
        &self.b
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn component_names(&self) -> &[String] {
        &self.component_names
    }
}

/// Coefficients and initial derivatives of a kernel obeying
/// `f⁽ⁿ⁾ + a_{n−1} f⁽ⁿ⁻¹⁾ + … + a₀ f = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    coefficients: Vec<f64>,
    initial_derivatives: Vec<f64>,
}

impl KernelSpec {
    pub fn new(coefficients: Vec<f64>, initial_derivatives: Vec<f64>) -> Result<Self, FilterError> {
        let order = coefficients.len();
        if order == 0 && initial_derivatives.is_empty() {
            return Err(FilterError::ZeroOrder);
        }
        if initial_derivatives.len() != order {
            return Err(FilterError::KernelShape {
                order: order.max(initial_derivatives.len()),
                coefficients: order,
                derivatives: initial_derivatives.len(),
            });
        }
        if coefficients
            .iter()
            .chain(&initial_derivatives)
            .any(|x| !x.is_finite())
        {
            return Err(FilterError::Invalid("kernel data must be finite".into()));
        }
        Ok(Self {
            coefficients,
            initial_derivatives,
        })
    }

    /// Kernel `γ e^{−γt} cos Ωt` of the band-pass filter.
    pub fn bandpass(gamma: f64, omega_c: f64) -> Result<Self, FilterError> {
        Self::new(
            vec![gamma * gamma + omega_c * omega_c, 2.0 * gamma],
            vec![gamma, -gamma * gamma],
        )
    }

    pub fn order(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn initial_derivatives(&self) -> &[f64] {
        &self.initial_derivatives
    }
}

fn check_rate(rate: f64) -> Result<(), FilterError> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(FilterError::NonPositiveRate(rate))
    }
}

/// Cascade of exponential low-pass stages with bandwidths `gammas`; stage `k`
/// smooths the output of stage `k−1`, the first stage smooths the record.
pub fn lowpass_cascade(gammas: &[f64]) -> Result<FilterModel, FilterError> {
    if gammas.is_empty() {
        return Err(FilterError::EmptyCascade);
    }
    for &g in gammas {
        check_rate(g)?;
    }
    let n = gammas.len();
    let mut m = RealMatrix::zeros(n, n);
    for (k, &g) in gammas.iter().enumerate() {
        m[(k, k)] = -g;
        if k > 0 {
            m[(k, k - 1)] = g;
        }
    }
    let mut b = vec![0.0; n];
    b[0] = gammas[0];
    Ok(FilterModel::new(m, b)?.with_kind(FilterKind::LowPassCascade, "D"))
}

/// Band-pass quadratures: `E₁` is the record smoothed by `γ e^{−γt} cos Ωt`,
/// `E₂` the matching sine quadrature.
pub fn bandpass(gamma: f64, omega_c: f64) -> Result<FilterModel, FilterError> {
    check_rate(gamma)?;
    if !(omega_c >= 0.0) || !omega_c.is_finite() {
        return Err(FilterError::NegativeCentre(omega_c));
    }
    let m = RealMatrix::from_rows(&[[-gamma, -omega_c], [omega_c, -gamma]])?;
    Ok(FilterModel::new(m, vec![gamma, 0.0])?.with_kind(FilterKind::BandPass, "E"))
}

/// Companion-form realization of a kernel filter. Component `k` is the record
/// convolved with `f⁽ᵏ⁻¹⁾`.
pub fn kernel_filter(spec: &KernelSpec) -> Result<FilterModel, FilterError> {
    let n = spec.order();
    if n == 0 {
        return Err(FilterError::ZeroOrder);
    }
    let mut m = RealMatrix::zeros(n, n);
    for k in 0..n - 1 {
        m[(k, k + 1)] = 1.0;
    }
    for (j, &a) in spec.coefficients().iter().enumerate() {
        m[(n - 1, j)] = -a;
    }
    Ok(FilterModel::new(m, spec.initial_derivatives().to_vec())?.with_kind(FilterKind::Kernel, "F"))
}

/// Response of every component to a unit impulse in the record: `e^{Mt} b`.
pub fn impulse_response(model: &FilterModel, t: f64) -> Result<Vec<f64>, FilterError> {
    if !(t >= 0.0) {
        return Err(FilterError::NegativeTime(t));
    }
    Ok(mat_exp(model.drift(), t)?.mul_vec(model.input()))
}

/// Frequency response `(iνI − M)⁻¹ b` of every component.
pub fn transfer_function(model: &FilterModel, nu: f64) -> Result<Vec<Complex64>, FilterError> {
    let n = model.dim();
    let mut a: ComplexMatrix = model.drift().scale(-1.0).to_complex();
    for i in 0..n {
        a[(i, i)] += Complex64::new(0.0, nu);
    }
    let b: Vec<Complex64> = model.input().iter().map(|&x| Complex64::new(x, 0.0)).collect();
    solve_linear(&a, &b).map_err(|e| match e {
        NumericsError::Singular { .. } | NumericsError::IllConditioned { .. } => {
            FilterError::Resonant(nu)
        }
        other => other.into(),
    })
}

/// Stationary mean and covariance of the filter driven by a record with
/// constant expectation `mean_a` and white noise of intensity `1/(4λ)`.
///
/// The covariance solves `MΣ + ΣMᵀ + bbᵀ/(4λ) = 0`, found by Kronecker
/// vectorization.
pub fn stationary_statistics(
    model: &FilterModel,
    lambda: f64,
    mean_a: f64,
) -> Result<(Vec<f64>, RealMatrix), FilterError> {
    if !(lambda > 0.0) {
        return Err(FilterError::NonPositiveStrength(lambda));
    }
    let m = model.drift();
    let abscissa = numerics::spectral_abscissa(m)?;
    if abscissa >= 0.0 {
        return Err(FilterError::NoStationaryState(abscissa));
    }
    let n = model.dim();
    let b = model.input();

    let mb = solve_linear(m, b)?;
    let mean = mb.iter().map(|x| -x * mean_a).collect();

    // (I ⊗ M + M ⊗ I) vec(Σ) = −vec(bbᵀ)/(4λ), row-major vec.
    let mut k = RealMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for l in 0..n {
                k[(row, l * n + j)] += m[(i, l)];
                k[(row, i * n + l)] += m[(j, l)];
            }
        }
    }
    let rhs: Vec<f64> = (0..n * n)
        .map(|idx| -b[idx / n] * b[idx % n] / (4.0 * lambda))
        .collect();
    let vec_sigma = solve_linear(&k, &rhs)?;
    let mut sigma = RealMatrix::new(n, n, vec_sigma)?;
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (sigma[(i, j)] + sigma[(j, i)]);
            sigma[(i, j)] = avg;
            sigma[(j, i)] = avg;
        }
    }
    Ok((mean, sigma))
}
