//! Euler–Maruyama step of the conditioned state and the filter signals.

use num_complex::Complex64;

use super::model::{HamiltonianCache, QuantumState, SignalState, SystemModel};
use super::sparse::SparseOp;
use super::TrajectoryError;
use crate::numerics::NoiseStream;

/// Reusable workspace for stepping one trajectory of `model`.
///
/// One step, for each channel `k` with observable `A_k` and increment
/// `dW_k ~ N(0, dt)`:
///
/// ```text
/// dρ  = −i[H(G), ρ] dt + Σ_k λ (A_k ρ A_k − ½{A_k², ρ}) dt
///       + Σ_k √λ dW_k (A_k ρ + ρ A_k − 2⟨A_k⟩ρ)
/// z_k dt = ⟨A_k⟩ dt + dW_k / √(4λ)
/// dG_k = M G_k dt + b z_k dt
/// ```
///
/// followed by re-Hermitization and trace renormalization of ρ.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    model: &'a SystemModel,
    dt: f64,
    ops: Vec<SparseOp>,
    hamiltonian: HamiltonianCache,
    steps_taken: usize,
    drho: Vec<Complex64>,
    y: Vec<Complex64>,
    ya: Vec<Complex64>,
    yat: Vec<Complex64>,
    w: Vec<Complex64>,
    v: Vec<Complex64>,
    dw: Vec<f64>,
    expectations: Vec<f64>,
    g_next: Vec<f64>,
}

fn adjoint_into(src: &[Complex64], out: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = src[i * n + j].conj();
        }
    }
}

impl<'a> Stepper<'a> {
    pub fn new(model: &'a SystemModel, dt: f64) -> Result<Self, TrajectoryError> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(TrajectoryError::InvalidParameter {
                name: "dt",
                value: dt,
            });
        }
        let n = model.dim();
        let zeros = vec![Complex64::new(0.0, 0.0); n * n];
        let k = model.n_channels();
        Ok(Self {
            model,
            dt,
            ops: model.measured().iter().map(SparseOp::from_dense).collect(),
            hamiltonian: HamiltonianCache::new(model),
            steps_taken: 0,
            drho: zeros.clone(),
            y: zeros.clone(),
            ya: zeros.clone(),
            yat: zeros.clone(),
            w: zeros.clone(),
            v: zeros,
            dw: vec![0.0; k],
            expectations: vec![0.0; k],
            g_next: vec![0.0; model.filter().dim()],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    /// `⟨A_k⟩` evaluated at the start of the last step.
    pub fn last_expectations(&self) -> &[f64] {
        &self.expectations
    }

    /// Draws one Wiener increment per channel from `noise` and advances.
    pub fn step(
        &mut self,
        state: &mut QuantumState,
        signals: &mut SignalState,
        noise: &mut NoiseStream,
    ) -> Result<(), TrajectoryError> {
        let dt = self.dt;
        let mut dw = std::mem::take(&mut self.dw);
        noise.fill_wiener(dt, &mut dw);
        let res = self.step_with_increments(state, signals, &dw);
        self.dw = dw;
        res
    }

    /// Advances with caller-supplied Wiener increments, one per channel.
    pub fn step_with_increments(
        &mut self,
        state: &mut QuantumState,
        signals: &mut SignalState,
        dw: &[f64],
    ) -> Result<(), TrajectoryError> {
        let model = self.model;
        let n = model.dim();
        let dt = self.dt;
        let lambda = model.lambda();
        let sqrt_l = lambda.sqrt();
        if dw.len() != model.n_channels() || signals.channels().len() != model.n_channels() {
            return Err(TrajectoryError::ChannelCount {
                expected: model.n_channels(),
                got: dw.len().min(signals.channels().len()),
            });
        }
        if state.dim() != n {
            return Err(TrajectoryError::DimensionMismatch {
                expected: n,
                got: state.dim(),
            });
        }

        let rho = state.as_mut_slice();

        // Hamiltonian part: −i(Hρ − (Hρ)†).
        let h = self.hamiltonian.update(model, signals)?;
        h.apply_left(rho, &mut self.y);
        let minus_i_dt = Complex64::new(0.0, -dt);
        for i in 0..n {
            for j in 0..n {
                self.drho[i * n + j] = minus_i_dt * (self.y[i * n + j] - self.y[j * n + i].conj());
            }
        }

        for (k, op) in self.ops.iter().enumerate() {
            op.apply_left(rho, &mut self.ya); // Aρ
            let a_k: f64 = (0..n).map(|i| self.ya[i * n + i].re).sum();
            self.expectations[k] = a_k;
            adjoint_into(&self.ya, &mut self.yat, n); // ρA
            op.apply_left(&self.yat, &mut self.w); // AρA
            op.apply_left(&self.ya, &mut self.v); // A²ρ
            let ldt = lambda * dt;
            let s = sqrt_l * dw[k];
            for i in 0..n {
                for j in 0..n {
                    let ij = i * n + j;
                    let anti = self.v[ij] + self.v[j * n + i].conj();
                    self.drho[ij] += ldt * (self.w[ij] - 0.5 * anti)
                        + s * (self.ya[ij] + self.yat[ij] - 2.0 * a_k * rho[ij]);
                }
            }
        }

        for (r, d) in rho.iter_mut().zip(&self.drho) {
            *r += d;
        }
        // Re-Hermitize, then renormalize the trace.
        for i in 0..n {
            rho[i * n + i].im = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (rho[i * n + j] + rho[j * n + i].conj());
                rho[i * n + j] = avg;
                rho[j * n + i] = avg.conj();
            }
        }
        let tr: f64 = (0..n).map(|i| rho[i * n + i].re).sum();
        let finite = tr.is_finite() && tr > 0.0 && rho.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite {
            return Err(TrajectoryError::NonFinite {
                trajectory: None,
                step: self.steps_taken,
            });
        }
        let inv = 1.0 / tr;
        for r in rho.iter_mut() {
            *r *= inv;
        }

        // Filters, driven by the record built from the same increments.
        let filter = model.filter();
        let m = filter.drift();
        let b = filter.input();
        let noise_scale = if lambda > 0.0 { 1.0 / (4.0 * lambda).sqrt() } else { 0.0 };
        for (k, g) in signals.channels_mut().iter_mut().enumerate() {
            let z_dt = self.expectations[k] * dt + noise_scale * dw[k];
            for (i, out) in self.g_next.iter_mut().enumerate() {
                let mg: f64 = m.row(i).iter().zip(g.iter()).map(|(a, x)| a * x).sum();
                *out = g[i] + mg * dt + b[i] * z_dt;
            }
            g.copy_from_slice(&self.g_next);
        }
        if !signals.is_finite() {
            return Err(TrajectoryError::NonFinite {
                trajectory: None,
                step: self.steps_taken,
            });
        }
        self.steps_taken += 1;
        Ok(())
    }

    /// `Tr(H(G) ρ)` divided by the model's energy scale.
    pub fn energy(&mut self, state: &QuantumState, signals: &SignalState) -> Result<f64, TrajectoryError> {
        let h = self.hamiltonian.update(self.model, signals)?;
        Ok(h.trace_with(state.matrix().as_slice()).re / self.model.energy_scale())
    }

    /// `⟨A_k⟩` for every channel at the current state.
    pub fn observables(&self, state: &QuantumState) -> Vec<f64> {
        self.ops
            .iter()
            .map(|op| op.trace_with(state.matrix().as_slice()).re)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filters::lowpass_cascade;
    use crate::numerics::ComplexMatrix;
    use crate::trajectory::build_truncated_oscillator;

    fn coherent(n: usize, alpha: Complex64) -> Vec<Complex64> {
        let mut psi = vec![Complex64::new(0.0, 0.0); n];
        let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for (k, amp) in psi.iter_mut().enumerate() {
            if k > 0 {
                c = c * alpha / (k as f64).sqrt();
            }
            *amp = c;
        }
        psi
    }

    #[test]
    fn unitary_limit_conserves_energy() {
        let n = 20;
        let filter = lowpass_cascade(&[1.0]).unwrap();
        let model = SystemModel::measured_oscillator(n, 1.0, 0.0, filter).unwrap();
        let mut state = QuantumState::pure(&coherent(n, Complex64::new(1.0, 0.5))).unwrap();
        let mut sig = SignalState::zeros(2, 1);
        let mut st = Stepper::new(&model, 1e-3).unwrap();
        let e0 = st.energy(&state, &sig).unwrap();
        st.step_with_increments(&mut state, &mut sig, &[0.0, 0.0]).unwrap();
        let e1 = st.energy(&state, &sig).unwrap();
        assert!((e1 - e0).abs() < 1e-8, "{e0} -> {e1}");
        for _ in 0..999 {
            st.step_with_increments(&mut state, &mut sig, &[0.0, 0.0]).unwrap();
        }
        assert!((st.energy(&state, &sig).unwrap() - e0).abs() < 1e-5);
        assert!((state.trace() - 1.0).abs() < 1e-14);
        assert!(state.matrix().hermiticity_defect() == 0.0);
    }

    #[test]
    fn purity_is_nearly_preserved() {
        let n = 15;
        let filter = lowpass_cascade(&[2.0]).unwrap();
        let model = SystemModel::measured_oscillator(n, 1.0, 1.0, filter).unwrap();
        let defect = |dt: f64, steps: usize| {
            let mut state = QuantumState::ground_state(model.h0()).unwrap();
            let mut sig = SignalState::zeros(2, 1);
            let mut st = Stepper::new(&model, dt).unwrap();
            let mut noise = NoiseStream::new(11, 0);
            for _ in 0..steps {
                st.step(&mut state, &mut sig, &mut noise).unwrap();
            }
            1.0 - state.purity()
        };
        let d1 = defect(1e-4, 1000);
        assert!(d1 < 5e-3, "purity defect {d1}");
        let d2 = defect(5e-5, 2000);
        assert!(d2 < d1, "{d2} !< {d1}");
    }

    #[test]
    fn record_uses_the_same_increment() {
        let n = 6;
        let filter = lowpass_cascade(&[3.0]).unwrap();
        let model = SystemModel::measured_oscillator(n, 1.0, 2.0, filter).unwrap();
        let mut state = QuantumState::ground_state(model.h0()).unwrap();
        let mut sig = SignalState::zeros(2, 1);
        let mut st = Stepper::new(&model, 1e-2).unwrap();
        st.step_with_increments(&mut state, &mut sig, &[0.1, -0.2]).unwrap();
        // From G = 0 and ⟨x⟩ = ⟨p⟩ = 0: G = b dW/√(4λ).
        assert!((sig.channels()[0][0] - 3.0 * 0.1 / 8.0_f64.sqrt()).abs() < 1e-14);
        assert!((sig.channels()[1][0] + 3.0 * 0.2 / 8.0_f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn dense_and_sparse_hamiltonians_agree() {
        let osc = build_truncated_oscillator(8, 1.0).unwrap();
        let filter = lowpass_cascade(&[2.0, 2.0]).unwrap();
        let trap = crate::trajectory::Feedback::ShiftedTrap { tap: 1, omega: 1.0 };
        let model = SystemModel::new(osc.h0.clone(), vec![osc.x.clone(), osc.p.clone()], 1.0, filter, trap)
            .unwrap();
        let sig = SignalState::new(vec![vec![0.1, 0.4], vec![-0.2, -0.3]]);
        let mut cache = HamiltonianCache::new(&model);
        let sparse = cache.update(&model, &sig).unwrap().to_dense();
        let dense: ComplexMatrix = model.hamiltonian(&sig).unwrap();
        assert!(sparse.sub(&dense).max_abs() < 1e-14);
    }
}
