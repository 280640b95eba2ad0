//! Ensembles of independent trajectories and their order-deterministic
//! statistics.

use rayon::prelude::*;

use super::model::{QuantumState, SignalState, SystemModel};
use super::stepper::Stepper;
use super::TrajectoryError;
use crate::filters::FilterModel;
use crate::numerics::NoiseStream;

/// Ensemble-mean population of the top two Fock states above which a run is
/// flagged as truncation-limited.
pub const TRUNCATION_WARNING_LEVEL: f64 = 1e-3;

/// Trajectories are computed in parallel in blocks of this size and folded
/// into the statistics strictly in index order.
const BLOCK: usize = 64;

#[derive(Debug, Clone)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub n_traj: usize,
    pub base_seed: u64,
    /// Record every `record_stride` steps (step 0 included).
    pub record_stride: usize,
    /// Defaults to the ground state of `H₀`.
    pub initial_state: Option<QuantumState>,
    /// Defaults to all-zero signals.
    pub initial_signals: Option<SignalState>,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, n_steps: usize, n_traj: usize, base_seed: u64) -> Self {
        Self {
            dt,
            n_steps,
            n_traj,
            base_seed,
            record_stride: 1,
            initial_state: None,
            initial_signals: None,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    fn validate(&self) -> Result<(), TrajectoryError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(TrajectoryError::InvalidParameter {
                name: "dt",
                value: self.dt,
            });
        }
        if self.n_traj == 0 {
            return Err(TrajectoryError::InvalidParameter {
                name: "n_traj",
                value: 0.0,
            });
        }
        if self.record_stride == 0 {
            return Err(TrajectoryError::InvalidParameter {
                name: "record_stride",
                value: 0.0,
            });
        }
        Ok(())
    }

    fn record_steps(&self) -> Vec<usize> {
        (0..=self.n_steps).step_by(self.record_stride).collect()
    }
}

/// Running mean and central moments up to fourth order, updated one sample
/// at a time so the result depends only on the sample order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        let n1 = self.n;
        self.n += 1.0;
        let n = self.n;
        let delta = x - self.mean;
        let dn = delta / n;
        let dn2 = dn * dn;
        let term1 = delta * dn * n1;
        self.mean += dn;
        self.m4 += term1 * dn2 * (n * n - 3.0 * n + 3.0) + 6.0 * dn2 * self.m2 - 4.0 * dn * self.m3;
        self.m3 += term1 * dn * (n - 2.0) - 3.0 * dn * self.m2;
        self.m2 += term1;
    }

    fn variance(&self) -> f64 {
        if self.n > 1.0 {
            self.m2 / (self.n - 1.0)
        } else {
            0.0
        }
    }

    fn std_err(&self) -> f64 {
        if self.n > 1.0 {
            (self.variance() / self.n).sqrt()
        } else {
            0.0
        }
    }

    /// Standard error of the unbiased sample variance.
    fn variance_std_err(&self) -> f64 {
        let n = self.n;
        if n < 2.0 {
            return 0.0;
        }
        let s2 = self.variance();
        let mu4 = self.m4 / n;
        ((mu4 - (n - 3.0) / (n - 1.0) * s2 * s2) / n).max(0.0).sqrt()
    }
}

/// Per-time ensemble statistics of one scalar observable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Unbiased sample variance across trajectories.
    pub variance: Vec<f64>,
    pub variance_std_err: Vec<f64>,
}

impl SeriesStats {
    fn from_moments(ms: &[Moments]) -> Self {
        Self {
            mean: ms.iter().map(|m| m.mean).collect(),
            std_err: ms.iter().map(Moments::std_err).collect(),
            variance: ms.iter().map(Moments::variance).collect(),
            variance_std_err: ms.iter().map(Moments::variance_std_err).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub n_traj: usize,
    /// `⟨⟨H(G)⟩⟩` in units of the model's energy scale.
    pub energy: SeriesStats,
    /// `⟨A_k⟩` per channel.
    pub observables: Vec<SeriesStats>,
    /// `[channel][component]` signal statistics.
    pub signals: Vec<Vec<SeriesStats>>,
    /// Ensemble-mean population of the two highest basis states.
    pub top_population: Vec<f64>,
    pub max_top_population: f64,
    pub truncation_warning: bool,
}

/// Index layout of one trajectory's observation row.
struct Layout {
    channels: usize,
    filter_dim: usize,
}

impl Layout {
    fn width(&self) -> usize {
        2 + self.channels + self.channels * self.filter_dim
    }
}

fn run_one(
    model: &SystemModel,
    cfg: &TrajectoryConfig,
    init_state: &QuantumState,
    init_signals: &SignalState,
    index: usize,
    record_steps: &[usize],
    layout: &Layout,
) -> Result<Vec<f64>, TrajectoryError> {
    let mut state = init_state.clone();
    let mut signals = init_signals.clone();
    let mut noise = NoiseStream::new(cfg.base_seed, index as u64);
    let mut stepper = Stepper::new(model, cfg.dt)?;
    let n = model.dim();
    let width = layout.width();
    let mut out = vec![0.0; record_steps.len() * width];
    let mut next = 0;
    for step in 0..=cfg.n_steps {
        if next < record_steps.len() && record_steps[next] == step {
            let row = &mut out[next * width..(next + 1) * width];
            row[0] = stepper.energy(&state, &signals)?;
            let obs = stepper.observables(&state);
            row[1..1 + layout.channels].copy_from_slice(&obs);
            let mut idx = 1 + layout.channels;
            for ch in signals.channels() {
                row[idx..idx + layout.filter_dim].copy_from_slice(ch);
                idx += layout.filter_dim;
            }
            row[idx] = if n >= 2 {
                state.population(n - 1) + state.population(n - 2)
            } else {
                state.population(n - 1)
            };
            next += 1;
        }
        if step < cfg.n_steps {
            stepper
                .step(&mut state, &mut signals, &mut noise)
                .map_err(|e| e.in_trajectory(index))?;
        }
    }
    Ok(out)
}

/// Runs `cfg.n_traj` trajectories; trajectory `i` draws its noise from
/// `NoiseStream::new(cfg.base_seed, i)`.
///
/// The result is bit-identical for a given configuration regardless of the
/// number of worker threads.
pub fn run_ensemble(model: &SystemModel, cfg: &TrajectoryConfig) -> Result<TrajectoryRecord, TrajectoryError> {
    cfg.validate()?;
    let init_state = match &cfg.initial_state {
        Some(s) => {
            if s.dim() != model.dim() {
                return Err(TrajectoryError::DimensionMismatch {
                    expected: model.dim(),
                    got: s.dim(),
                });
            }
            s.clone()
        }
        None => QuantumState::ground_state(model.h0())?,
    };
    let layout = Layout {
        channels: model.n_channels(),
        filter_dim: model.filter().dim(),
    };
    let init_signals = match &cfg.initial_signals {
        Some(s) => {
            let ok = s.channels().len() == layout.channels
                && s.channels().iter().all(|c| c.len() == layout.filter_dim);
            if !ok {
                return Err(TrajectoryError::ChannelCount {
                    expected: layout.channels,
                    got: s.channels().len(),
                });
            }
            s.clone()
        }
        None => SignalState::zeros(layout.channels, layout.filter_dim),
    };
    let record_steps = cfg.record_steps();
    let width = layout.width();
    let n_rec = record_steps.len();
    let mut acc = vec![Moments::default(); n_rec * width];

    let mut start = 0;
    while start < cfg.n_traj {
        let end = (start + BLOCK).min(cfg.n_traj);
        let rows: Vec<Result<Vec<f64>, TrajectoryError>> = (start..end)
            .into_par_iter()
            .map(|i| run_one(model, cfg, &init_state, &init_signals, i, &record_steps, &layout))
            .collect();
        for row in rows {
            let row = row?;
            for (m, x) in acc.iter_mut().zip(&row) {
                m.push(*x);
            }
        }
        start = end;
    }

    let column = |c: usize| -> Vec<Moments> { (0..n_rec).map(|r| acc[r * width + c]).collect() };
    let energy = SeriesStats::from_moments(&column(0));
    let observables = (0..layout.channels)
        .map(|k| SeriesStats::from_moments(&column(1 + k)))
        .collect();
    let signals = (0..layout.channels)
        .map(|k| {
            (0..layout.filter_dim)
                .map(|c| SeriesStats::from_moments(&column(1 + layout.channels + k * layout.filter_dim + c)))
                .collect()
        })
        .collect();
    let top_population: Vec<f64> = column(width - 1).iter().map(|m| m.mean).collect();
    let max_top_population = top_population.iter().fold(0.0_f64, |a, &b| a.max(b));
    Ok(TrajectoryRecord {
        times: record_steps.iter().map(|&s| s as f64 * cfg.dt).collect(),
        n_traj: cfg.n_traj,
        energy,
        observables,
        signals,
        top_population,
        max_top_population,
        truncation_warning: max_top_population > TRUNCATION_WARNING_LEVEL,
    })
}

/// Statistics of filter signals driven by a record with frozen expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecord {
    pub times: Vec<f64>,
    pub n_traj: usize,
    pub components: Vec<SeriesStats>,
}

/// Integrates `dG = MG dt + b(a₀ dt + dW/√(4λ))` for `cfg.n_traj` independent
/// realizations started from zero (or `cfg.initial_signals`' first channel).
pub fn run_signal_ensemble(
    filter: &FilterModel,
    lambda: f64,
    frozen_mean: f64,
    cfg: &TrajectoryConfig,
) -> Result<SignalRecord, TrajectoryError> {
    cfg.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(TrajectoryError::InvalidParameter {
            name: "lambda",
            value: lambda,
        });
    }
    let dim = filter.dim();
    let g0 = match &cfg.initial_signals {
        Some(s) if s.channels().first().map(|c| c.len()) == Some(dim) => s.channels()[0].clone(),
        Some(_) => {
            return Err(TrajectoryError::ChannelCount {
                expected: 1,
                got: 0,
            })
        }
        None => vec![0.0; dim],
    };
    let record_steps = cfg.record_steps();
    let n_rec = record_steps.len();
    let m = filter.drift();
    let b = filter.input();
    let noise_scale = 1.0 / (4.0 * lambda).sqrt();
    let dt = cfg.dt;

    let one = |index: usize| -> Result<Vec<f64>, TrajectoryError> {
        let mut noise = NoiseStream::new(cfg.base_seed, index as u64);
        let mut g = g0.clone();
        let mut next_g = vec![0.0; dim];
        let mut out = vec![0.0; n_rec * dim];
        let mut next = 0;
        for step in 0..=cfg.n_steps {
            if next < n_rec && record_steps[next] == step {
                out[next * dim..(next + 1) * dim].copy_from_slice(&g);
                next += 1;
            }
            if step < cfg.n_steps {
                let z_dt = frozen_mean * dt + noise_scale * noise.wiener_increment(dt);
                for (i, o) in next_g.iter_mut().enumerate() {
                    let mg: f64 = m.row(i).iter().zip(&g).map(|(a, x)| a * x).sum();
                    *o = g[i] + mg * dt + b[i] * z_dt;
                }
                std::mem::swap(&mut g, &mut next_g);
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(TrajectoryError::NonFinite {
                        trajectory: Some(index),
                        step,
                    });
                }
            }
        }
        Ok(out)
    };

    let mut acc = vec![Moments::default(); n_rec * dim];
    let mut start = 0;
    while start < cfg.n_traj {
        let end = (start + BLOCK).min(cfg.n_traj);
        let rows: Vec<_> = (start..end).into_par_iter().map(one).collect();
        for row in rows {
            for (mm, x) in acc.iter_mut().zip(&row?) {
                mm.push(*x);
            }
        }
        start = end;
    }
    let components = (0..dim)
        .map(|c| {
            let col: Vec<Moments> = (0..n_rec).map(|r| acc[r * dim + c]).collect();
            SeriesStats::from_moments(&col)
        })
        .collect();
    Ok(SignalRecord {
        times: record_steps.iter().map(|&s| s as f64 * dt).collect(),
        n_traj: cfg.n_traj,
        components,
    })
}
