//! Which cooling protocol reaches the lowest energy, over a (γ, Ω) grid.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{self, EnergyResult};
use crate::moments::{self, is_stable};
use crate::numerics;
use crate::output::{fmt12, parse_num};
use crate::protocol::{ProtocolKind, ProtocolParams};

/// Relative energy difference below which two protocols are considered tied.
pub const TIE_REL_TOL: f64 = 1e-9;
/// Cells cross-checked against moment-system steady states per sweep.
pub const SPOT_CHECKS: usize = 50;
/// Relative tolerance of that cross-check.
pub const SPOT_CHECK_REL_TOL: f64 = 1e-9;

pub const CSV_HEADER: [&str; 8] = ["gamma", "Omega", "E1", "E2", "E3", "Ebp", "winner", "flags"];

#[derive(Debug, Error)]
pub enum PhaseError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
    #[error("malformed phase CSV at record {record}: {reason}")]
    Malformed { record: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    /// Absolute γ values, strictly increasing.
    pub gamma_axis: Vec<f64>,
    /// Absolute Ω values, strictly increasing.
    pub omega_axis: Vec<f64>,
    pub lambda: f64,
    pub omega: f64,
    pub protocols: Vec<ProtocolKind>,
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| {
                    if i == 0 {
                        lo
                    } else if i == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * i as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

impl GridSpec {
    /// γ/λ ∈ [10⁻¹, 10²] and Ω/λ ∈ [10⁻¹, 10³], log-spaced, all protocols.
    pub fn default_with_size(n_gamma: usize, n_omega: usize, lambda: f64, omega: f64) -> Self {
        Self {
            gamma_axis: log_axis(0.1 * lambda, 100.0 * lambda, n_gamma),
            omega_axis: log_axis(0.1 * lambda, 1000.0 * lambda, n_omega),
            lambda,
            omega,
            protocols: ProtocolKind::ALL.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), PhaseError> {
        let axis_ok = |a: &[f64]| {
            !a.is_empty()
                && a.iter().all(|x| *x > 0.0 && x.is_finite())
                && a.windows(2).all(|w| w[0] < w[1])
        };
        if !axis_ok(&self.gamma_axis) {
            return Err(PhaseError::InvalidGrid(
                "gamma axis must be nonempty, positive and strictly increasing".into(),
            ));
        }
        if !axis_ok(&self.omega_axis) {
            return Err(PhaseError::InvalidGrid(
                "Omega axis must be nonempty, positive and strictly increasing".into(),
            ));
        }
        for (name, v) in [("lambda", self.lambda), ("omega", self.omega)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(PhaseError::InvalidGrid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.protocols.is_empty() {
            return Err(PhaseError::InvalidGrid("no protocols selected".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellFlag {
    Ok,
    Unstable,
    Unphysical,
    /// Closed form not applicable, protocol not swept, or moment system singular.
    Na,
}

impl CellFlag {
    pub fn label(self) -> &'static str {
        match self {
            CellFlag::Ok => "ok",
            CellFlag::Unstable => "unstable",
            CellFlag::Unphysical => "unphysical",
            CellFlag::Na => "na",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(CellFlag::Ok),
            "unstable" => Some(CellFlag::Unstable),
            "unphysical" => Some(CellFlag::Unphysical),
            "na" => Some(CellFlag::Na),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolOutcome {
    pub energy: EnergyResult,
    /// `None` when stability was not evaluated.
    pub stable: Option<bool>,
    pub flag: CellFlag,
}

impl ProtocolOutcome {
    fn na() -> Self {
        Self {
            energy: EnergyResult::not_applicable(),
            stable: None,
            flag: CellFlag::Na,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub gamma: f64,
    pub big_omega: f64,
    /// Indexed like [`ProtocolKind::ALL`].
    pub outcomes: [ProtocolOutcome; 4],
    pub winner: Option<ProtocolKind>,
}

impl PhaseCell {
    pub fn outcome(&self, kind: ProtocolKind) -> &ProtocolOutcome {
        &self.outcomes[kind_index(kind)]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SpotCheckReport {
    pub compared: usize,
    pub max_rel_error: f64,
    /// `(cell index, protocol, closed form, moment solve)` beyond tolerance.
    pub failures: Vec<(usize, ProtocolKind, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGridResult {
    pub spec: GridSpec,
    /// Row-major: Ω outer, γ inner.
    pub cells: Vec<PhaseCell>,
    pub spot_check: SpotCheckReport,
}

impl PhaseGridResult {
    pub fn cell(&self, i_omega: usize, i_gamma: usize) -> &PhaseCell {
        &self.cells[i_omega * self.spec.gamma_axis.len() + i_gamma]
    }
}

fn kind_index(kind: ProtocolKind) -> usize {
    ProtocolKind::ALL.iter().position(|&k| k == kind).expect("kind is listed")
}

fn evaluate(kind: ProtocolKind, lambda: f64, omega: f64, gamma: f64, big_omega: f64) -> ProtocolOutcome {
    let bo = kind.needs_big_omega().then_some(big_omega);
    let Ok(p) = ProtocolParams::new(kind, lambda, omega, gamma, bo) else {
        return ProtocolOutcome::na();
    };
    let energy = match analytics::energy(&p) {
        Ok(e) if e.is_applicable() => e,
        _ => return ProtocolOutcome::na(),
    };
    let stable = moments::build(&p)
        .ok()
        .and_then(|sys| numerics::eigenvalues(sys.matrix()).ok().map(|ev| is_stable(sys.matrix(), &ev)));
    let flag = match stable {
        None => CellFlag::Na,
        Some(false) => CellFlag::Unstable,
        Some(true) if !energy.physical => CellFlag::Unphysical,
        Some(true) => CellFlag::Ok,
    };
    ProtocolOutcome { energy, stable, flag }
}

/// Lowest-energy qualifying protocol; near-ties go to the simpler filter.
pub fn pick_winner(outcomes: &[ProtocolOutcome; 4]) -> Option<ProtocolKind> {
    let candidates: Vec<(ProtocolKind, f64)> = ProtocolKind::ALL
        .iter()
        .zip(outcomes)
        .filter(|(_, o)| o.flag == CellFlag::Ok)
        .map(|(&k, o)| (k, o.energy.energy_over_hw))
        .collect();
    let best = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    candidates
        .into_iter()
        .filter(|&(_, e)| e - best <= TIE_REL_TOL * best.abs())
        .min_by_key(|&(k, _)| k.simplicity_rank())
        .map(|(k, _)| k)
}

/// Evaluates every protocol on every grid cell.
///
/// Energies come from the closed forms; stability from the moment-system
/// spectrum. [`SPOT_CHECKS`] cells are additionally re-solved through the
/// moment systems and compared.
pub fn sweep(spec: &GridSpec) -> Result<PhaseGridResult, PhaseError> {
    spec.validate()?;
    let ng = spec.gamma_axis.len();
    let n_cells = ng * spec.omega_axis.len();
    let cells: Vec<PhaseCell> = (0..n_cells)
        .into_par_iter()
        .map(|idx| {
            let gamma = spec.gamma_axis[idx % ng];
            let big_omega = spec.omega_axis[idx / ng];
            let outcomes = ProtocolKind::ALL.map(|k| {
                if spec.protocols.contains(&k) {
                    evaluate(k, spec.lambda, spec.omega, gamma, big_omega)
                } else {
                    ProtocolOutcome::na()
                }
            });
            PhaseCell {
                gamma,
                big_omega,
                winner: pick_winner(&outcomes),
                outcomes,
            }
        })
        .collect();
    let mut result = PhaseGridResult {
        spec: spec.clone(),
        cells,
        spot_check: SpotCheckReport::default(),
    };
    result.spot_check = spot_check(&result, SPOT_CHECKS, 0);
    Ok(result)
}

/// Re-solves `n` randomly chosen cells through the moment systems and compares
/// with the closed-form energies of every stable, applicable protocol.
pub fn spot_check(result: &PhaseGridResult, n: usize, seed: u64) -> SpotCheckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SpotCheckReport::default();
    if result.cells.is_empty() {
        return report;
    }
    for _ in 0..n {
        let idx = rng.random_range(0..result.cells.len());
        let cell = &result.cells[idx];
        for (&kind, o) in ProtocolKind::ALL.iter().zip(&cell.outcomes) {
            if o.stable != Some(true) {
                continue;
            }
            let bo = kind.needs_big_omega().then_some(cell.big_omega);
            let Ok(p) = ProtocolParams::new(kind, result.spec.lambda, result.spec.omega, cell.gamma, bo) else {
                continue;
            };
            let closed = o.energy.energy_over_hw;
            let solved = moments::build(&p)
                .and_then(|s| moments::steady_state(&s))
                .map(|s| s.energy_over_hw)
                .unwrap_or(f64::NAN);
            let rel = ((solved - closed) / closed).abs();
            report.compared += 1;
            if rel.is_nan() || rel > SPOT_CHECK_REL_TOL {
                report.failures.push((idx, kind, closed, solved));
            }
            if rel.is_finite() {
                report.max_rel_error = report.max_rel_error.max(rel);
            } else {
                report.max_rel_error = f64::INFINITY;
            }
        }
    }
    report
}

pub fn write_phase_csv<W: Write>(result: &PhaseGridResult, writer: W) -> Result<(), PhaseError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for cell in &result.cells {
        let mut rec = vec![fmt12(cell.gamma), fmt12(cell.big_omega)];
        rec.extend(cell.outcomes.iter().map(|o| fmt12(o.energy.energy_over_hw)));
        rec.push(cell.winner.map_or("none", |k| k.name()).to_string());
        rec.push(
            cell.outcomes
                .iter()
                .map(|o| o.flag.label())
                .collect::<Vec<_>>()
                .join(";"),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the phase CSV to `path`.
pub fn export_phase_csv(result: &PhaseGridResult, path: &Path) -> Result<(), PhaseError> {
    let file = File::create(path)?;
    write_phase_csv(result, io::BufWriter::new(file))
}

/// One parsed row of a phase CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCsvRow {
    pub gamma: f64,
    pub big_omega: f64,
    /// E1, E2, E3, Ebp.
    pub energies: [f64; 4],
    pub winner: Option<ProtocolKind>,
    pub flags: [CellFlag; 4],
}

pub fn read_phase_csv(path: &Path) -> Result<Vec<PhaseCsvRow>, PhaseError> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(PhaseError::Malformed {
            record: 0,
            reason: format!("unexpected header {header:?}"),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |reason: String| PhaseError::Malformed { record: i + 1, reason };
        let num = |j: usize| parse_num(&rec[j]).ok_or_else(|| bad(format!("bad number '{}'", &rec[j])));
        let winner = match &rec[6] {
            "none" => None,
            s => Some(s.parse::<ProtocolKind>().map_err(|e| bad(e.to_string()))?),
        };
        let flag_parts: Vec<&str> = rec[7].split(';').collect();
        if flag_parts.len() != 4 {
            return Err(bad(format!("expected 4 flags, got '{}'", &rec[7])));
        }
        let mut flags = [CellFlag::Na; 4];
        for (f, s) in flags.iter_mut().zip(&flag_parts) {
            *f = CellFlag::parse(s).ok_or_else(|| bad(format!("unknown flag '{s}'")))?;
        }
        rows.push(PhaseCsvRow {
            gamma: num(0)?,
            big_omega: num(1)?,
            energies: [num(2)?, num(3)?, num(4)?, num(5)?],
            winner,
            flags,
        });
    }
    Ok(rows)
}
