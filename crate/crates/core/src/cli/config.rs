//! Flat TOML run configuration. Keys are the long flag names.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::args::{EvolveArgs, FilterArgs, PhaseArgs, ProtocolArgs, TrajectoryArgs};
use super::CliError;

/// TOML numbers may be written as integers or floats.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
}

impl Number {
    pub fn as_f64(self) -> f64 {
        match self {
            Number::Int(i) => i as f64,
            Number::Float(x) => x,
        }
    }
}

/// Every key accepted in a config file. Unknown keys are rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub protocol: Option<String>,
    pub lambda: Option<Number>,
    pub omega: Option<Number>,
    pub gamma: Option<Number>,
    #[serde(rename = "Omega")]
    pub big_omega: Option<Number>,
    pub filter: Option<String>,
    pub rates: Option<Vec<Number>>,
    pub coeffs: Option<Vec<Number>>,
    pub derivs: Option<Vec<Number>>,
    pub tmax: Option<Number>,
    pub points: Option<usize>,
    pub dt: Option<Number>,
    pub steps: Option<usize>,
    pub e0: Option<Number>,
    pub stride: Option<usize>,
    pub ntraj: Option<usize>,
    pub seed: Option<u64>,
    pub fock: Option<usize>,
    pub grid: Option<String>,
    pub output: Option<PathBuf>,
}

/// Reads and parses a config file. Parse errors carry the line and column.
pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse_config(text: &str) -> Result<FileConfig, String> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        match e.span() {
            Some(span) => {
                let line = text[..span.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}: {msg}")
            }
            None => msg,
        }
    })
}

fn num(x: Option<Number>) -> Option<f64> {
    x.map(Number::as_f64)
}

fn nums(x: &Option<Vec<Number>>) -> Option<Vec<f64>> {
    x.as_ref().map(|v| v.iter().map(|n| n.as_f64()).collect())
}

impl FileConfig {
    pub fn merge_protocol(&self, a: &mut ProtocolArgs) {
        a.protocol = a.protocol.take().or_else(|| self.protocol.clone());
        a.lambda = a.lambda.or(num(self.lambda));
        a.omega = a.omega.or(num(self.omega));
        a.gamma = a.gamma.or(num(self.gamma));
        a.big_omega = a.big_omega.or(num(self.big_omega));
        a.output = a.output.take().or_else(|| self.output.clone());
    }

    pub fn merge_filter(&self, a: &mut FilterArgs) {
        a.filter = a.filter.take().or_else(|| self.filter.clone());
        a.rates = a.rates.take().or_else(|| nums(&self.rates));
        a.gamma = a.gamma.or(num(self.gamma));
        a.big_omega = a.big_omega.or(num(self.big_omega));
        a.coeffs = a.coeffs.take().or_else(|| nums(&self.coeffs));
        a.derivs = a.derivs.take().or_else(|| nums(&self.derivs));
        a.tmax = a.tmax.or(num(self.tmax));
        a.points = a.points.or(self.points);
        a.output = a.output.take().or_else(|| self.output.clone());
    }

    pub fn merge_evolve(&self, a: &mut EvolveArgs) {
        self.merge_protocol(&mut a.protocol);
        a.dt = a.dt.or(num(self.dt));
        a.steps = a.steps.or(self.steps);
        a.e0 = a.e0.or(num(self.e0));
        a.stride = a.stride.or(self.stride);
    }

    pub fn merge_trajectory(&self, a: &mut TrajectoryArgs) {
        self.merge_protocol(&mut a.protocol);
        a.dt = a.dt.or(num(self.dt));
        a.steps = a.steps.or(self.steps);
        a.ntraj = a.ntraj.or(self.ntraj);
        a.seed = a.seed.or(self.seed);
        a.fock = a.fock.or(self.fock);
        a.stride = a.stride.or(self.stride);
    }

    pub fn merge_phase(&self, a: &mut PhaseArgs) {
        a.grid = a.grid.take().or_else(|| self.grid.clone());
        a.lambda = a.lambda.or(num(self.lambda));
        a.omega = a.omega.or(num(self.omega));
        a.output = a.output.take().or_else(|| self.output.clone());
    }
}
